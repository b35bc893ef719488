// Copyright 2026 The mixdial Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mixdial/templates.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <set>

#include <nlohmann/json.hpp>

#include "mixdial/errors.hpp"
#include "mixdial/random.hpp"

namespace mixdial {

using nlohmann::json;

std::string SubScenario::kind() const { return std::string(to_string(type)) + ":" + goal; }

namespace {

bool has(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::string kind_of(DialogType t, std::string_view g) { return std::string(to_string(t)) + ":" + std::string(g); }

struct KindInfo {
  DialogType type;
  std::string goal;
};

std::optional<KindInfo> split_kind(const std::string& kind) {
  auto colon = kind.find(':');
  if (colon == std::string::npos) return std::nullopt;
  auto type = parse_dialog_type(kind.substr(0, colon));
  if (!type) return std::nullopt;
  return KindInfo{*type, kind.substr(colon + 1)};
}

}  // namespace

TransitionRules TransitionRules::defaults() {
  const std::string greet = kind_of(DialogType::chitchat, goal::greeting);
  const std::string decide = kind_of(DialogType::chitchat, goal::decision);
  const std::string interrupt = kind_of(DialogType::chitchat, goal::interrupt);
  const std::string bye = kind_of(DialogType::chitchat, goal::farewell);
  const std::string seek = kind_of(DialogType::task, goal::seek);
  const std::string book = kind_of(DialogType::task, goal::book);
  const std::string discuss = kind_of(DialogType::knowledge, goal::discuss);
  const std::string ask = kind_of(DialogType::qa, goal::question);

  TransitionRules r;
  r.starts = {greet, seek};
  r.pairs = {{greet, decide},   {greet, seek},     {decide, seek},     {seek, discuss},  {seek, ask},
             {seek, book},      {seek, seek},      {seek, interrupt},  {discuss, book},  {discuss, ask},
             {discuss, seek},   {discuss, bye},    {ask, book},        {ask, discuss},   {ask, seek},
             {ask, bye},        {book, seek},      {book, discuss},    {book, bye},      {interrupt, book},
             {interrupt, seek}, {interrupt, discuss}, {interrupt, ask}};
  r.needs_known_entity = {discuss, ask, book};
  r.introduces_entity = {seek};
  r.interrupt_kind = interrupt;
  return r;
}

TransitionRules TransitionRules::from_json(const json& doc) {
  try {
    TransitionRules r;
    r.starts = doc.at("starts").get<std::vector<std::string>>();
    for (const auto& p : doc.at("pairs")) r.pairs.push_back({p.at(0).get<std::string>(), p.at(1).get<std::string>()});
    r.needs_known_entity = doc.value("needs_known_entity", std::vector<std::string>{});
    r.introduces_entity = doc.value("introduces_entity", std::vector<std::string>{});
    r.interrupt_kind = doc.value("interrupt_kind", std::string{});
    return r;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("transition rules: ") + e.what());
  }
}

json TransitionRules::to_json() const {
  json pairs_doc = json::array();
  for (const auto& p : pairs) pairs_doc.push_back({p.from, p.to});
  return {{"starts", starts},
          {"pairs", pairs_doc},
          {"needs_known_entity", needs_known_entity},
          {"introduces_entity", introduces_entity},
          {"interrupt_kind", interrupt_kind}};
}

bool TransitionRules::allows(const std::string& from, const std::string& to) const {
  return std::any_of(pairs.begin(), pairs.end(), [&](const TransitionRule& r) { return r.from == from && r.to == to; });
}

bool TransitionRules::is_start(const std::string& kind) const { return has(starts, kind); }

bool check_template(const Template& t, const TransitionRules& rules) {
  if (t.steps.size() < 2) return false;
  std::set<DialogType> types;
  for (const auto& s : t.steps) types.insert(s.type);
  if (types.size() < 2) return false;
  if (!rules.is_start(t.steps.front().kind())) return false;
  std::set<std::pair<std::string, std::string>> introduced;
  for (std::size_t i = 0; i < t.steps.size(); ++i) {
    const auto& s = t.steps[i];
    const std::string kind = s.kind();
    if (i > 0 && !rules.allows(t.steps[i - 1].kind(), kind)) return false;
    if (s.type != DialogType::chitchat && s.domain.empty()) return false;
    const auto key = std::make_pair(s.domain, fold_value(s.entity));
    if (has(rules.needs_known_entity, kind)) {
      if (s.entity.empty() || !introduced.count(key)) return false;
    }
    if (has(rules.introduces_entity, kind)) {
      if (s.entity.empty()) return false;
      introduced.insert(key);
    }
  }
  return true;
}

namespace {

/// All kind sequences in [min, max] steps that follow the rules, skipping the
/// interrupt kind and requiring an introducing step before any step that
/// needs a known entity.
std::vector<std::vector<std::string>> skeletons(const TransitionRules& rules, int min_steps, int max_steps) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> path;
  std::function<void(bool)> dfs = [&](bool has_intro) {
    if (static_cast<int>(path.size()) >= min_steps) {
      std::set<std::string> types;
      for (const auto& k : path) types.insert(k.substr(0, k.find(':')));
      if (types.size() >= 2) out.push_back(path);
    }
    if (static_cast<int>(path.size()) == max_steps) return;
    for (const auto& p : rules.pairs) {
      if (p.from != path.back() || p.to == rules.interrupt_kind) continue;
      if (has(rules.needs_known_entity, p.to) && !has_intro) continue;
      path.push_back(p.to);
      dfs(has_intro || has(rules.introduces_entity, p.to));
      path.pop_back();
    }
  };
  for (const auto& s : rules.starts) {
    if (s == rules.interrupt_kind || has(rules.needs_known_entity, s)) continue;
    path = {s};
    dfs(has(rules.introduces_entity, s));
  }
  return out;
}

std::optional<Template> instantiate(const std::vector<std::string>& skeleton, const KnowledgeBase& kb,
                                    const Ontology& ontology, const TransitionRules& rules, Rng& rng,
                                    const EnumerateOptions& options) {
  const auto domains = kb.domains();
  if (domains.empty()) return std::nullopt;
  Template t;
  std::vector<const Entity*> introduced;
  std::string last_seek_domain;
  for (const auto& kind : skeleton) {
    auto info = split_kind(kind);
    if (!info) return std::nullopt;
    SubScenario s;
    s.type = info->type;
    s.goal = info->goal;
    s.domain = std::string(kGeneralDomain);
    const bool introduces = has(rules.introduces_entity, kind);
    const bool needs = has(rules.needs_known_entity, kind);
    if (introduces) {
      std::string domain = rng.pick(domains);
      if (domain == last_seek_domain && domains.size() > 1) domain = rng.pick(domains);
      last_seek_domain = domain;
      auto pool = kb.in_domain(domain);
      std::erase_if(pool, [&](const Entity* e) { return std::find(introduced.begin(), introduced.end(), e) != introduced.end(); });
      if (pool.empty()) return std::nullopt;
      const Entity* e = rng.pick(pool);
      s.domain = domain;
      s.entity = e->name;
      const DomainSchema* schema = ontology.find(domain);
      std::vector<std::string> slots;
      for (const auto& slot : schema->informable)
        if (e->attributes.count(slot)) slots.push_back(slot);
      rng.shuffle(slots);
      const std::size_t n = std::min<std::size_t>(slots.size(), 1 + rng.below(2));
      for (std::size_t k = 0; k < n; ++k) s.constraints[slots[k]] = e->attributes.at(slots[k]);
      s.outcome = rng.chance(0.3) ? "reject-first" : "accept";
      introduced.push_back(e);
    } else if (needs) {
      if (introduced.empty()) return std::nullopt;
      std::vector<const Entity*> pool = introduced;
      if (info->goal == goal::book) {
        std::erase_if(pool, [&](const Entity* e) {
          const DomainSchema* schema = ontology.find(e->domain);
          return !schema || !schema->bookable();
        });
        if (pool.empty()) return std::nullopt;
      }
      const Entity* e = rng.chance(0.75) ? pool.back() : rng.pick(pool);
      s.domain = e->domain;
      s.entity = e->name;
      s.outcome = info->goal == goal::book ? "booked" : info->goal == goal::discuss ? "interested" : "answered";
    } else {
      s.outcome = info->goal == goal::farewell ? "ended" : info->goal == goal::decision ? "agreed" : "greeted";
    }
    t.steps.push_back(std::move(s));
  }

  if (!rules.interrupt_kind.empty() && options.interrupt_probability > 0) {
    auto info = split_kind(rules.interrupt_kind);
    for (std::size_t i = 0; i + 1 < t.steps.size() && info; ++i) {
      if (t.steps[i].goal != goal::seek) continue;
      if (!rules.allows(t.steps[i].kind(), rules.interrupt_kind) ||
          !rules.allows(rules.interrupt_kind, t.steps[i + 1].kind()))
        continue;
      if (!rng.chance(options.interrupt_probability)) continue;
      SubScenario s;
      s.type = info->type;
      s.goal = info->goal;
      s.domain = std::string(kGeneralDomain);
      s.outcome = "resumed";
      t.steps.insert(t.steps.begin() + static_cast<std::ptrdiff_t>(i) + 1, std::move(s));
      break;
    }
  }
  if (!check_template(t, rules)) return std::nullopt;
  return t;
}

}  // namespace

std::vector<Template> enumerate_templates(const KnowledgeBase& kb, const Ontology& ontology,
                                          const TransitionRules& rules, std::uint64_t seed, int n,
                                          const EnumerateOptions& options) {
  std::vector<Template> out;
  if (kb.empty() || rules.empty() || n <= 0) return out;
  auto shapes = skeletons(rules, options.min_steps, options.max_steps);
  if (shapes.empty()) return out;
  Rng rng(seed);
  rng.shuffle(shapes);
  std::set<std::string> seen;
  const long budget = static_cast<long>(n) * options.attempts_per_template;
  std::size_t cursor = 0;
  for (long attempt = 0; attempt < budget && static_cast<int>(out.size()) < n; ++attempt) {
    const auto& shape = shapes[cursor++ % shapes.size()];
    auto t = instantiate(shape, kb, ontology, rules, rng, options);
    if (!t) continue;
    const std::string key = template_to_json(*t).at("steps").dump();
    if (!seen.insert(key).second) continue;
    char id[16];
    std::snprintf(id, sizeof id, "t%05zu", out.size());
    t->id = id;
    t->seed = derive_seed(seed, out.size());
    out.push_back(std::move(*t));
  }
  return out;
}

json template_to_json(const Template& t) {
  json steps = json::array();
  for (const auto& s : t.steps)
    steps.push_back({{"type", std::string(to_string(s.type))},
                     {"goal", s.goal},
                     {"domain", s.domain},
                     {"entity", s.entity},
                     {"constraints", s.constraints},
                     {"outcome", s.outcome}});
  return {{"id", t.id}, {"seed", t.seed}, {"steps", steps}};
}

Template template_from_json(const json& doc) {
  try {
    Template t;
    t.id = doc.at("id").get<std::string>();
    t.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& j : doc.at("steps")) {
      SubScenario s;
      auto type = parse_dialog_type(j.at("type").get<std::string>());
      if (!type) throw DataError("template " + t.id + ": unknown dialog type");
      s.type = *type;
      s.goal = j.at("goal").get<std::string>();
      s.domain = j.at("domain").get<std::string>();
      s.entity = j.at("entity").get<std::string>();
      s.constraints = j.at("constraints").get<SlotMap>();
      s.outcome = j.at("outcome").get<std::string>();
      t.steps.push_back(std::move(s));
    }
    return t;
  } catch (const json::exception& e) {
    throw DataError(std::string("template: ") + e.what());
  }
}

}  // namespace mixdial
