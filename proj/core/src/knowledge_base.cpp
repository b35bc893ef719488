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

#include "mixdial/knowledge_base.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "mixdial/errors.hpp"
#include "mixdial/random.hpp"

namespace mixdial {

using nlohmann::json;

KnowledgeBase::KnowledgeBase(std::vector<Entity> entities) : entities_(std::move(entities)) {
  std::stable_sort(entities_.begin(), entities_.end(), [](const Entity& a, const Entity& b) {
    return std::tie(a.domain, a.name) < std::tie(b.domain, b.name);
  });
}

const Entity* KnowledgeBase::find(std::string_view domain, std::string_view name) const {
  const std::string key = fold_value(name);
  for (const auto& e : entities_)
    if (e.domain == domain && fold_value(e.name) == key) return &e;
  return nullptr;
}

std::vector<const Entity*> KnowledgeBase::in_domain(std::string_view domain) const {
  std::vector<const Entity*> out;
  for (const auto& e : entities_)
    if (e.domain == domain) out.push_back(&e);
  return out;
}

std::vector<std::string> KnowledgeBase::domains() const {
  std::set<std::string> d;
  for (const auto& e : entities_) d.insert(e.domain);
  return {d.begin(), d.end()};
}

std::vector<std::string> KnowledgeBase::problems() const {
  std::vector<std::string> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& e : entities_) {
    if (!seen.insert({e.domain, fold_value(e.name)}).second)
      out.push_back("duplicate entity '" + e.name + "' in " + e.domain);
    const Tokens name = split_tokens(e.name);
    for (std::size_t i = 0; i < e.snippets.size(); ++i)
      if (find_run(e.snippets[i], name) == e.snippets[i].size())
        out.push_back(e.name + ": snippet " + std::to_string(i) + " does not reference its entity");
    for (const auto& qa : e.qa) {
      auto it = e.attributes.find(qa.slot);
      if (it == e.attributes.end())
        out.push_back(e.name + ": qa grounded in missing attribute '" + qa.slot + "'");
      else if (find_run(qa.answer, split_tokens(it->second)) == qa.answer.size())
        out.push_back(e.name + ": qa answer does not contain the attribute value");
    }
  }
  return out;
}

json KnowledgeBase::to_json() const {
  json doc;
  doc["version"] = 1;
  doc["entities"] = json::array();
  for (const auto& e : entities_) {
    json j;
    j["name"] = e.name;
    j["domain"] = e.domain;
    j["attributes"] = e.attributes;
    j["snippets"] = json::array();
    for (const auto& s : e.snippets) j["snippets"].push_back(join_tokens(s));
    j["qa"] = json::array();
    for (const auto& q : e.qa)
      j["qa"].push_back({{"question", join_tokens(q.question)}, {"answer", join_tokens(q.answer)}, {"slot", q.slot}});
    doc["entities"].push_back(std::move(j));
  }
  return doc;
}

KnowledgeBase KnowledgeBase::from_json(const json& doc) {
  try {
    std::vector<Entity> entities;
    for (const auto& j : doc.at("entities")) {
      Entity e;
      e.name = j.at("name").get<std::string>();
      e.domain = j.at("domain").get<std::string>();
      e.attributes = j.at("attributes").get<SlotMap>();
      for (const auto& s : j.at("snippets")) e.snippets.push_back(split_tokens(s.get<std::string>()));
      for (const auto& q : j.at("qa"))
        e.qa.push_back({split_tokens(q.at("question").get<std::string>()),
                        split_tokens(q.at("answer").get<std::string>()), q.at("slot").get<std::string>()});
      entities.push_back(std::move(e));
    }
    return KnowledgeBase(std::move(entities));
  } catch (const json::exception& e) {
    throw DataError(std::string("knowledge base: ") + e.what());
  }
}

namespace {

const std::map<std::string, std::vector<std::string>>& head_nouns() {
  static const std::map<std::string, std::vector<std::string>> kNouns = {
      {"hotel", {"inn", "hotel", "lodge"}},
      {"attraction", {"park", "hills", "temple", "gardens"}},
      {"restaurant", {"kitchen", "bistro", "diner"}},
      {"food", {"stew", "buns", "soup", "cake"}},
      {"movie", {"legend", "journey", "story"}},
  };
  return kNouns;
}

const std::map<std::string, std::vector<std::string>>& features() {
  static const std::map<std::string, std::vector<std::string>> kFeatures = {
      {"hotel", {"garden view", "rooftop pool", "quiet rooms", "old courtyard"}},
      {"attraction", {"maple leaves", "stone bridges", "ancient trees", "sunrise views"}},
      {"restaurant", {"open kitchen", "river view", "family recipes"}},
      {"food", {"crispy skin", "rich broth", "long history"}},
      {"movie", {"moving soundtrack", "bold visuals", "clever plot"}},
  };
  return kFeatures;
}

const std::vector<std::string>& groups() {
  static const std::vector<std::string> kGroups = {"families", "couples", "students", "travelers", "locals"};
  return kGroups;
}

const std::vector<std::string>& syllables() {
  static const std::vector<std::string> kSyl = {"ka", "lo", "mi", "ra", "ve", "su", "to", "ni",
                                                "pe", "da", "zu", "ri", "no", "ba", "te", "yo"};
  return kSyl;
}

}  // namespace

KnowledgeBase build_kb(const GeneratorConfig& config, const Ontology& ontology, std::uint64_t seed) {
  Rng rng(seed);
  std::set<std::string> value_tokens;
  for (const auto& [_, pool] : config.values)
    for (const auto& v : pool)
      for (const auto& t : split_tokens(v)) value_tokens.insert(t);

  std::vector<Entity> entities;
  for (const auto& [domain, count] : config.entity_counts) {
    const DomainSchema* schema = ontology.find(domain);
    if (!schema || schema->is_general())
      throw ConfigError("generator config: unknown domain '" + domain + "'");
    if (count <= 0) throw ConfigError("generator config: domain '" + domain + "' has no entities");
    for (const auto& slot : schema->attributes)
      if (!config.values.count(slot) || config.values.at(slot).empty())
        throw ConfigError("generator config: no value pool for attribute '" + slot + "'");
    const auto noun_it = head_nouns().find(domain);
    const std::vector<std::string> nouns =
        noun_it == head_nouns().end() ? std::vector<std::string>{domain} : noun_it->second;
    const auto feat_it = features().find(domain);
    const std::vector<std::string> feats =
        feat_it == features().end() ? std::vector<std::string>{"fine details"} : feat_it->second;

    std::set<std::string> names;
    for (int i = 0; i < count; ++i) {
      std::string name;
      for (int attempt = 0;; ++attempt) {
        std::string word;
        const int n = 2 + static_cast<int>(rng.below(attempt > 50 ? 3 : 2));
        for (int s = 0; s < n; ++s) word += rng.pick(syllables());
        if (value_tokens.count(word)) continue;
        name = word + " " + rng.pick(nouns);
        if (names.insert(name).second) break;
      }
      Entity e;
      e.name = name;
      e.domain = domain;
      for (const auto& slot : schema->attributes) e.attributes[slot] = rng.pick(config.values.at(slot));
      const Tokens name_tokens = split_tokens(name);
      auto sentence = [&](std::initializer_list<std::string_view> tail) {
        Tokens s = name_tokens;
        for (auto part : tail)
          for (auto& t : split_tokens(part)) s.push_back(std::move(t));
        return s;
      };
      for (int k = 0; k < config.snippets_per_entity; ++k) {
        if (k % 2 == 0)
          e.snippets.push_back(sentence({"is known for its", rng.pick(feats)}));
        else
          e.snippets.push_back(sentence({"is popular with", rng.pick(groups())}));
      }
      std::vector<std::string> slots = schema->attributes;
      rng.shuffle(slots);
      for (int k = 0; k < config.qa_per_entity && k < static_cast<int>(slots.size()); ++k) {
        const std::string& slot = slots[static_cast<std::size_t>(k)];
        QaPair qa;
        qa.slot = slot;
        qa.question = split_tokens("what is the " + slot + " of " + name + " ?");
        qa.answer = split_tokens("the " + slot + " of " + name + " is " + e.attributes.at(slot));
        e.qa.push_back(std::move(qa));
      }
      entities.push_back(std::move(e));
    }
  }
  return KnowledgeBase(std::move(entities));
}

std::string attribute_ref(const Entity& e, std::string_view slot) {
  return e.domain + "/" + e.name + "/attr/" + std::string(slot);
}

std::string snippet_ref(const Entity& e, std::size_t index) {
  return e.domain + "/" + e.name + "/snippet/" + std::to_string(index);
}

std::vector<KnowledgeItem> retrieve_coarse_knowledge(const DialogState& state, const KnowledgeBase& kb) {
  std::vector<const Entity*> mentioned;
  for (const auto& [domain, ds] : state.domains)
    for (const auto& [name, _] : ds.entities)
      if (const Entity* e = kb.find(domain, name)) mentioned.push_back(e);
  std::sort(mentioned.begin(), mentioned.end(), [](const Entity* a, const Entity* b) {
    return std::tie(a->name, a->domain) < std::tie(b->name, b->domain);
  });
  mentioned.erase(std::unique(mentioned.begin(), mentioned.end()), mentioned.end());

  std::vector<KnowledgeItem> out;
  for (const Entity* e : mentioned) {
    const Tokens name = split_tokens(e->name);
    for (const auto& [slot, value] : e->attributes) {
      KnowledgeItem item{e->domain, e->name, slot, 0, name};
      item.tokens.push_back(slot);
      for (auto& t : split_tokens(value)) item.tokens.push_back(std::move(t));
      out.push_back(std::move(item));
    }
    for (std::size_t i = 0; i < e->snippets.size(); ++i)
      out.push_back({e->domain, e->name, "", i, e->snippets[i]});
  }
  return out;
}

}  // namespace mixdial
