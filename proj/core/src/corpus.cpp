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

#include "mixdial/corpus.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mixdial/errors.hpp"
#include "mixdial/linearize.hpp"
#include "mixdial/random.hpp"
#include "mixdial/simulator.hpp"

namespace mixdial {

using nlohmann::json;

namespace {

// Seed streams per split.
enum Stream : std::uint64_t { kb_stream = 1, template_stream = 2, train_stream = 3, dev_stream = 4,
                              test_stream = 5, external_stream = 16 };

std::string session_id(std::string_view prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", i);
  return std::string(prefix) + "-" + buf;
}

std::vector<DialogSession> simulate_split(std::string_view prefix, int n, const std::vector<Template>& pool,
                                          const KnowledgeBase& kb, const Ontology& ontology,
                                          const GeneratorConfig& config, std::uint64_t seed) {
  std::vector<DialogSession> out;
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    const Template& t = pool[rng.below(pool.size())];
    DialogSession s = simulate_dialog(t, kb, ontology, config, derive_seed(seed, static_cast<std::uint64_t>(i)));
    s.id = session_id(prefix, static_cast<std::size_t>(i));
    out.push_back(std::move(s));
  }
  return out;
}

SubScenario topic_step(DialogType type, std::string_view g, const Entity& e, std::string outcome) {
  SubScenario s;
  s.type = type;
  s.goal = std::string(g);
  s.domain = e.domain;
  s.entity = e.name;
  s.outcome = std::move(outcome);
  return s;
}

SubScenario chat_step(std::string_view g, std::string outcome) {
  SubScenario s;
  s.type = DialogType::chitchat;
  s.goal = std::string(g);
  s.domain = std::string(kGeneralDomain);
  s.outcome = std::move(outcome);
  return s;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::filesystem::path& path) {
  try {
    return json::parse(slurp(path));
  } catch (const json::exception& e) {
    throw DataError(path.filename().string() + ": malformed json (" + e.what() + ")");
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

}  // namespace

Template single_type_template(DialogType type, const KnowledgeBase& kb, const Ontology& ontology,
                              std::uint64_t seed) {
  Rng rng(seed);
  Template t;
  t.seed = seed;
  if (type == DialogType::chitchat) {
    t.steps.push_back(chat_step(goal::greeting, "greeted"));
    t.steps.push_back(chat_step(goal::interrupt, "resumed"));
    t.steps.push_back(chat_step(goal::farewell, "ended"));
    return t;
  }
  if (kb.empty()) throw ConfigError("single_type_template: empty knowledge base");
  const auto& all = kb.entities();
  auto pick = [&](auto pred) -> const Entity* {
    std::vector<const Entity*> pool;
    for (const auto& e : all)
      if (pred(e)) pool.push_back(&e);
    return pool.empty() ? nullptr : rng.pick(pool);
  };
  const int topics = 2;
  for (int k = 0; k < topics; ++k) {
    if (type == DialogType::task) {
      const Entity* e = pick([&](const Entity& x) {
        const DomainSchema* s = ontology.find(x.domain);
        return s && s->bookable();
      });
      if (!e) e = &all[rng.below(all.size())];
      SubScenario seek = topic_step(type, goal::seek, *e, "accept");
      const DomainSchema* schema = ontology.find(e->domain);
      std::vector<std::string> slots;
      for (const auto& slot : schema->informable)
        if (e->attributes.count(slot)) slots.push_back(slot);
      rng.shuffle(slots);
      const std::size_t n = std::min<std::size_t>(slots.size(), 1 + rng.below(2));
      for (std::size_t i = 0; i < n; ++i) seek.constraints[slots[i]] = e->attributes.at(slots[i]);
      t.steps.push_back(std::move(seek));
      if (schema->bookable()) t.steps.push_back(topic_step(type, goal::book, *e, "booked"));
    } else {
      const Entity* e = &all[rng.below(all.size())];
      if (type == DialogType::knowledge)
        t.steps.push_back(topic_step(type, goal::discuss, *e, "interested"));
      else
        t.steps.push_back(topic_step(type, goal::question, *e, "answered"));
    }
  }
  return t;
}

GeneratedCorpus generate_corpus(const GeneratorConfig& config, const Ontology& ontology,
                                const TransitionRules& rules) {
  if (auto p = ontology.problems(); !p.empty()) throw ConfigError("ontology: " + p.front());
  if (config.train_sessions < 0 || config.dev_sessions < 0 || config.test_sessions < 0 || config.external_sessions < 0)
    throw ConfigError("session counts must be non-negative");
  GeneratedCorpus c;
  c.config = config;
  c.ontology = ontology;
  c.rules = rules;
  c.kb = build_kb(config, ontology, derive_seed(config.seed, kb_stream));

  EnumerateOptions opts;
  opts.min_steps = config.template_min_steps;
  opts.max_steps = config.template_max_steps;
  opts.interrupt_probability = config.style.interrupt_probability;
  c.templates = enumerate_templates(c.kb, ontology, rules, derive_seed(config.seed, template_stream),
                                    config.template_pool, opts);
  if (c.templates.empty()) throw ConfigError("no template satisfies the transition rules");

  c.split.train = simulate_split("train", config.train_sessions, c.templates, c.kb, ontology, config,
                                 derive_seed(config.seed, train_stream));
  c.split.dev = simulate_split("dev", config.dev_sessions, c.templates, c.kb, ontology, config,
                               derive_seed(config.seed, dev_stream));
  c.split.test = simulate_split("test", config.test_sessions, c.templates, c.kb, ontology, config,
                                derive_seed(config.seed, test_stream));

  for (auto type : kDialogTypes) {
    const std::uint64_t seed = derive_seed(config.seed, external_stream + static_cast<std::uint64_t>(type));
    const std::string prefix = "ext-" + std::string(to_string(type));
    auto& out = c.split.external[type];
    for (int i = 0; i < config.external_sessions; ++i) {
      const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(i));
      Template t = single_type_template(type, c.kb, ontology, s);
      t.id = session_id(prefix, static_cast<std::size_t>(i));
      DialogSession d = simulate_dialog(t, c.kb, ontology, config, derive_seed(s, 1));
      d.id = t.id;
      out.push_back(std::move(d));
    }
  }
  return c;
}

Vocabulary build_vocabulary(const KnowledgeBase& kb, const Ontology& ontology, const CorpusSplit& split) {
  std::set<std::string> content;
  auto add = [&](const Tokens& ts) {
    for (const auto& t : ts) content.insert(t);
  };
  auto add_text = [&](const std::string& s) { add(split_tokens(s)); };
  auto add_state = [&](const DialogState& st) {
    for (const auto& [slot, v] : st.general) add_text(v);
    for (const auto& [d, ds] : st.domains) {
      for (const auto& [slot, v] : ds.semi) add_text(v);
      for (const auto& [name, es] : ds.entities) {
        add_text(name);
        for (const auto& [slot, v] : es.attributes) add_text(v);
      }
      for (const auto& o : ds.booked)
        for (const auto& [slot, v] : o.slots) add_text(v);
    }
  };
  auto add_sessions = [&](const std::vector<DialogSession>& sessions) {
    for (const auto& s : sessions)
      for (const auto& t : s.turns) {
        add(t.utterance);
        add_state(t.state);
        for (const auto& item : t.act.items) add_text(item.value);
      }
  };

  for (const auto& d : ontology.domains()) {
    content.insert(d.name);
    for (const auto& slot : d.slots()) content.insert(slot);
    for (const auto& i : d.intents) content.insert(i);
  }
  for (auto s : {kProfileSection, kSemiSection, kEntitiesSection, kBookedSection, kAttitudeSlot, kPositive, kNegative})
    content.insert(std::string(s));
  for (auto type : kDialogTypes) content.insert(std::string(to_string(type)));
  content.insert(std::string(SequenceGrammar::kNone));
  for (int i = 0; i < 10; ++i) content.insert(std::to_string(i));
  for (const auto& p : placeholder_tokens(ontology)) content.insert(p);
  for (const auto& e : kb.entities()) {
    add_text(e.name);
    for (const auto& [slot, v] : e.attributes) {
      content.insert(slot);
      add_text(v);
    }
    for (const auto& sn : e.snippets) add(sn);
    for (const auto& q : e.qa) {
      add(q.question);
      add(q.answer);
    }
  }
  add_sessions(split.train);
  add_sessions(split.dev);
  add_sessions(split.test);
  for (const auto& [type, sessions] : split.external) add_sessions(sessions);

  std::vector<std::string> out;
  for (const auto& t : content)
    if (!is_reserved_token(t) || is_placeholder(t)) out.push_back(t);
  return Vocabulary::build(out);
}

Vocabulary build_vocabulary(const GeneratedCorpus& corpus) {
  return build_vocabulary(corpus.kb, corpus.ontology, corpus.split);
}

void write_generated(const GeneratedCorpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "ontology.json", corpus.ontology.to_json().dump(2) + "\n");
  write_text(dir / "rules.json", corpus.rules.to_json().dump(2) + "\n");
  write_text(dir / "generator.json", corpus.config.to_json().dump(2) + "\n");
  write_text(dir / "kb.json", corpus.kb.to_json().dump() + "\n");
  {
    std::string lines;
    for (const auto& t : corpus.templates) lines += template_to_json(t).dump() + "\n";
    write_text(dir / "templates.jsonl", lines);
  }
  build_vocabulary(corpus).save(dir / "vocab.txt");
  write_corpus(corpus.split, dir);

  json files = json::object();
  std::vector<std::string> names = {"ontology.json", "rules.json", "generator.json", "kb.json",
                                    "templates.jsonl", "vocab.txt", "train.jsonl", "dev.jsonl", "test.jsonl"};
  for (const auto& [type, _] : corpus.split.external) names.push_back(external_file_name(type));
  for (const auto& n : names) files[n] = hex64(fnv1a64(slurp(dir / n)));
  json manifest = {{"format", "mixdial-corpus"},
                   {"version", 1},
                   {"seed", corpus.config.seed},
                   {"config_hash", corpus.config.hash()},
                   {"files", files}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

CorpusBundle read_bundle(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("corpus directory not found: " + dir.string());
  CorpusBundle b;
  const std::string manifest_text = slurp(dir / "manifest.json");
  json manifest;
  try {
    manifest = json::parse(manifest_text);
  } catch (const json::exception& e) {
    throw DataError(std::string("manifest.json: malformed json (") + e.what() + ")");
  }
  if (manifest.value("format", std::string{}) != "mixdial-corpus" || manifest.value("version", 0) != 1)
    throw DataError("manifest.json: unsupported corpus format");
  b.manifest_hash = hex64(fnv1a64(manifest_text));
  b.seed = manifest.value("seed", std::uint64_t{0});
  for (const auto& [name, hash] : manifest.at("files").items()) {
    if (hex64(fnv1a64(slurp(dir / name))) != hash.get<std::string>())
      throw DataError(name + ": content does not match manifest");
  }
  try {
    b.ontology = Ontology::from_json(read_json(dir / "ontology.json"));
  } catch (const ConfigError& e) {
    throw DataError(std::string("ontology.json: ") + e.what());
  }
  b.kb = KnowledgeBase::from_json(read_json(dir / "kb.json"));
  b.split = read_corpus(dir);
  b.vocab = Vocabulary::load(dir / "vocab.txt");
  return b;
}

}  // namespace mixdial
