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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mixdial/corpus.hpp"
#include "mixdial/errors.hpp"
#include "support/temp_dir.hpp"

using namespace mixdial;
namespace fs = std::filesystem;

namespace {

const GeneratedCorpus& default_corpus() {
  static const GeneratedCorpus c =
      generate_corpus(GeneratorConfig::defaults(), Ontology::default_ontology(), TransitionRules::defaults());
  return c;
}

std::set<DialogType> types_of(const DialogSession& s) {
  std::set<DialogType> t;
  for (const auto& turn : s.turns) t.insert(turn.type);
  return t;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("default corpus shape") {
    const auto& c = default_corpus();
    std::vector<DialogSession> all = c.split.train;
    all.insert(all.end(), c.split.dev.begin(), c.split.dev.end());
    all.insert(all.end(), c.split.test.begin(), c.split.test.end());
    CHECK(all.size() >= 500);
    const CorpusStats st = corpus_stats(all);
    CHECK(st.avg_utterances() == doctest::Approx(33.0).epsilon(0.2));
    CHECK(st.avg_tokens() == doctest::Approx(10.0).epsilon(0.2));
    for (const auto& s : all) CHECK(types_of(s).size() >= 2);
    std::set<std::string> domains;
    for (const auto& e : c.kb.entities()) domains.insert(e.domain);
    CHECK(domains.size() == 5);
  }

  TEST_CASE("external corpora hold a single dialog type") {
    const auto& c = default_corpus();
    CHECK(c.split.external.size() == 4);
    for (const auto& [type, sessions] : c.split.external) {
      CHECK(!sessions.empty());
      for (const auto& s : sessions) {
        const auto t = types_of(s);
        CHECK(t.size() == 1);
        CHECK(*t.begin() == type);
      }
    }
  }

  TEST_CASE("session ids are unique") {
    const auto& c = default_corpus();
    std::set<std::string> ids;
    std::size_t n = 0;
    for (const auto* v : {&c.split.train, &c.split.dev, &c.split.test})
      for (const auto& s : *v) {
        ids.insert(s.id);
        ++n;
      }
    CHECK(ids.size() == n);
  }

  TEST_CASE("same seed gives byte-identical files") {
    testing::TempDir a, b;
    write_generated(default_corpus(), a.path());
    write_generated(generate_corpus(GeneratorConfig::defaults(), Ontology::default_ontology(), TransitionRules::defaults()),
                    b.path());
    std::size_t files = 0;
    for (const auto& entry : fs::directory_iterator(a.path())) {
      ++files;
      CHECK_MESSAGE(testing::slurp(entry.path()) == testing::slurp(b.path() / entry.path().filename()),
                    entry.path().filename().string());
    }
    CHECK(files >= 10);
  }

  TEST_CASE("a different seed changes the corpus") {
    GeneratorConfig cfg = GeneratorConfig::defaults();
    cfg.seed += 1;
    cfg.train_sessions = 5;
    cfg.dev_sessions = cfg.test_sessions = 1;
    cfg.external_sessions = 1;
    GeneratorConfig base = cfg;
    base.seed -= 1;
    const auto x = generate_corpus(cfg, Ontology::default_ontology(), TransitionRules::defaults());
    const auto y = generate_corpus(base, Ontology::default_ontology(), TransitionRules::defaults());
    CHECK_FALSE(x.split.train == y.split.train);
  }

  TEST_CASE("bundle round trip and tamper detection") {
    testing::TempDir dir;
    write_generated(default_corpus(), dir.path());
    const CorpusBundle b = read_bundle(dir.path());
    CHECK(b.split == default_corpus().split);
    CHECK(b.kb == default_corpus().kb);
    CHECK(b.vocab == build_vocabulary(default_corpus()));
    CHECK(b.seed == default_corpus().config.seed);
    const auto manifest = nlohmann::json::parse(testing::slurp(dir.path() / "manifest.json"));
    CHECK(manifest.at("seed") == default_corpus().config.seed);
    CHECK(manifest.at("config_hash") == default_corpus().config.hash());

    std::ofstream(dir.path() / "test.jsonl", std::ios::app) << "\n";
    CHECK_THROWS_AS(read_bundle(dir.path()), DataError);
  }

  TEST_CASE("malformed session lines name the file and line") {
    testing::TempDir dir;
    const fs::path f = dir.path() / "bad.jsonl";
    std::ofstream(f) << session_to_json(default_corpus().split.train[0]).dump() << "\n{\"id\": 3}\n";
    try {
      (void)read_sessions(f);
      FAIL("expected a DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("bad.jsonl:2") != std::string::npos);
    }
  }

  TEST_CASE("vocabulary covers every token of the corpus") {
    const auto& c = default_corpus();
    const Vocabulary v = build_vocabulary(c);
    std::size_t unknown = 0;
    for (const auto& s : c.split.train)
      for (const auto& t : s.turns) {
        for (const auto& tok : t.utterance) unknown += !v.contains(tok);
        for (const auto& tok : serialize_state(t.state, {t.type, t.domain})) unknown += !v.contains(tok);
        for (const auto& tok : serialize_act(t.act)) unknown += !v.contains(tok);
      }
    CHECK(unknown == 0);
  }

  TEST_CASE("generator config round trip and validation") {
    const GeneratorConfig cfg = GeneratorConfig::defaults();
    CHECK(GeneratorConfig::from_json(cfg.to_json()) == cfg);
    CHECK_THROWS_AS(GeneratorConfig::from_json(nlohmann::json::array()), ConfigError);
  }
}
