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

#include <map>

#include <nlohmann/json.hpp>

#include "mixdial/corpus.hpp"
#include "mixdial/metrics.hpp"
#include "mixdial/tasks.hpp"
#include "support/temp_dir.hpp"

using namespace mixdial;

namespace {

const GeneratedCorpus& small_corpus() {
  static const GeneratedCorpus c = [] {
    GeneratorConfig cfg = GeneratorConfig::defaults();
    cfg.train_sessions = 10;
    cfg.dev_sessions = 5;
    cfg.test_sessions = 100;
    cfg.external_sessions = 2;
    return generate_corpus(cfg, Ontology::default_ontology(), TransitionRules::defaults());
  }();
  return c;
}

std::string key(const FormattedInput& in) { return std::to_string(in.target_task) + "|" + join_tokens(in.tokens); }

/// Answers every input it was built from with the gold target.
class GoldPredictor : public Predictor {
 public:
  GoldPredictor(std::span<const DialogSession> sessions, const TaskContext& ctx) {
    for (const auto& s : sessions)
      for (std::size_t w : s.wizard_turns())
        for (Task task : kTasks) {
          const DialogState& prev = previous_wizard_state(s, w);
          answers_[key(task_input(s, w, task, ctx, &prev))] = task_target(s, w, task);
        }
  }
  Tokens predict(const FormattedInput& input, std::size_t max_tokens) const override {
    ++calls;
    auto it = answers_.find(key(input));
    if (it == answers_.end()) return {};
    Tokens t = it->second;
    if (t.size() > max_tokens) t.resize(max_tokens);
    return t;
  }
  mutable std::size_t calls = 0;

 private:
  std::map<std::string, Tokens> answers_;
};

class ConstantPredictor : public Predictor {
 public:
  explicit ConstantPredictor(Tokens t) : t_(std::move(t)) {}
  Tokens predict(const FormattedInput&, std::size_t) const override { return t_; }

 private:
  Tokens t_;
};

}  // namespace

TEST_SUITE("tasks") {
  TEST_CASE("one record per wizard turn and task") {
    const auto& c = small_corpus();
    const TaskContext ctx{c.ontology, c.kb, {}};
    const ConstantPredictor p(split_tokens("hello"));
    const DialogSession& s = c.split.test[0];
    for (Task task : kTasks) {
      const auto rec = run_task(p, s, task, ctx);
      CHECK(rec.size() == s.wizard_turns().size());
      for (const auto& r : rec) CHECK(r.gold == s.id + "#" + std::to_string(r.turn));
    }
    const auto ex = build_examples(s, kTasks, ctx);
    CHECK(ex.size() == 4 * s.wizard_turns().size());
  }

  TEST_CASE("gold predictions score perfectly") {
    const auto& c = small_corpus();
    const TaskContext ctx{c.ontology, c.kb, {}};
    const std::vector<DialogSession> sessions(c.split.test.begin(), c.split.test.begin() + 20);
    const GoldPredictor p(sessions, ctx);
    const GoldIndex gold(sessions);

    auto dst = run_task_all(p, sessions, Task::dst, ctx, DstMode::rollout, 2);
    const auto oracle = run_task_all(p, sessions, Task::dst, ctx, DstMode::oracle_state);
    CHECK(dst.size() == oracle.size());
    CHECK_FALSE(first_divergence(dst, oracle));
    dst.insert(dst.end(), oracle.begin(), oracle.end());
    const MetricsReport dr = score_records(Task::dst, dst, gold, c.ontology);
    CHECK(dr.metrics.at("joint_acc") == 1.0);
    CHECK(dr.metrics.at("oracle.joint_acc") == 1.0);
    CHECK(dr.metrics.at("slot_acc") == 1.0);
    CHECK(dr.metrics.at("type_acc") == 1.0);
    CHECK(dr.metrics.at("domain_acc") == 1.0);

    const MetricsReport ar = score_records(Task::dap, run_task_all(p, sessions, Task::dap, ctx), gold, c.ontology);
    CHECK(ar.metrics.at("act_acc") == 1.0);
    CHECK(ar.metrics.at("bleu1") == doctest::Approx(1.0));

    const MetricsReport rr = score_records(Task::rg, run_task_all(p, sessions, Task::rg, ctx), gold, c.ontology);
    CHECK(rr.metrics.at("bleu1") == doctest::Approx(1.0));
    CHECK(rr.metrics.at("meteor") > 0.99);
  }

  TEST_CASE("rollout feeds the predicted state forward") {
    const auto& c = small_corpus();
    const TaskContext ctx{c.ontology, c.kb, {}};
    const DialogSession& s = c.split.test[1];
    const ConstantPredictor p(split_tokens("nothing parseable"));
    const auto rec = run_dst(p, s, DstMode::rollout, ctx);
    for (const auto& r : rec) {
      CHECK(r.state == DialogState{});
      CHECK_FALSE(r.report.markers_found);
    }
  }

  TEST_CASE("relexicalized gold responses inform only true values") {
    const auto& c = small_corpus();
    const TaskContext ctx{c.ontology, c.kb, {}};
    const std::vector<DialogSession>& sessions = c.split.test;
    REQUIRE(sessions.size() == 100);
    const GoldPredictor p(sessions, ctx);
    const auto rec = run_task_all(p, sessions, Task::e2e, ctx);
    const InformationAccuracy acc = hallucination_accuracy(rec);
    CHECK(acc.total > 50);
    CHECK(acc.value == 1.0);
  }

  TEST_CASE("mentions resolve the named entity") {
    const auto& c = small_corpus();
    const Entity& e = c.kb.entities().front();
    REQUIRE_FALSE(e.attributes.empty());
    const auto& [slot, value] = *e.attributes.begin();
    Tokens resp = split_tokens(e.name);
    resp.push_back("has");
    for (const auto& tok : split_tokens(value)) resp.push_back(tok);
    const auto m = extract_mentions(resp, {}, c.kb);
    REQUIRE_FALSE(m.empty());
    bool found = false;
    for (const auto& x : m) found |= x.entity == e.name && x.value == value && x.correct;
    CHECK(found);
  }

  TEST_CASE("records survive a file round trip") {
    const auto& c = small_corpus();
    const TaskContext ctx{c.ontology, c.kb, {}};
    const GoldPredictor p(c.split.test, ctx);
    std::vector<PredictionRecord> all;
    for (Task task : kTasks) {
      auto r = run_task(p, c.split.test[2], task, ctx);
      all.insert(all.end(), r.begin(), r.end());
    }
    testing::TempDir dir;
    write_records(dir.path() / "r.jsonl", all);
    const auto back = read_records(dir.path() / "r.jsonl");
    REQUIRE(back.size() == all.size());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(record_to_json(back[i]) == record_to_json(all[i]));
  }

  TEST_CASE("knowledge stays within its budget") {
    const auto& c = small_corpus();
    TaskOptions opt;
    opt.max_knowledge_tokens = 40;
    const TaskContext ctx{c.ontology, c.kb, opt};
    const TaskContext wide{c.ontology, c.kb, {}};
    for (const auto& s : c.split.test)
      for (std::size_t w : s.wizard_turns()) {
        const FormattedInput narrow = task_input(s, w, Task::dap, ctx);
        CHECK(narrow.context_turns >= task_input(s, w, Task::dap, wide).context_turns);
        CHECK(narrow.size() <= opt.format.grammar.max_length);
      }
  }
}
