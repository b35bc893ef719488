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

#include <fstream>

#include "mixdial/corpus.hpp"
#include "mixdial/errors.hpp"
#include "mixdial/pipeline.hpp"
#include "support/temp_dir.hpp"

using namespace mixdial;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
  RunConfig c = RunConfig::defaults();
  c.generator.train_sessions = 4;
  c.generator.dev_sessions = 2;
  c.generator.test_sessions = 2;
  c.generator.external_sessions = 2;
  c.model.width = 16;
  c.model.layers = 1;
  c.model.heads = 2;
  c.model.ff_width = 32;
  c.prompt.steps = 2;
  c.finetune.steps = 2;
  c.prompt.batch_size = c.finetune.batch_size = 2;
  c.decode.max_target_tokens = 8;
  return c;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("run config round trip and partial documents") {
    const RunConfig d = RunConfig::defaults();
    CHECK(RunConfig::from_json(d.to_json()).to_json() == d.to_json());
    CHECK(RunConfig::from_json(d.to_json()).hash() == d.hash());

    const RunConfig p = RunConfig::from_json({{"seed", 9}, {"finetune", {{"steps", 12}}}});
    CHECK(p.seed == 9);
    CHECK(p.finetune.steps == 12);
    CHECK(p.finetune.batch_size == d.finetune.batch_size);
    CHECK(p.hash() != d.hash());
    CHECK_THROWS_AS(RunConfig::from_json({{"sead", 9}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_json({{"variant", "other"}}), ConfigError);
  }

  TEST_CASE("hash ignores paths and jobs") {
    RunConfig a = RunConfig::defaults(), b = a;
    b.paths.corpus = "elsewhere";
    b.jobs = 4;
    CHECK(a.hash() == b.hash());
    b.finetune.learning_rate *= 2;
    CHECK(a.hash() != b.hash());
  }

  TEST_CASE("stage configs derive their seeds") {
    const RunConfig c = RunConfig::defaults();
    const TrainConfig p = c.stage_config(Stage::prompt), f = c.stage_config(Stage::finetune);
    CHECK(p.stage == Stage::prompt);
    CHECK(f.stage == Stage::finetune);
    CHECK(p.seed != f.seed);
    RunConfig other = c;
    other.seed = 2;
    CHECK(other.stage_config(Stage::prompt).seed != p.seed);
    CHECK(parse_stage_selection("both") == StageSelection::both);
    CHECK_FALSE(parse_stage_selection("all"));
  }

  TEST_CASE("invalid run configs are rejected") {
    RunConfig c = RunConfig::defaults();
    c.model.max_positions = 40;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = RunConfig::defaults();
    c.decode.beam_width = 0;
    CHECK_FALSE(c.problems().empty());
  }

  TEST_CASE("task options leave room for the target") {
    const RunConfig c = RunConfig::defaults();
    const TaskOptions mt = c.task_options(Variant::mt), np = c.task_options(Variant::no_prompt);
    CHECK(mt.format.prompts);
    CHECK_FALSE(np.format.prompts);
    CHECK(mt.format.grammar.max_length + mt.max_target_tokens + 1 <= std::size_t(c.model.max_positions));
  }

  TEST_CASE("train, evaluate and verify the provenance chain") {
    testing::TempDir dir;
    const RunConfig cfg = tiny_config();
    const GeneratedCorpus gen = generate_corpus(cfg.generator, Ontology::default_ontology(), TransitionRules::defaults());
    write_generated(gen, dir.path() / "corpus");
    const CorpusBundle bundle = read_bundle(dir.path() / "corpus");

    Checkpoint ck = initial_checkpoint(bundle, cfg);
    const TrainOutcome out = train_run(ck, bundle, cfg, StageSelection::both);
    CHECK(out.prompt_examples > 0);
    CHECK(out.finetune_examples > 0);
    REQUIRE(ck.history.size() == 2);
    CHECK(checkpoint_variant(ck, Variant::no_prompt) == Variant::mt);
    CHECK(ck.provenance.at("config_hash") == cfg.hash());
    save_checkpoint(ck, dir.path() / "m.ckpt");

    EvalOptions opt;
    opt.max_sessions = 1;
    const EvalOutput ev = evaluate(ck, bundle, bundle.split.test, cfg, opt);
    CHECK(ev.reports.size() == 4);
    std::vector<fs::path> reports;
    for (const auto& [task, rep] : ev.reports) {
      reports.push_back(dir.path() / (std::string(to_string(task)) + ".json"));
      std::ofstream(reports.back()) << rep.to_json().dump();
    }
    CHECK(verify_provenance(dir.path() / "corpus", dir.path() / "m.ckpt", reports).empty());

    Checkpoint retrained = ck;
    (void)train_run(retrained, bundle, cfg, StageSelection::finetune);
    save_checkpoint(retrained, dir.path() / "m.ckpt");
    CHECK(verify_provenance(dir.path() / "corpus", dir.path() / "m.ckpt", reports).size() == reports.size());

    RunConfig bigger = cfg;
    bigger.generator.seed += 1;
    const GeneratedCorpus other = generate_corpus(bigger.generator, Ontology::default_ontology(), TransitionRules::defaults());
    write_generated(other, dir.path() / "other");
    CHECK_THROWS_AS(check_compatible(ck, read_bundle(dir.path() / "other")), ConfigError);
  }
}
