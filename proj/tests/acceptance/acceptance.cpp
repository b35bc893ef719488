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

// Acceptance suite. Each criterion prints one PASS or FAIL line; the exit code
// is nonzero when any selected criterion fails.
//
//   mixdial_acceptance [criterion...]    (no argument runs all of them)

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixdial/corpus.hpp"
#include "mixdial/decode.hpp"
#include "mixdial/metrics.hpp"
#include "mixdial/model.hpp"
#include "mixdial/pipeline.hpp"
#include "mixdial/train.hpp"
#include "support/metric_oracles.hpp"
#include "support/model_fixtures.hpp"
#include "support/random_objects.hpp"
#include "support/temp_dir.hpp"

#ifndef MIXDIAL_CLI
#error "MIXDIAL_CLI must name the command-line binary"
#endif

using namespace mixdial;
using namespace mixdial::testing;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kFixtureTol = 1e-9;
constexpr double kCiderTol = 1e-6;
constexpr double kGradTol = 1e-4;
constexpr double kLnVTol = 1e-9;
constexpr double kOverfitLoss = 0.1;
constexpr double kOverfitReproduced = 0.9;
constexpr double kShapeTol = 0.2;
constexpr int kContinualSeeds = 5;
constexpr int kContinualWins = 4;
constexpr double kSchemaSeconds = 60;
constexpr double kMetricSeconds = 60;
constexpr double kNumericsSeconds = 120;
constexpr double kOverfitSeconds = 600;
constexpr double kContinualSeconds = 7200;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (!pass) detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

const Ontology& ontology() {
  static const Ontology o = Ontology::default_ontology();
  return o;
}

// ---------------------------------------------------------------------------

Outcome schema_suite() {
  Outcome out;
  Stopwatch clock;
  Rng rng(1001);
  std::size_t state_fail = 0, act_fail = 0, delta_fail = 0;
  for (int i = 0; i < 1000; ++i) {
    const DialogState s = random_state(rng, ontology());
    if (!validate_state(s, ontology()).ok() || parse_state(serialize_state(s)).state != s) ++state_fail;
    const DialogAct a = random_act(rng, ontology());
    if (!validate_act(a, ontology()).ok() || parse_act(serialize_act(a)).act != a) ++act_fail;
  }
  for (int i = 0; i < 1000; ++i) {
    const DialogState prev = random_state(rng, ontology());
    const DialogState curr = mutate_state(rng, prev, ontology());
    if (apply_delta(prev, diff_states(prev, curr), ontology()) != curr) ++delta_fail;
  }
  const GeneratedCorpus c = generate_corpus(GeneratorConfig::defaults(), ontology(), TransitionRules::defaults());
  std::size_t violations = 0, sessions = 0;
  auto sweep = [&](const std::vector<DialogSession>& v) {
    for (const auto& s : v) {
      ++sessions;
      violations += check_session(s, ontology()).size();
      for (const auto& t : s.turns)
        violations += validate_state(t.state, ontology()).violations.size() +
                      validate_act(t.act, ontology()).violations.size();
    }
  };
  sweep(c.split.train);
  sweep(c.split.dev);
  sweep(c.split.test);
  for (const auto& [_, v] : c.split.external) sweep(v);
  const double secs = clock.seconds();
  out.require(state_fail == 0, std::to_string(state_fail) + " state round trips failed");
  out.require(act_fail == 0, std::to_string(act_fail) + " act round trips failed");
  out.require(delta_fail == 0, std::to_string(delta_fail) + " diff/apply pairs failed");
  out.require(violations == 0, std::to_string(violations) + " gold corpus violations");
  out.require(secs < kSchemaSeconds, "took " + fmt(secs) + " s");
  if (out.pass)
    out.detail << "1000 states, 1000 acts, 1000 deltas exact; " << sessions << " gold sessions clean; " << fmt(secs)
               << " s";
  return out;
}

// ---------------------------------------------------------------------------

std::vector<Tokens> lines(std::initializer_list<const char*> l) {
  std::vector<Tokens> out;
  for (const char* s : l) out.push_back(split_tokens(s));
  return out;
}

Outcome metric_oracles() {
  Outcome out;
  Stopwatch clock;
  Rng rng(1002);
  std::size_t acc_fail = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<DialogState> preds, golds;
    std::vector<DialogAct> pa, ga;
    for (std::size_t i = 0, n = 1 + rng.below(6); i < n; ++i) {
      golds.push_back(random_state(rng, ontology(), 0.3));
      preds.push_back(rng.chance(0.4) ? golds.back() : mutate_state(rng, golds.back(), ontology()));
      ga.push_back(random_act(rng, ontology()));
      pa.push_back(rng.chance(0.5) ? ga.back() : random_act(rng, ontology()));
    }
    double joint = 0, slot = 0, act = 0;
    for (std::size_t i = 0; i < golds.size(); ++i) {
      joint += preds[i] == golds[i];
      slot += oracle_turn_slot_accuracy(preds[i], golds[i]);
      act += pa[i] == ga[i];
    }
    const double n = double(golds.size());
    acc_fail += joint_accuracy(preds, golds) != joint / n;
    acc_fail += std::abs(slot_accuracy(preds, golds, ontology()) - slot / n) > 1e-12;
    acc_fail += act_accuracy(pa, ga) != act / n;
  }
  out.require(acc_fail == 0, std::to_string(acc_fail) + " accuracy fixtures disagree with the oracles");

  const double b1 = bleu(lines({"a b c d"}), lines({"a b x y"}), 1);
  out.require(std::abs(b1 - 0.5) <= kFixtureTol, "BLEU-1 fixture gave " + fmt(b1, 12));
  const double m1 = meteor_segment(Tokens{"a"}, Tokens{"a"});
  const double m2 = meteor_segment(Tokens{"a", "b"}, Tokens{"a", "b"});
  out.require(std::abs(m1 - 0.5) <= kFixtureTol, "METEOR single-token fixture gave " + fmt(m1, 12));
  out.require(std::abs(m2 - 0.9375) <= kFixtureTol, "METEOR two-token fixture gave " + fmt(m2, 12));

  std::size_t align_fail = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Tokens h = random_sentence(rng, rng.below(7), 3), r = random_sentence(rng, rng.below(7), 3);
    const Alignment want = brute_force_alignment(h, r), got = align_exact(h, r);
    align_fail += got.matches != want.matches || got.chunks != want.chunks;
  }
  out.require(align_fail == 0, std::to_string(align_fail) + " METEOR alignments are not optimal");

  const auto corpus = lines({"a a b", "b c"});
  const DistinctResult d1 = distinct_n(corpus, 1), d2 = distinct_n(corpus, 2);
  out.require(d1.unique == 3 && d1.total == 5 && d2.unique == 3 && d2.total == 3, "Distinct fixture counts differ");
  std::size_t distinct_fail = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Tokens> c;
    for (std::size_t i = 0, n = 1 + rng.below(6); i < n; ++i) c.push_back(random_sentence(rng, rng.below(7), 4));
    for (int n = 1; n <= 2; ++n) {
      const auto [u, t] = oracle_distinct(c, n);
      const DistinctResult got = distinct_n(c, n);
      distinct_fail += got.unique != u || got.total != t;
    }
  }
  out.require(distinct_fail == 0, std::to_string(distinct_fail) + " Distinct fixtures disagree");

  const auto refs = lines({"the cat sat on a mat", "dogs run in the park today", "we like green tea very much"});
  const CiderResult same = cider(refs, refs);
  const std::vector<double> dense = oracle_cider(refs, refs);
  double dense_mean = 0;
  for (double v : dense) dense_mean += v / double(dense.size());
  out.require(std::abs(same.score - 10.0) <= kCiderTol, "CIDEr identical fixture gave " + fmt(same.score, 12));
  out.require(std::abs(same.score - dense_mean) <= kCiderTol, "CIDEr differs from the dense oracle");
  std::size_t cider_fail = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Tokens> h, r;
    for (std::size_t i = 0, n = 2 + rng.below(5); i < n; ++i) {
      h.push_back(random_sentence(rng, 1 + rng.below(9), 6));
      r.push_back(random_sentence(rng, 1 + rng.below(9), 6));
    }
    const CiderResult got = cider(h, r);
    const auto want = oracle_cider(h, r);
    for (std::size_t i = 0; i < want.size(); ++i) cider_fail += std::abs(got.segments[i] - want[i]) > kCiderTol;
  }
  out.require(cider_fail == 0, std::to_string(cider_fail) + " CIDEr segments disagree with the dense oracle");

  const double secs = clock.seconds();
  out.require(secs < kMetricSeconds, "took " + fmt(secs) + " s");
  if (out.pass)
    out.detail << "BLEU-1 " << fmt(b1, 12) << ", METEOR " << fmt(m1, 12) << "/" << fmt(m2, 12) << ", CIDEr "
               << fmt(same.score, 12) << ", oracles agree; " << fmt(secs) << " s";
  return out;
}

// ---------------------------------------------------------------------------

Outcome model_numerics() {
  Outcome out;
  Stopwatch clock;
  const ModelConfig c = small_config(16, 2, 2);
  Transformer<double> m(c);
  Rng rng(1003);
  randomize(m, rng, 0.3);
  const EncodedExample ex = random_example(rng, c, 12, 5);
  const double worst = gradient_check(m, ex, rng, 20, 1e-5);
  out.require(worst < kGradTol, "max relative gradient error " + fmt(worst));

  ModelConfig u = c;
  u.vocab_size = 37;
  Transformer<double> flat(u);
  flat.view(flat.tensor("output")).setZero();
  const double gap = std::abs(flat.loss(random_example(rng, u, 10, 4)) - std::log(37.0));
  out.require(gap <= kLnVTol, "uniform-logit loss is off ln V by " + fmt(gap));

  const double secs = clock.seconds();
  out.require(secs < kNumericsSeconds, "took " + fmt(secs) + " s");
  if (out.pass)
    out.detail << "max relative gradient error " << fmt(worst, 3) << ", |loss - ln V| " << fmt(gap, 3) << "; "
               << fmt(secs) << " s";
  return out;
}

// ---------------------------------------------------------------------------

CorpusBundle bundle_of(const GeneratedCorpus& c, const fs::path& dir) {
  write_generated(c, dir);
  return read_bundle(dir);
}

Outcome overfit() {
  Outcome out;
  Stopwatch clock;
  TempDir dir;
  GeneratorConfig gc = GeneratorConfig::defaults();
  gc.train_sessions = 8;
  gc.dev_sessions = gc.test_sessions = 1;
  gc.external_sessions = 1;
  const CorpusBundle bundle =
      bundle_of(generate_corpus(gc, ontology(), TransitionRules::defaults()), dir.path() / "corpus");
  RunConfig cfg = RunConfig::defaults();
  const TaskContext ctx{bundle.ontology, bundle.kb, cfg.task_options(Variant::mt)};
  const std::vector<Task> dst = {Task::dst};
  std::vector<EncodedExample> all = encode_sessions(bundle.split.train, dst, ctx, bundle.vocab);
  Rng rng(1004);
  rng.shuffle(all);
  const std::vector<EncodedExample> data(all.begin(), all.begin() + 64);

  ModelConfig mc = cfg.model_config(bundle);
  mc.width = 64;
  mc.layers = 2;
  Checkpoint ck{Model(mc)};
  TrainConfig t = cfg.stage_config(Stage::finetune);
  t.steps = 500;
  t.batch_size = 8;
  t.learning_rate = 3e-3;
  t.warmup_steps = 30;
  t.eval_interval = 25;
  const StepLog log = train_stage(ck, data, t, "overfit");
  const double final_loss = log.intervals.back().loss;

  std::size_t exact = 0;
  for (const auto& ex : data) {
    const SequenceIds prompt = slice(ex, 0, ex.prompt_length);
    const TargetIds ids{ex.types[ex.prompt_length], ex.tasks[ex.prompt_length], ex.domains[ex.prompt_length]};
    const std::vector<int> want(ex.tokens.begin() + long(ex.prompt_length), ex.tokens.end() - 1);
    exact += greedy_decode(ck.model, prompt, ids, bundle.vocab.eos_id(), want.size() + 1) == want;
  }
  const double reproduced = double(exact) / double(data.size());
  const double secs = clock.seconds();
  out.require(final_loss < kOverfitLoss, "final training loss " + fmt(final_loss));
  out.require(reproduced >= kOverfitReproduced, "reproduced " + std::to_string(exact) + "/64 targets");
  out.require(secs < kOverfitSeconds, "took " + fmt(secs) + " s");
  if (out.pass)
    out.detail << "loss " << fmt(final_loss) << " after 500 steps, " << exact << "/64 targets reproduced; " << fmt(secs)
               << " s";
  return out;
}

// ---------------------------------------------------------------------------

std::set<DialogType> types_of(const DialogSession& s) {
  std::set<DialogType> t;
  for (const auto& turn : s.turns) t.insert(turn.type);
  return t;
}

Outcome corpus_shape() {
  Outcome out;
  const GeneratedCorpus a = generate_corpus(GeneratorConfig::defaults(), ontology(), TransitionRules::defaults());
  std::vector<DialogSession> all = a.split.train;
  all.insert(all.end(), a.split.dev.begin(), a.split.dev.end());
  all.insert(all.end(), a.split.test.begin(), a.split.test.end());
  const CorpusStats st = corpus_stats(all);
  const double utt = st.avg_utterances(), tok = st.avg_tokens();
  out.require(std::abs(utt - 33.0) <= kShapeTol * 33.0, "utterances per dialog " + fmt(utt));
  out.require(std::abs(tok - 10.0) <= kShapeTol * 10.0, "tokens per utterance " + fmt(tok));
  std::size_t single = 0;
  for (const auto& s : all) single += types_of(s).size() < 2;
  out.require(single == 0, std::to_string(single) + " sessions have a single dialog type");

  TempDir x, y;
  write_generated(a, x.path());
  write_generated(generate_corpus(GeneratorConfig::defaults(), ontology(), TransitionRules::defaults()), y.path());
  std::size_t files = 0, differ = 0;
  for (const auto& e : fs::directory_iterator(x.path())) {
    ++files;
    differ += slurp(e.path()) != slurp(y.path() / e.path().filename());
  }
  out.require(differ == 0, std::to_string(differ) + " of " + std::to_string(files) + " files differ across runs");
  if (out.pass)
    out.detail << all.size() << " dialogs, " << fmt(utt) << " utterances/dialog, " << fmt(tok)
               << " tokens/utterance, all mixed-type, " << files << " files byte-identical";
  return out;
}

// ---------------------------------------------------------------------------

struct VariantScores {
  double joint = 0;
  double bleu1 = 0;
};

VariantScores train_and_score(const CorpusBundle& bundle, std::uint64_t seed, Variant v) {
  RunConfig cfg = RunConfig::defaults();
  cfg.seed = seed;
  cfg.variant = v;
  Checkpoint ck = initial_checkpoint(bundle, cfg);
  (void)train_run(ck, bundle, cfg, StageSelection::both);
  EvalOptions opt;
  opt.tasks = {Task::dst, Task::e2e};
  opt.dst_oracle = false;
  const EvalOutput ev = evaluate(ck, bundle, bundle.split.test, cfg, opt);
  return {ev.reports.at(Task::dst).metrics.at("joint_acc"), ev.reports.at(Task::e2e).metrics.at("bleu1")};
}

Outcome continual_direction() {
  Outcome out;
  Stopwatch clock;
  TempDir dir;
  const GeneratedCorpus gen = generate_corpus(GeneratorConfig::defaults(), ontology(), TransitionRules::defaults());
  const CorpusBundle bundle = bundle_of(gen, dir.path() / "corpus");
  const std::size_t sessions = bundle.split.train.size() + bundle.split.dev.size() + bundle.split.test.size();

  int both = 0, joint_wins = 0, bleu_wins = 0;
  nlohmann::json runs = nlohmann::json::array();
  for (int s = 1; s <= kContinualSeeds; ++s) {
    const VariantScores mt = train_and_score(bundle, std::uint64_t(s), Variant::mt);
    const VariantScores np = train_and_score(bundle, std::uint64_t(s), Variant::no_prompt);
    const bool jw = mt.joint >= np.joint, bw = mt.bleu1 >= np.bleu1;
    joint_wins += jw;
    bleu_wins += bw;
    both += jw && bw;
    runs.push_back({{"seed", s},
                    {"mt", {{"joint_acc", mt.joint}, {"bleu1", mt.bleu1}}},
                    {"no-prompt", {{"joint_acc", np.joint}, {"bleu1", np.bleu1}}}});
    std::cout << "  seed " << s << ": joint " << fmt(mt.joint) << " vs " << fmt(np.joint) << ", bleu1 "
              << fmt(mt.bleu1) << " vs " << fmt(np.bleu1) << " (" << fmt(clock.seconds()) << " s)" << std::endl;
  }
  const double secs = clock.seconds();
  std::ofstream("acceptance_continual.json") << nlohmann::json{{"runs", runs}, {"seconds", secs}}.dump(2) << "\n";
  out.require(sessions == 500, "corpus has " + std::to_string(sessions) + " sessions");
  out.require(both >= kContinualWins, "mt >= no-prompt on both metrics in " + std::to_string(both) + "/5 seeds (joint " +
                                          std::to_string(joint_wins) + "/5, bleu1 " + std::to_string(bleu_wins) +
                                          "/5)");
  out.require(secs < kContinualSeconds, "took " + fmt(secs) + " s");
  if (out.pass)
    out.detail << "mt >= no-prompt on both metrics in " << both << "/5 seeds (joint " << joint_wins << "/5, bleu1 "
               << bleu_wins << "/5); " << fmt(secs) << " s";
  return out;
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(MIXDIAL_CLI) + " " + args + " >> " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// Cells of the `which`-th table header row (the row whose first cell is "Model").
std::vector<std::string> header_cells(const std::string& text, std::size_t which) {
  std::istringstream in(text);
  std::size_t seen = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("| Model ", 0) != 0) continue;
    if (seen++ != which) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    for (std::string cell; std::getline(row, cell, '|');) {
      const auto a = cell.find_first_not_of(' '), b = cell.find_last_not_of(' ');
      if (a != std::string::npos) cells.push_back(cell.substr(a, b - a + 1));
    }
    return cells;
  }
  return {};
}

Outcome end_to_end() {
  Outcome out;
  Stopwatch clock;
  TempDir dir;
  const fs::path log = dir.path() / "cli.log";
  const nlohmann::json cfg = {{"prompt", {{"steps", 40}}}, {"finetune", {{"steps", 60}}}};
  std::ofstream(dir.path() / "run.json") << cfg.dump(2);
  const std::string base = "-c " + (dir.path() / "run.json").string() + " ";
  const fs::path corpus = dir.path() / "corpus", ckpt = dir.path() / "mt.ckpt", reports = dir.path() / "reports";

  struct Step {
    const char* name;
    std::string args;
  };
  const std::vector<Step> steps = {
      {"gen-data", base + "gen-data -o " + corpus.string()},
      {"train", base + "train --stage both --corpus " + corpus.string() + " -o " + ckpt.string()},
      {"eval", base + "eval --task all --max-sessions 3 --checkpoint " + ckpt.string() + " --corpus " +
                   corpus.string() + " -o " + reports.string()},
      {"report", base + "report --verify mt=" + reports.string() + " -o " + (dir.path() / "tables.txt").string()},
  };
  for (const auto& s : steps) {
    const int code = run_cli(s.args, log);
    out.require(code == 0, std::string(s.name) + " exited with " + std::to_string(code));
    if (code != 0) {
      out.detail << " (log: " << slurp(log).substr(0, 400) << ")";
      return out;
    }
  }
  const std::string tables = slurp(dir.path() / "tables.txt");
  std::vector<std::string> want_dst = {"Model"}, want_gen = {"Model"};
  want_dst.insert(want_dst.end(), dst_dap_columns().begin(), dst_dap_columns().end());
  want_gen.insert(want_gen.end(), generation_columns().begin(), generation_columns().end());
  const std::vector<std::string> expect_dst = {"Model",     "Type Acc.", "Domain Acc.", "Slot Acc.",
                                               "Joint Acc.", "Act Acc.", "BLEU-1/2"};
  const std::vector<std::string> expect_gen = {"Model", "BLEU-1/2", "METEOR", "CIDER", "Dist-1/2", "Hallu.", "Suc."};
  out.require(want_dst == expect_dst, "DST/DAP columns are not the expected set");
  out.require(want_gen == expect_gen, "generation columns are not the expected set");
  out.require(header_cells(tables, 0) == expect_dst, "rendered DST/DAP header differs");
  out.require(header_cells(tables, 1) == expect_gen, "rendered RG header differs");
  out.require(header_cells(tables, 2) == expect_gen, "rendered E2E header differs");
  for (const char* task : {"dst", "dap", "rg", "e2e"})
    out.require(fs::exists(reports / (std::string("report_") + task + ".json")), std::string("no ") + task + " report");
  if (out.pass) out.detail << "all commands exit 0, three tables with the expected columns; " << fmt(clock.seconds()) << " s";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"schema-suite", schema_suite},     {"metric-oracles", metric_oracles},
      {"model-numerics", model_numerics}, {"overfit", overfit},
      {"corpus-shape", corpus_shape},     {"continual-direction", continual_direction},
      {"end-to-end", end_to_end},
  };
  std::vector<std::string> selected(argv + 1, argv + argc);
  if (selected.empty())
    for (const auto& [name, _] : criteria) selected.push_back(name);

  int failed = 0;
  for (const auto& name : selected) {
    auto it = std::find_if(criteria.begin(), criteria.end(), [&](const auto& c) { return c.first == name; });
    if (it == criteria.end()) {
      std::cerr << "unknown criterion: " << name << "\n";
      return 2;
    }
    Outcome o;
    try {
      o = it->second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << std::endl;
    failed += !o.pass;
  }
  return failed ? 1 : 0;
}
