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

// mixdial: data generation, training, evaluation, reporting and chat.

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mixdial/corpus.hpp"
#include "mixdial/errors.hpp"
#include "mixdial/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mixdial;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kDivergence = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  bool quiet = false;
};

RunConfig load_config(const Common& c) {
  std::string path = c.config;
  if (path.empty())
    if (const char* env = std::getenv("MIXDIAL_CONFIG")) path = env;
  RunConfig cfg = path.empty() ? RunConfig::defaults() : RunConfig::load(path);
  if (c.jobs) cfg.jobs = *c.jobs;
  return cfg;
}

void require_dir(const fs::path& p, const char* what) {
  if (!fs::is_directory(p)) throw DataError(std::string(what) + " directory " + p.string() + " does not exist");
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw DataError(std::string(what) + " " + p.string() + " does not exist");
}

void write_json(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void print_stats(const std::string& label, const std::vector<DialogSession>& sessions) {
  const CorpusStats st = corpus_stats(sessions);
  std::cout << std::left << std::setw(22) << label << std::right << std::setw(8) << st.dialogs << std::setw(12)
            << st.utterances << std::fixed << std::setprecision(2) << std::setw(14) << st.avg_utterances()
            << std::setw(14) << st.avg_tokens() << "\n";
}

// ---------------------------------------------------------------------------

struct GenArgs {
  std::string out;
};

int cmd_gen_data(const Common& common, const GenArgs& a) {
  RunConfig cfg = load_config(common);
  if (common.seed) cfg.generator.seed = *common.seed;
  const fs::path out = a.out.empty() ? cfg.paths.corpus : fs::path(a.out);
  const Ontology ontology = Ontology::default_ontology();
  const GeneratedCorpus corpus = generate_corpus(cfg.generator, ontology, TransitionRules::defaults());

  std::size_t violations = 0;
  auto sweep = [&](const std::vector<DialogSession>& sessions) {
    for (const auto& s : sessions)
      for (const auto& p : check_session(s, ontology)) {
        if (violations++ < 10) std::cerr << s.id << ": " << p << "\n";
      }
  };
  sweep(corpus.split.train);
  sweep(corpus.split.dev);
  sweep(corpus.split.test);
  for (const auto& [_, sessions] : corpus.split.external) sweep(sessions);
  if (violations) throw DataError(std::to_string(violations) + " schema violations in the generated corpus");

  try {
    fs::create_directories(out);
  } catch (const fs::filesystem_error& e) {
    throw DataError("cannot create " + out.string() + ": " + e.what());
  }
  write_generated(corpus, out);

  if (!common.quiet) {
    std::cout << "corpus written to " << out.string() << " (seed " << cfg.generator.seed << ", config "
              << cfg.generator.hash() << ")\n";
    std::cout << "kb entities: " << corpus.kb.size() << ", templates: " << corpus.templates.size() << "\n\n";
    std::cout << std::left << std::setw(22) << "split" << std::right << std::setw(8) << "dialogs" << std::setw(12)
              << "utterances" << std::setw(14) << "utt/dialog" << std::setw(14) << "tokens/utt" << "\n";
    std::vector<DialogSession> all = corpus.split.train;
    all.insert(all.end(), corpus.split.dev.begin(), corpus.split.dev.end());
    all.insert(all.end(), corpus.split.test.begin(), corpus.split.test.end());
    print_stats("train", corpus.split.train);
    print_stats("dev", corpus.split.dev);
    print_stats("test", corpus.split.test);
    print_stats("total", all);
    for (const auto& [type, sessions] : corpus.split.external)
      print_stats("external " + std::string(to_string(type)), sessions);
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string stage = "both";
  std::optional<std::string> variant;
  std::string corpus;
  std::string out;
  std::string from;
  std::optional<int> prompt_steps;
  std::optional<int> finetune_steps;
  std::optional<double> lr;
  std::optional<int> batch;
};

fs::path default_checkpoint(const RunConfig& cfg, Variant v) {
  return cfg.paths.checkpoints / (std::string(to_string(v)) + ".ckpt");
}

int cmd_train(const Common& common, const TrainArgs& a) {
  RunConfig cfg = load_config(common);
  if (common.seed) cfg.seed = *common.seed;
  if (a.variant) {
    auto v = parse_variant(*a.variant);
    if (!v) throw ConfigError("--variant must be mt or no-prompt");
    cfg.variant = *v;
  }
  if (a.prompt_steps) cfg.prompt.steps = *a.prompt_steps;
  if (a.finetune_steps) cfg.finetune.steps = *a.finetune_steps;
  if (a.lr) cfg.prompt.learning_rate = cfg.finetune.learning_rate = *a.lr;
  if (a.batch) cfg.prompt.batch_size = cfg.finetune.batch_size = *a.batch;
  const auto stages = parse_stage_selection(a.stage);
  if (!stages) throw ConfigError("--stage must be prompt, finetune or both");
  cfg.validate();

  const fs::path corpus_dir = a.corpus.empty() ? cfg.paths.corpus : fs::path(a.corpus);
  require_dir(corpus_dir, "corpus");
  const CorpusBundle bundle = read_bundle(corpus_dir);
  const fs::path out = a.out.empty() ? default_checkpoint(cfg, cfg.variant) : fs::path(a.out);

  Checkpoint ck = [&] {
    if (a.from.empty()) return initial_checkpoint(bundle, cfg);
    require_file(a.from, "checkpoint");
    return load_checkpoint(a.from);
  }();

  std::vector<json> intervals;
  // Steps restart with every train_stage call; each restart opens a new segment.
  int segment = 0, last_step = 0;
  auto hook = [&](int step, double loss) {
    if (step < last_step) ++segment;
    last_step = step;
    intervals.push_back({{"segment", segment}, {"step", step}, {"loss", loss}});
    if (!common.quiet)
      std::cout << "segment " << segment << " step " << step << " loss " << std::setprecision(4) << loss << std::endl;
  };
  const TrainOutcome outcome = train_run(ck, bundle, cfg, *stages, hook);

  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_checkpoint(ck, out);
  json log = {{"provenance", ck.provenance}, {"config", cfg.to_json()}, {"intervals", intervals},
              {"prompt_examples", outcome.prompt_examples}, {"finetune_examples", outcome.finetune_examples}};
  json steps = json::array();
  for (const auto& s : outcome.log.prompt) steps.push_back({{"stage", "prompt"}, {"losses", s.losses}});
  if (*stages != StageSelection::prompt) steps.push_back({{"stage", "finetune"}, {"losses", outcome.log.finetune.losses}});
  log["steps"] = steps;
  write_json(fs::path(out.string() + ".log.json"), log);
  if (!common.quiet) {
    std::cout << "checkpoint written to " << out.string() << "; history:";
    for (const auto& h : ck.history) std::cout << " " << to_string(h.stage);
    std::cout << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string task = "all";
  std::string split = "test";
  std::string sessions;
  std::string corpus;
  std::string out;
  bool no_oracle = false;
  std::size_t max_sessions = 0;
};

int cmd_eval(const Common& common, const EvalArgs& a) {
  RunConfig cfg = load_config(common);
  if (common.seed) cfg.seed = *common.seed;
  cfg.validate();
  const fs::path corpus_dir = a.corpus.empty() ? cfg.paths.corpus : fs::path(a.corpus);
  require_dir(corpus_dir, "corpus");
  const fs::path ck_path = a.checkpoint.empty() ? default_checkpoint(cfg, cfg.variant) : fs::path(a.checkpoint);
  require_file(ck_path, "checkpoint");
  const CorpusBundle bundle = read_bundle(corpus_dir);
  const Checkpoint ck = load_checkpoint(ck_path);

  EvalOptions opt;
  opt.dst_oracle = !a.no_oracle;
  opt.max_sessions = a.max_sessions;
  if (a.task != "all") {
    auto t = parse_task(a.task);
    if (!t) throw ConfigError("--task must be dst, dap, rg, e2e or all");
    opt.tasks = {*t};
  }

  std::vector<DialogSession> sessions;
  std::string split_label = a.split;
  if (!a.sessions.empty()) {
    require_file(a.sessions, "sessions file");
    sessions = read_sessions(a.sessions);
    split_label = fs::path(a.sessions).filename().string();
  } else if (a.split == "train") {
    sessions = bundle.split.train;
  } else if (a.split == "dev") {
    sessions = bundle.split.dev;
  } else if (a.split == "test") {
    sessions = bundle.split.test;
  } else {
    throw ConfigError("--split must be train, dev or test");
  }
  for (const auto& s : sessions)
    if (auto p = check_session(s, bundle.ontology); !p.empty()) throw DataError(s.id + ": " + p.front());

  const Variant variant = checkpoint_variant(ck, cfg.variant);
  const fs::path out = a.out.empty() ? cfg.paths.reports / std::string(to_string(variant)) : fs::path(a.out);
  fs::create_directories(out);
  const EvalOutput result = evaluate(ck, bundle, sessions, cfg, opt);

  json run = {{"corpus", fs::absolute(corpus_dir).string()},
              {"checkpoint", fs::absolute(ck_path).string()},
              {"split", split_label},
              {"reports", json::array()}};
  for (const auto& [task, rep] : result.reports) {
    const std::string name(to_string(task));
    write_records(out / ("records_" + name + ".jsonl"), result.records.at(task));
    json doc = rep.to_json();
    doc["split"] = split_label;
    write_json(out / ("report_" + name + ".json"), doc);
    run["reports"].push_back("report_" + name + ".json");
    if (!common.quiet) {
      std::cout << name << ":";
      for (const auto& [k, v] : rep.metrics)
        if (k.find('.') == std::string::npos) std::cout << " " << k << "=" << std::fixed << std::setprecision(4) << v;
      std::cout << "\n";
    }
  }
  write_json(out / "run.json", run);
  return kOk;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out;
  bool verify = false;
};

int cmd_report(const Common& common, const ReportArgs& a) {
  RunConfig cfg = load_config(common);
  std::vector<std::string> runs = a.runs;
  if (runs.empty())
    for (const char* v : {"mt", "no-prompt"})
      if (fs::is_directory(cfg.paths.reports / v)) runs.push_back(std::string(v) + "=" + (cfg.paths.reports / v).string());
  if (runs.empty()) throw DataError("no report directories given or found under " + cfg.paths.reports.string());

  using Row = std::pair<std::string, std::map<std::string, MetricsReport>>;
  std::vector<Row> rows;
  std::vector<std::string> broken;
  for (const auto& spec : runs) {
    const auto eq = spec.find('=');
    const std::string label = eq == std::string::npos ? fs::path(spec).filename().string() : spec.substr(0, eq);
    const fs::path dir = eq == std::string::npos ? fs::path(spec) : fs::path(spec.substr(eq + 1));
    require_dir(dir, "report");
    Row row{label, {}};
    std::vector<fs::path> files;
    for (Task t : kTasks) {
      const fs::path f = dir / ("report_" + std::string(to_string(t)) + ".json");
      if (!fs::exists(f)) continue;
      row.second.emplace(std::string(to_string(t)), MetricsReport::from_json(read_json(f)));
      files.push_back(f);
    }
    if (row.second.empty()) throw DataError("no reports in " + dir.string());
    if (a.verify) {
      const json run = read_json(dir / "run.json");
      for (auto& b : verify_provenance(run.at("corpus").get<std::string>(), run.at("checkpoint").get<std::string>(), files))
        broken.push_back(b);
    }
    rows.push_back(std::move(row));
  }

  std::string text = "DST and DAP\n\n" + render_dst_dap_table(rows) + "\nRG\n\n" +
                     render_generation_table(Task::rg, rows) + "\nE2E\n\n" + render_generation_table(Task::e2e, rows);
  std::cout << text;
  if (!a.out.empty()) {
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    std::ofstream(a.out) << text;
  }
  if (a.verify) {
    for (const auto& b : broken) std::cerr << "provenance: " << b << "\n";
    if (!broken.empty()) throw DataError(std::to_string(broken.size()) + " broken provenance links");
    if (!common.quiet) std::cout << "\nprovenance verified for " << rows.size() << " run(s)\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct ChatArgs {
  std::string checkpoint;
  std::string corpus;
  std::string transcript = "chat_transcript.jsonl";
  bool show_state = false;
};

int cmd_chat(const Common& common, const ChatArgs& a) {
  RunConfig cfg = load_config(common);
  const fs::path corpus_dir = a.corpus.empty() ? cfg.paths.corpus : fs::path(a.corpus);
  require_dir(corpus_dir, "corpus");
  const fs::path ck_path = a.checkpoint.empty() ? default_checkpoint(cfg, cfg.variant) : fs::path(a.checkpoint);
  require_file(ck_path, "checkpoint");
  const CorpusBundle bundle = read_bundle(corpus_dir);
  const Checkpoint ck = load_checkpoint(ck_path);
  check_compatible(ck, bundle);

  const TaskContext ctx{bundle.ontology, bundle.kb, cfg.task_options(checkpoint_variant(ck, cfg.variant))};
  const ModelPredictor predictor(ck.model, bundle.vocab, cfg.decode);

  DialogSession session;
  session.id = "chat-00000";
  session.template_id = "interactive";
  DialogState state;
  StateHeader header{DialogType::chitchat, ""};

  std::string line;
  const bool interactive = !common.quiet && isatty(STDIN_FILENO);
  if (interactive) std::cout << "user> " << std::flush;
  while (std::getline(std::cin, line)) {
    Tokens user = split_tokens(fold_value(line));
    std::erase_if(user, [](const std::string& t) { return is_reserved_token(t); });
    if (user.empty()) {
      if (interactive) std::cout << "user> " << std::flush;
      continue;
    }
    Turn u;
    u.speaker = Speaker::user;
    u.utterance = user;
    u.type = header.type.value_or(DialogType::chitchat);
    u.domain = header.domain;
    u.state = state;
    session.turns.push_back(u);

    Turn w = u;
    w.speaker = Speaker::wizard;
    w.utterance = {"..."};
    session.turns.push_back(w);
    const std::size_t wi = session.turns.size() - 1;

    const std::size_t budget = cfg.decode.max_target_tokens;
    Tokens response = predictor.predict(task_input(session, wi, Task::e2e, ctx), budget);
    std::erase_if(response, [](const std::string& t) { return is_reserved_token(t); });
    if (response.empty()) response = {"..."};
    session.turns[wi].utterance = response;

    const ParsedState parsed = parse_state(predictor.predict(task_input(session, wi, Task::dst, ctx, &state), budget));
    if (parsed.report.markers_found && validate_state(parsed.state, bundle.ontology).ok()) {
      session.turns[wi].delta = diff_states(state, parsed.state);
      state = parsed.state;
    }
    if (parsed.header && parsed.header->type) {
      header = *parsed.header;
      if (bundle.ontology.domain_id(header.domain) == 0) header.domain.clear();
    }
    session.turns[wi].state = state;
    session.turns[wi].type = header.type.value_or(DialogType::chitchat);
    session.turns[wi].domain = header.domain;

    std::cout << "wizard> " << join_tokens(response) << "\n";
    if (a.show_state) std::cout << "state> " << join_tokens(serialize_state(state, header)) << "\n";
    if (interactive) std::cout << "user> " << std::flush;
  }
  if (interactive) std::cout << "\n";

  std::vector<DialogSession> out;
  if (!session.turns.empty()) out.push_back(session);
  const fs::path tpath(a.transcript);
  if (tpath.has_parent_path()) fs::create_directories(tpath.parent_path());
  write_sessions(tpath, out);
  if (interactive) std::cout << "transcript written to " << tpath.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixdial: mixed-type dialog corpus generation, training and evaluation"};
  app.require_subcommand(1);
  Common common;
  app.add_option("-c,--config", common.config, "Run config file (JSON); defaults to $MIXDIAL_CONFIG");
  app.add_option("--seed", common.seed, "Seed override (generator seed for gen-data, master seed otherwise)");
  app.add_option("-j,--jobs", common.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("-q,--quiet", common.quiet, "Less output");

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "Generate the knowledge base, templates and corpora");
  g->add_option("-o,--out", gen.out, "Output directory");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--stage", train.stage, "prompt, finetune or both")->check(CLI::IsMember({"prompt", "finetune", "both"}));
  t->add_option("--variant", train.variant, "mt or no-prompt")->check(CLI::IsMember({"mt", "no-prompt"}));
  t->add_option("--corpus", train.corpus, "Corpus directory");
  t->add_option("-o,--out", train.out, "Checkpoint file");
  t->add_option("--from", train.from, "Start from this checkpoint");
  t->add_option("--prompt-steps", train.prompt_steps, "Steps of the prompt stage");
  t->add_option("--finetune-steps", train.finetune_steps, "Steps of the finetune stage");
  t->add_option("--lr", train.lr, "Peak learning rate of both stages");
  t->add_option("--batch", train.batch, "Batch size of both stages");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Run the task pipelines and score them");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file");
  e->add_option("--task", ev.task, "dst, dap, rg, e2e or all")->check(CLI::IsMember({"dst", "dap", "rg", "e2e", "all"}));
  e->add_option("--split", ev.split, "train, dev or test")->check(CLI::IsMember({"train", "dev", "test"}));
  e->add_option("--sessions", ev.sessions, "Score a session file (e.g. a chat transcript) instead of a split");
  e->add_option("--corpus", ev.corpus, "Corpus directory");
  e->add_option("-o,--out", ev.out, "Output directory for records and reports");
  e->add_flag("--no-oracle", ev.no_oracle, "Skip the oracle-state DST mode");
  e->add_option("--max-sessions", ev.max_sessions, "Evaluate only the first N sessions");

  ChatArgs chat;
  auto* c = app.add_subcommand("chat", "Talk to a model on standard input");
  c->add_option("--checkpoint", chat.checkpoint, "Checkpoint file");
  c->add_option("--corpus", chat.corpus, "Corpus directory");
  c->add_option("--transcript", chat.transcript, "Transcript file written on exit");
  c->add_flag("--show-state", chat.show_state, "Print the tracked state after every turn");

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Render result tables from eval outputs");
  r->add_option("runs", rep.runs, "Report directories, optionally as label=dir");
  r->add_option("-o,--out", rep.out, "Also write the tables to this file");
  r->add_flag("--verify", rep.verify, "Check that reports, checkpoints and corpora belong together");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*g) return cmd_gen_data(common, gen);
    if (*t) return cmd_train(common, train);
    if (*e) return cmd_eval(common, ev);
    if (*c) return cmd_chat(common, chat);
    if (*r) return cmd_report(common, rep);
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kConfig;
  } catch (const DivergenceError& err) {
    std::cerr << "training diverged: " << err.what() << "\n";
    return kDivergence;
  } catch (const DataError& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "data error: " << err.what() << "\n";
    return kData;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kData;
  }
  return kOk;
}
