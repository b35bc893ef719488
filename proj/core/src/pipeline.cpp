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

#include "mixdial/pipeline.hpp"

#include <fstream>
#include <sstream>

#include "mixdial/errors.hpp"
#include "mixdial/random.hpp"
#include "mixdial/text.hpp"

namespace mixdial {

using nlohmann::json;

namespace {

std::string_view to_string(ExternalOrder order) { return order == ExternalOrder::shuffled ? "shuffled" : "sequential"; }
std::string_view to_string(KnowledgeScope scope) { return scope == KnowledgeScope::session ? "session" : "turn"; }

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.prompt.stage = Stage::prompt;
  c.prompt.steps = 1500;
  c.finetune.stage = Stage::finetune;
  c.finetune.steps = 4500;
  return c;
}

json RunConfig::to_json() const {
  json prompt_doc = prompt.to_json();
  json finetune_doc = finetune.to_json();
  // Stage seeds and variants come from the run.
  for (json* d : {&prompt_doc, &finetune_doc}) {
    d->erase("seed");
    d->erase("variant");
    d->erase("stage");
  }
  json model_doc = model.to_json();
  model_doc.erase("seed");
  model_doc.erase("vocab_size");
  model_doc.erase("domain_ids");
  model_doc.erase("type_ids");
  model_doc.erase("task_ids");
  return {{"seed", seed},
          {"variant", std::string(mixdial::to_string(variant))},
          {"jobs", jobs},
          {"paths", {{"corpus", paths.corpus.string()},
                     {"checkpoints", paths.checkpoints.string()},
                     {"reports", paths.reports.string()}}},
          {"generator", generator.to_json()},
          {"model", model_doc},
          {"prompt", prompt_doc},
          {"finetune", finetune_doc},
          {"order", std::string(to_string(order))},
          {"decode", {{"max_target_tokens", decode.max_target_tokens},
                      {"beam_width", decode.beam_width},
                      {"length_alpha", decode.length_alpha}}},
          {"tasks", {{"max_context_turns", max_context_turns},
                     {"max_knowledge_tokens", max_knowledge_tokens},
                     {"knowledge_scope", std::string(to_string(knowledge_scope))}}},
          {"metrics", {{"bleu_smoothing", metrics.bleu_smoothing},
                       {"bleu_orders", metrics.bleu_orders},
                       {"distinct_orders", metrics.distinct_orders}}}};
}

RunConfig RunConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
  const RunConfig base = defaults();
  json merged = base.to_json();
  for (const auto& [key, _] : doc.items())
    if (!merged.contains(key)) throw ConfigError("run config: unknown key '" + key + "'");
  merged.merge_patch(doc);
  RunConfig c = base;
  try {
    c.seed = merged.at("seed").get<std::uint64_t>();
    auto v = parse_variant(merged.at("variant").get<std::string>());
    if (!v) throw ConfigError("run config: variant must be mt or no-prompt");
    c.variant = *v;
    c.jobs = merged.at("jobs").get<int>();
    const json& p = merged.at("paths");
    c.paths.corpus = p.at("corpus").get<std::string>();
    c.paths.checkpoints = p.at("checkpoints").get<std::string>();
    c.paths.reports = p.at("reports").get<std::string>();
    c.generator = GeneratorConfig::from_json(merged.at("generator"));
    c.model = ModelConfig::from_json(merged.at("model"));
    c.prompt = TrainConfig::from_json(merged.at("prompt"));
    c.prompt.stage = Stage::prompt;
    c.finetune = TrainConfig::from_json(merged.at("finetune"));
    c.finetune.stage = Stage::finetune;
    const std::string order = merged.at("order").get<std::string>();
    if (order != "shuffled" && order != "sequential") throw ConfigError("run config: order must be shuffled or sequential");
    c.order = order == "shuffled" ? ExternalOrder::shuffled : ExternalOrder::sequential;
    const json& d = merged.at("decode");
    c.decode.max_target_tokens = d.at("max_target_tokens").get<std::size_t>();
    c.decode.beam_width = d.at("beam_width").get<int>();
    c.decode.length_alpha = d.at("length_alpha").get<double>();
    const json& t = merged.at("tasks");
    c.max_context_turns = t.at("max_context_turns").get<std::size_t>();
    c.max_knowledge_tokens = t.at("max_knowledge_tokens").get<std::size_t>();
    const std::string scope = t.at("knowledge_scope").get<std::string>();
    if (scope != "session" && scope != "turn") throw ConfigError("run config: knowledge_scope must be session or turn");
    c.knowledge_scope = scope == "session" ? KnowledgeScope::session : KnowledgeScope::turn;
    const json& m = merged.at("metrics");
    c.metrics.bleu_smoothing = m.at("bleu_smoothing").get<bool>();
    c.metrics.bleu_orders = m.at("bleu_orders").get<std::vector<int>>();
    c.metrics.distinct_orders = m.at("distinct_orders").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = slurp(path);
  } catch (const DataError&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(doc);
}

std::string RunConfig::hash() const {
  json doc = to_json();
  // Paths and thread counts do not change results.
  doc.erase("paths");
  doc.erase("jobs");
  return hex64(fnv1a64(doc.dump()));
}

std::vector<std::string> RunConfig::problems() const {
  std::vector<std::string> out;
  ModelConfig m = model;
  m.vocab_size = std::max(m.vocab_size, 1);
  for (auto& p : m.problems()) out.push_back("model: " + p);
  for (auto& p : prompt.problems()) out.push_back("prompt: " + p);
  for (auto& p : finetune.problems()) out.push_back("finetune: " + p);
  if (jobs <= 0) out.push_back("jobs must be positive");
  if (decode.beam_width < 1) out.push_back("decode: beam_width must be at least 1");
  if (decode.max_target_tokens == 0) out.push_back("decode: max_target_tokens must be positive");
  if (decode.max_target_tokens + 1 + 32 > static_cast<std::size_t>(std::max(model.max_positions, 0)))
    out.push_back("decode: max_target_tokens leaves fewer than 32 input positions");
  for (int n : metrics.bleu_orders)
    if (n < 1) out.push_back("metrics: bleu orders must be positive");
  for (int n : metrics.distinct_orders)
    if (n < 1) out.push_back("metrics: distinct orders must be positive");
  return out;
}

void RunConfig::validate() const {
  auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid run config:";
  for (const auto& s : p) msg += " " + s + ";";
  msg.pop_back();
  throw ConfigError(msg);
}

TrainConfig RunConfig::stage_config(Stage stage) const {
  TrainConfig c = stage == Stage::prompt ? prompt : finetune;
  c.stage = stage;
  c.variant = variant;
  c.jobs = jobs;
  c.seed = derive_seed(seed, stage == Stage::prompt ? 2 : 3);
  return c;
}

ModelConfig RunConfig::model_config(const CorpusBundle& bundle) const {
  ModelConfig m = model;
  m.vocab_size = static_cast<int>(bundle.vocab.size());
  m.type_ids = kTypeIdCount;
  m.task_ids = kTaskIdCount;
  m.domain_ids = static_cast<int>(bundle.ontology.domain_id_count());
  m.seed = derive_seed(seed, 1);
  return m;
}

TaskOptions RunConfig::task_options(Variant v) const {
  TaskOptions o;
  o.max_target_tokens = decode.max_target_tokens;
  o.knowledge_scope = knowledge_scope;
  o.max_knowledge_tokens = max_knowledge_tokens;
  o.format.prompts = v == Variant::mt;
  o.format.max_context_turns = max_context_turns;
  const std::size_t positions = static_cast<std::size_t>(model.max_positions);
  o.format.grammar.max_length = positions > decode.max_target_tokens + 1 ? positions - decode.max_target_tokens - 1 : 1;
  return o;
}

std::optional<StageSelection> parse_stage_selection(std::string_view text) {
  if (text == "prompt") return StageSelection::prompt;
  if (text == "finetune") return StageSelection::finetune;
  if (text == "both") return StageSelection::both;
  return std::nullopt;
}

std::vector<EncodedExample> encode_sessions(std::span<const DialogSession> sessions, std::span<const Task> tasks,
                                            const TaskContext& ctx, const Vocabulary& vocab) {
  std::vector<EncodedExample> out;
  for (const auto& s : sessions)
    for (const auto& ex : build_examples(s, tasks, ctx)) out.push_back(encode_example(ex, vocab));
  return out;
}

json provenance_stamp(const RunConfig& cfg, const CorpusBundle& bundle) {
  return {{"seed", cfg.seed},
          {"config_hash", cfg.hash()},
          {"corpus_seed", bundle.seed},
          {"corpus_manifest", bundle.manifest_hash}};
}

Checkpoint initial_checkpoint(const CorpusBundle& bundle, const RunConfig& cfg) {
  cfg.validate();
  Checkpoint ck{Model(cfg.model_config(bundle))};
  ck.provenance = provenance_stamp(cfg, bundle);
  return ck;
}

void check_compatible(const Checkpoint& ck, const CorpusBundle& bundle) {
  const ModelConfig& m = ck.model.config();
  if (m.vocab_size != static_cast<int>(bundle.vocab.size()))
    throw ConfigError("checkpoint vocabulary has " + std::to_string(m.vocab_size) + " tokens, corpus has " +
                      std::to_string(bundle.vocab.size()));
  if (m.domain_ids != static_cast<int>(bundle.ontology.domain_id_count()))
    throw ConfigError("checkpoint was built for a different ontology");
  if (ck.provenance.contains("corpus_manifest") && ck.provenance["corpus_manifest"] != bundle.manifest_hash)
    throw ConfigError("checkpoint was trained on a different corpus (manifest " +
                      ck.provenance["corpus_manifest"].get<std::string>() + ")");
}

Variant checkpoint_variant(const Checkpoint& ck, Variant fallback) {
  return ck.history.empty() ? fallback : ck.history.back().variant;
}

TrainOutcome train_run(Checkpoint& ck, const CorpusBundle& bundle, const RunConfig& cfg, StageSelection stages,
                       const IntervalHook& hook) {
  cfg.validate();
  check_compatible(ck, bundle);
  const TaskContext ctx{bundle.ontology, bundle.kb, cfg.task_options(cfg.variant)};
  ContinualConfig cc;
  cc.prompt = cfg.stage_config(Stage::prompt);
  cc.finetune = cfg.stage_config(Stage::finetune);
  cc.order = cfg.order;
  cc.skip_prompt_stage = stages == StageSelection::finetune;
  cc.skip_finetune_stage = stages == StageSelection::prompt;

  TrainOutcome out;
  std::vector<std::vector<EncodedExample>> external;
  std::vector<std::string> ids;
  if (!cc.skip_prompt_stage) {
    if (bundle.split.external.empty()) throw DataError("corpus has no external single-type corpora");
    for (const auto& [type, sessions] : bundle.split.external) {
      external.push_back(encode_sessions(sessions, kTasks, ctx, bundle.vocab));
      ids.push_back(bundle.manifest_hash + "/" + external_file_name(type));
      out.prompt_examples += external.back().size();
    }
  }
  std::vector<EncodedExample> target;
  if (!cc.skip_finetune_stage) {
    if (bundle.split.train.empty()) throw DataError("corpus has no training sessions");
    target = encode_sessions(bundle.split.train, kTasks, ctx, bundle.vocab);
    out.finetune_examples = target.size();
  }
  out.log = continual_train(ck, external, ids, target, bundle.manifest_hash + "/train", cc, hook);
  ck.provenance = provenance_stamp(cfg, bundle);
  return out;
}

EvalOutput evaluate(const Checkpoint& ck, const CorpusBundle& bundle, std::span<const DialogSession> sessions,
                    const RunConfig& cfg, const EvalOptions& options) {
  check_compatible(ck, bundle);
  if (options.max_sessions && sessions.size() > options.max_sessions) sessions = sessions.first(options.max_sessions);
  if (sessions.empty()) throw DataError("no sessions to evaluate");
  const Variant variant = checkpoint_variant(ck, cfg.variant);
  const TaskContext ctx{bundle.ontology, bundle.kb, cfg.task_options(variant)};
  const ModelPredictor predictor(ck.model, bundle.vocab, cfg.decode);
  const GoldIndex gold(sessions);
  const std::string ck_hash = hex64(fnv1a64(serialize_checkpoint(ck)));

  EvalOutput out;
  for (Task task : options.tasks) {
    auto records = run_task_all(predictor, sessions, task, ctx, DstMode::rollout, cfg.jobs);
    if (task == Task::dst && options.dst_oracle) {
      auto oracle = run_task_all(predictor, sessions, task, ctx, DstMode::oracle_state, cfg.jobs);
      records.insert(records.end(), oracle.begin(), oracle.end());
    }
    MetricsReport rep = score_records(task, records, gold, bundle.ontology, cfg.metrics);
    rep.variant = std::string(to_string(variant));
    json prov = ck.provenance;
    prov["checkpoint"] = ck_hash;
    prov["eval_seed"] = cfg.seed;
    prov["eval_config_hash"] = cfg.hash();
    rep.config["provenance"] = prov;
    rep.config["decode"] = cfg.to_json().at("decode");
    out.reports.emplace(task, std::move(rep));
    out.records.emplace(task, std::move(records));
  }
  return out;
}

std::vector<std::string> verify_provenance(const std::filesystem::path& corpus_dir,
                                           const std::filesystem::path& checkpoint,
                                           std::span<const std::filesystem::path> reports) {
  std::vector<std::string> broken;
  const CorpusBundle bundle = read_bundle(corpus_dir);
  const std::string bytes = slurp(checkpoint);
  const Checkpoint ck = deserialize_checkpoint(bytes);
  const std::string ck_hash = hex64(fnv1a64(bytes));
  const json& p = ck.provenance;
  for (const char* key : {"seed", "config_hash", "corpus_seed", "corpus_manifest"})
    if (!p.contains(key)) broken.push_back(checkpoint.string() + ": provenance lacks '" + key + "'");
  if (p.contains("corpus_manifest") && p["corpus_manifest"] != bundle.manifest_hash)
    broken.push_back(checkpoint.string() + ": corpus manifest does not match " + corpus_dir.string());
  if (p.contains("corpus_seed") && p["corpus_seed"] != bundle.seed)
    broken.push_back(checkpoint.string() + ": corpus seed does not match " + corpus_dir.string());
  for (const auto& r : reports) {
    json doc;
    try {
      doc = json::parse(slurp(r));
    } catch (const json::exception& e) {
      broken.push_back(r.string() + ": " + e.what());
      continue;
    }
    const json prov = doc.value("config", json::object()).value("provenance", json::object());
    if (prov.value("checkpoint", std::string{}) != ck_hash)
      broken.push_back(r.string() + ": checkpoint hash does not match " + checkpoint.string());
    if (prov.value("corpus_manifest", std::string{}) != bundle.manifest_hash)
      broken.push_back(r.string() + ": corpus manifest does not match " + corpus_dir.string());
    if (!prov.contains("seed") || !prov.contains("config_hash"))
      broken.push_back(r.string() + ": provenance lacks seed or config hash");
  }
  return broken;
}

}  // namespace mixdial
