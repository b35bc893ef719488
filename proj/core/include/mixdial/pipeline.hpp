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

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixdial/corpus.hpp"
#include "mixdial/decode.hpp"
#include "mixdial/metrics.hpp"
#include "mixdial/model.hpp"
#include "mixdial/tasks.hpp"
#include "mixdial/train.hpp"

namespace mixdial {

struct RunPaths {
  std::filesystem::path corpus = "run/corpus";
  std::filesystem::path checkpoints = "run/checkpoints";
  std::filesystem::path reports = "run/reports";
  bool operator==(const RunPaths&) const = default;
};

/// Everything one experiment needs. The corpus has its own seed
/// (generator.seed); `seed` drives model initialization and both stages.
struct RunConfig {
  RunPaths paths;
  GeneratorConfig generator = GeneratorConfig::defaults();
  /// vocab_size and domain_ids are taken from the corpus.
  ModelConfig model;
  /// defaults() runs 1500 prompt-stage and 4500 finetune-stage steps.
  TrainConfig prompt;
  TrainConfig finetune;
  ExternalOrder order = ExternalOrder::shuffled;
  DecodeConfig decode;
  std::size_t max_context_turns = 8;
  std::size_t max_knowledge_tokens = 160;
  KnowledgeScope knowledge_scope = KnowledgeScope::session;
  MetricsOptions metrics;
  std::uint64_t seed = 1;
  Variant variant = Variant::mt;
  int jobs = 1;

  static RunConfig defaults();
  /// Partial documents are merged over the defaults.
  static RunConfig from_json(const nlohmann::json& doc);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  std::string hash() const;

  std::vector<std::string> problems() const;
  void validate() const;

  /// Stage configs with derived seeds, the variant and jobs filled in.
  TrainConfig stage_config(Stage stage) const;
  /// Model config sized for the corpus.
  ModelConfig model_config(const CorpusBundle& bundle) const;
  /// Input formatting for a variant; inputs leave room for the target and end marker.
  TaskOptions task_options(Variant variant) const;
};

/// Encoded training examples of every wizard turn for the given tasks.
std::vector<EncodedExample> encode_sessions(std::span<const DialogSession> sessions, std::span<const Task> tasks,
                                            const TaskContext& ctx, const Vocabulary& vocab);

enum class StageSelection { prompt, finetune, both };
std::optional<StageSelection> parse_stage_selection(std::string_view text);

struct TrainOutcome {
  ContinualLog log;
  std::size_t prompt_examples = 0;
  std::size_t finetune_examples = 0;
};

/// Trains the selected stages. Without a starting checkpoint a fresh model is
/// initialized. Provenance (seeds, config hash, corpus hash) is attached.
TrainOutcome train_run(Checkpoint& checkpoint, const CorpusBundle& bundle, const RunConfig& cfg,
                       StageSelection stages, const IntervalHook& hook = {});
Checkpoint initial_checkpoint(const CorpusBundle& bundle, const RunConfig& cfg);

/// Variant the checkpoint was trained with (the run config's when untrained).
Variant checkpoint_variant(const Checkpoint& checkpoint, Variant fallback);

struct EvalOptions {
  std::vector<Task> tasks = {kTasks.begin(), kTasks.end()};
  bool dst_oracle = true;  // also run the oracle-state DST mode
  std::size_t max_sessions = 0;  // 0 evaluates every session
};

struct EvalOutput {
  std::map<Task, std::vector<PredictionRecord>> records;
  std::map<Task, MetricsReport> reports;
};

/// Throws ConfigError when the checkpoint does not fit the corpus vocabulary or ontology.
void check_compatible(const Checkpoint& checkpoint, const CorpusBundle& bundle);

EvalOutput evaluate(const Checkpoint& checkpoint, const CorpusBundle& bundle, std::span<const DialogSession> sessions,
                    const RunConfig& cfg, const EvalOptions& options = {});

/// Seed and hash fields embedded in every produced artifact.
nlohmann::json provenance_stamp(const RunConfig& cfg, const CorpusBundle& bundle);

/// Verifies corpus -> checkpoint -> report links. Returns the broken links.
std::vector<std::string> verify_provenance(const std::filesystem::path& corpus_dir,
                                           const std::filesystem::path& checkpoint,
                                           std::span<const std::filesystem::path> reports);

}  // namespace mixdial
