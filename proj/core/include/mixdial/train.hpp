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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixdial/model.hpp"

namespace mixdial {

enum class Stage { prompt, finetune };
enum class Variant { mt, no_prompt };
std::string_view to_string(Stage stage);
std::string_view to_string(Variant variant);
std::optional<Stage> parse_stage(std::string_view text);
std::optional<Variant> parse_variant(std::string_view text);

struct TrainConfig {
  Stage stage = Stage::finetune;
  Variant variant = Variant::mt;
  double learning_rate = 1e-3;
  int batch_size = 8;
  int steps = 1000;
  double clip_norm = 1.0;
  int eval_interval = 50;
  int warmup_steps = 50;
  /// Linear decay from the peak rate to `final_lr_fraction` of it after warmup.
  bool decay = true;
  double final_lr_fraction = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 1;
  /// Worker threads for per-example gradients; results do not depend on it.
  int jobs = 1;

  std::vector<std::string> problems() const;
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& doc);
  double rate_at(int step) const;
  bool operator==(const TrainConfig&) const = default;
};

struct StageRecord {
  Stage stage = Stage::finetune;
  Variant variant = Variant::mt;
  std::string corpus_id;
  int steps = 0;
  std::uint64_t seed = 0;
  bool operator==(const StageRecord&) const = default;
};

struct AdamState {
  std::vector<float> m;
  std::vector<float> v;
  std::int64_t step = 0;
  bool operator==(const AdamState&) const = default;
};

struct Checkpoint {
  Model model;
  std::vector<StageRecord> history;
  AdamState optimizer;
  /// Seeds and hashes of the inputs that produced this checkpoint.
  nlohmann::json provenance = nlohmann::json::object();

  explicit Checkpoint(Model m) : model(std::move(m)) {}
};

struct IntervalLoss {
  int step = 0;  // last step of the interval, 1-based
  double loss = 0;
};

struct StepLog {
  std::vector<double> losses;  // one per optimizer step
  std::vector<IntervalLoss> intervals;
};

/// Called after every evaluation interval with (step, interval mean loss).
using IntervalHook = std::function<void(int, double)>;

/// Runs cfg.steps Adam steps over `corpus` (fresh optimizer moments) and appends
/// a stage record. Throws DivergenceError when a loss is not finite.
StepLog train_stage(Checkpoint& checkpoint, std::span<const EncodedExample> corpus, const TrainConfig& cfg,
                    const std::string& corpus_id, const IntervalHook& hook = {});

enum class ExternalOrder { shuffled, sequential };

struct ContinualConfig {
  TrainConfig prompt;
  TrainConfig finetune;
  ExternalOrder order = ExternalOrder::shuffled;
  bool skip_prompt_stage = false;
  bool skip_finetune_stage = false;
};

struct ContinualLog {
  std::vector<StepLog> prompt;  // one entry, or one per corpus when sequential
  StepLog finetune;
};

/// Stage 1 over the external corpora, stage 2 over the target corpus. All
/// parameters train in both stages.
ContinualLog continual_train(Checkpoint& checkpoint, std::span<const std::vector<EncodedExample>> external,
                             std::span<const std::string> external_ids, std::span<const EncodedExample> target,
                             const std::string& target_id, const ContinualConfig& cfg, const IntervalHook& hook = {});

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container: magic, version, JSON header, float tensors.
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mixdial
