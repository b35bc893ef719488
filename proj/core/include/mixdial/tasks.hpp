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

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mixdial/decode.hpp"
#include "mixdial/knowledge_base.hpp"
#include "mixdial/linearize.hpp"
#include "mixdial/model.hpp"
#include "mixdial/ontology.hpp"
#include "mixdial/session.hpp"
#include "mixdial/vocab.hpp"

namespace mixdial {

enum class DstMode { rollout, oracle_state };
std::string_view to_string(DstMode mode);

enum class KnowledgeScope { session, turn };

/// How sessions become model inputs.
struct TaskOptions {
  /// format.grammar.max_length bounds the input; callers keep
  /// input + target + 1 within the model's positions.
  FormatOptions format;
  std::size_t max_target_tokens = 300;
  KnowledgeScope knowledge_scope = KnowledgeScope::session;
  /// DAP knowledge budget in tokens, further capped by the room the input
  /// has left. Items of entities already in the current state come first and
  /// whole items are kept until the budget runs out. 0 means no cap beyond
  /// the input room.
  std::size_t max_knowledge_tokens = 160;
};

/// Anything that maps a formatted input to output tokens.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Tokens predict(const FormattedInput& input, std::size_t max_tokens) const = 0;
};

class ModelPredictor : public Predictor {
 public:
  ModelPredictor(const Model& model, const Vocabulary& vocab, DecodeConfig decode = {})
      : model_(model), vocab_(vocab), decode_(decode) {}
  Tokens predict(const FormattedInput& input, std::size_t max_tokens) const override;

 private:
  const Model& model_;
  const Vocabulary& vocab_;
  DecodeConfig decode_;
};

/// Read-only resources every pipeline needs.
struct TaskContext {
  const Ontology& ontology;
  const KnowledgeBase& kb;
  TaskOptions options;
};

/// Context turns of a session up to and including turn `last`.
std::vector<ContextTurn> context_until(const DialogSession& session, std::size_t last);

/// Most recently mentioned KB entity of `domain` in the context, if any.
const Entity* topic_entity(std::span<const ContextTurn> context, const KnowledgeBase& kb, std::string_view domain);

/// Coarse knowledge items fed to DAP at wizard turn `turn`.
std::vector<KnowledgeItem> dap_knowledge(const DialogSession& session, std::size_t turn, const TaskContext& ctx);

/// Model input for `task` at wizard turn `turn`. For DST the recent state is
/// passed explicitly so rollout and oracle modes share this function.
FormattedInput task_input(const DialogSession& session, std::size_t turn, Task task, const TaskContext& ctx,
                          const DialogState* recent_state = nullptr);
/// Gold target tokens (RG targets are delexicalized).
Tokens task_target(const DialogSession& session, std::size_t turn, Task task);

/// Gold state at the wizard turn before `turn` (empty for the first one).
const DialogState& previous_wizard_state(const DialogSession& session, std::size_t turn);

struct TaskExample {
  std::string session_id;
  std::size_t turn = 0;
  Task task = Task::dst;
  FormattedInput input;
  Tokens target;
  bool truncated = false;  // target cut to the budget; no end marker
};

/// Training examples of the given tasks for every wizard turn. Targets longer
/// than the budget are cut and lose their end marker.
std::vector<TaskExample> build_examples(const DialogSession& session, std::span<const Task> tasks,
                                        const TaskContext& ctx);
/// Input ⊕ target ⊕ [eos] as ids; generated positions take the target ids.
EncodedExample encode_example(const TaskExample& example, const Vocabulary& vocab);

/// One informed value found in a response.
struct Mention {
  std::string domain;
  std::string entity;  // empty when no entity could be resolved
  std::string slot;
  std::string value;
  bool correct = false;
  bool operator==(const Mention&) const = default;
};

/// Exact value-string matching of KB attribute values. The entity is the one
/// named in the response, otherwise the most recently named one in context.
std::vector<Mention> extract_mentions(std::span<const std::string> response, std::span<const ContextTurn> context,
                                      const KnowledgeBase& kb);

struct PredictionRecord {
  std::string session_id;
  std::size_t turn = 0;
  Task task = Task::dst;
  std::string mode;  // DST only: rollout | oracle-state
  Tokens raw;        // model output
  ParseReport report;
  // Predicted objects; which ones are set depends on the task.
  DialogState state;
  std::optional<StateHeader> header;
  DialogAct act;
  Tokens response;  // relexicalized for RG
  std::size_t unresolved_placeholders = 0;
  std::vector<Mention> mentions;
  std::string gold;  // "<session id>#<turn>"
};

nlohmann::json record_to_json(const PredictionRecord& record);
PredictionRecord record_from_json(const nlohmann::json& doc);
void write_records(const std::filesystem::path& path, const std::vector<PredictionRecord>& records);
std::vector<PredictionRecord> read_records(const std::filesystem::path& path);

std::vector<PredictionRecord> run_dst(const Predictor& predictor, const DialogSession& session, DstMode mode,
                                      const TaskContext& ctx);
std::vector<PredictionRecord> run_dap(const Predictor& predictor, const DialogSession& session,
                                      const TaskContext& ctx);
std::vector<PredictionRecord> run_rg(const Predictor& predictor, const DialogSession& session,
                                     const TaskContext& ctx);
std::vector<PredictionRecord> run_e2e(const Predictor& predictor, const DialogSession& session,
                                      const TaskContext& ctx);
std::vector<PredictionRecord> run_task(const Predictor& predictor, const DialogSession& session, Task task,
                                       const TaskContext& ctx, DstMode mode = DstMode::rollout);

/// Runs one task over many sessions, fanning out over `jobs` threads; the
/// output order is the session order.
std::vector<PredictionRecord> run_task_all(const Predictor& predictor, std::span<const DialogSession> sessions,
                                           Task task, const TaskContext& ctx, DstMode mode = DstMode::rollout,
                                           int jobs = 1);

/// Index of the first record whose rollout state differs from the oracle-state one.
std::optional<std::size_t> first_divergence(std::span<const PredictionRecord> rollout,
                                            std::span<const PredictionRecord> oracle);

}  // namespace mixdial
