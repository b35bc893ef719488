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

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mixdial/ontology.hpp"
#include "mixdial/schema.hpp"
#include "mixdial/text.hpp"

namespace mixdial {

enum class Task { dst, dap, rg, e2e };
inline constexpr std::array<Task, 4> kTasks = {Task::dst, Task::dap, Task::rg, Task::e2e};
std::string_view to_string(Task task);
std::optional<Task> parse_task(std::string_view name);

enum class Speaker { user, wizard };
std::string_view to_string(Speaker speaker);

/// Reserved marker tokens and the length policy of the flat sequence format.
///
/// Every marker is bracketed, so no content token can collide with one.
/// Inputs longer than `max_length` lose their oldest context turns first;
/// prompts and extras segments are never truncated.
struct SequenceGrammar {
  static constexpr std::string_view kUnk = "[unk]";
  static constexpr std::string_view kEos = "[eos]";
  static constexpr std::string_view kGen = "[gen]";
  static constexpr std::string_view kUser = "[user]";
  static constexpr std::string_view kWizard = "[wizard]";
  static constexpr std::string_view kStateOpen = "[state]";
  static constexpr std::string_view kStateClose = "[/state]";
  static constexpr std::string_view kActOpen = "[act]";
  static constexpr std::string_view kActClose = "[/act]";
  static constexpr std::string_view kKbOpen = "[kb]";
  static constexpr std::string_view kKbClose = "[/kb]";
  static constexpr std::string_view kSep = "[;]";
  static constexpr std::string_view kAssign = "[=]";
  static constexpr std::string_view kHeader = "[hdr]";
  static constexpr std::string_view kPromptKnowledge = "[Knowledge]";
  static constexpr std::string_view kPromptQa = "[Question|Answer]";
  static constexpr std::string_view kPromptTask = "[Domain|Slot|Value]";
  static constexpr std::string_view kPromptChat = "[Chat]";
  static constexpr std::string_view kPromptUnknown = "[Unknown]";
  static constexpr std::string_view kNone = "none";

  /// Fixed-order list of every marker; ids 0..n-1 of any Vocabulary.
  static const std::vector<std::string>& special_tokens();

  std::size_t max_length = 512;
};

/// Dialog type and active domain of a DST turn, carried in the output so
/// type and domain accuracy can be scored.
struct StateHeader {
  std::optional<DialogType> type;
  std::string domain;
  bool operator==(const StateHeader&) const = default;
};

struct ParseReport {
  std::size_t segments = 0;
  std::size_t dropped = 0;
  bool markers_found = true;
  bool clean() const { return dropped == 0 && markers_found; }
};

struct ParsedState {
  DialogState state;
  std::optional<StateHeader> header;
  ParseReport report;
};

struct ParsedAct {
  DialogAct act;
  ParseReport report;
};

/// Per-type prompt. The knowledge prompt carries the supplied knowledge
/// sentences after its marker, separated by `[;]`.
Tokens prompt_prefix(DialogType type, std::span<const Tokens> knowledge = {});

Tokens serialize_state(const DialogState& state);
Tokens serialize_state(const DialogState& state, const StateHeader& header);
/// Never fails; malformed segments are dropped and counted.
ParsedState parse_state(std::span<const std::string> tokens);

Tokens serialize_act(const DialogAct& act);
ParsedAct parse_act(std::span<const std::string> tokens);

/// `[value_<domain>_<slot>]`
std::string placeholder(std::string_view domain, std::string_view slot);
bool is_placeholder(std::string_view token);
std::vector<std::string> placeholder_tokens(const Ontology& ontology);

DialogAct delexicalize(const DialogAct& act);
/// Replaces every occurrence of an act value inside a response by its placeholder.
Tokens delexicalize_response(std::span<const std::string> response, const DialogAct& act);

struct Relexicalized {
  Tokens tokens;
  std::size_t unresolved = 0;
};
/// The k-th occurrence of a placeholder takes the k-th matching act value
/// (act order); later occurrences reuse the last one.
Relexicalized relexicalize(std::span<const std::string> response, const DialogAct& act);

// Embedding ids. 0 is the reserved unknown id of every table.
inline constexpr int kTypeIdCount = 5;
inline constexpr int kTaskIdCount = 5;
int type_id(std::optional<DialogType> type);
int task_id(std::optional<Task> task);

/// Token sequence with parallel id sequences; all four have equal length.
struct FormattedInput {
  Tokens tokens;
  std::vector<int> type_ids;
  std::vector<int> task_ids;
  std::vector<int> domain_ids;
  // Ids given to generated (target) positions.
  int target_type = 0;
  int target_task = 0;
  int target_domain = 0;
  std::size_t context_turns = 0;

  std::size_t size() const { return tokens.size(); }
};

struct ContextTurn {
  Speaker speaker = Speaker::user;
  Tokens utterance;
  std::optional<DialogType> type;
  std::string domain;
};

struct TaskInput {
  Task task = Task::e2e;
  std::span<const ContextTurn> context;
  std::optional<DialogType> type;  // of the turn being predicted
  std::string domain;
  DialogState state;                     // DST: recent state, DAP: current state
  std::vector<Tokens> knowledge;         // DAP: coarse knowledge items
  DialogAct act;                         // RG: delexicalized act
  std::vector<Tokens> prompt_knowledge;  // sentences for the [Knowledge] prompt
};

struct FormatOptions {
  SequenceGrammar grammar;
  /// false formats the no-prompt ablation: no prompt prefix, all ids unknown.
  bool prompts = true;
  /// 0 keeps as many turns as fit.
  std::size_t max_context_turns = 0;
};

/// Throws DataError when prompt and extras alone exceed the maximum length.
FormattedInput format_task_input(const TaskInput& input, const Ontology& ontology,
                                 const FormatOptions& options);

struct TaskGold {
  DialogState state;
  StateHeader header;
  DialogAct act;
  Tokens response;  // RG callers pass the delexicalized response
};
Tokens format_task_target(Task task, const TaskGold& gold);

}  // namespace mixdial
