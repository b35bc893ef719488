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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mixdial/linearize.hpp"
#include "mixdial/ontology.hpp"
#include "mixdial/schema.hpp"
#include "mixdial/text.hpp"

namespace mixdial {

struct Turn {
  Speaker speaker = Speaker::user;
  Tokens utterance;
  DialogType type = DialogType::chitchat;
  std::string domain;
  // Wizard turns only.
  DialogAct act;
  std::vector<std::string> knowledge;
  bool factual = true;
  // Gold annotations after this turn.
  StateDelta delta;
  DialogState state;

  bool operator==(const Turn&) const = default;
};

struct DialogSession {
  std::string id;
  std::string template_id;
  std::vector<Turn> turns;
  std::size_t completed_orders = 0;

  std::vector<std::size_t> wizard_turns() const;
  /// State before turn `index` (empty for the first turn).
  const DialogState& state_before(std::size_t index) const;
  bool operator==(const DialogSession&) const = default;
};

/// Mechanical consistency checks: speaker alternation, delta fold, schema validity.
std::vector<std::string> check_session(const DialogSession& session, const Ontology& ontology);

struct CorpusSplit {
  std::vector<DialogSession> train;
  std::vector<DialogSession> dev;
  std::vector<DialogSession> test;
  /// Single-type corpora, keyed by dialog type.
  std::map<DialogType, std::vector<DialogSession>> external;

  bool operator==(const CorpusSplit&) const = default;
};

nlohmann::json session_to_json(const DialogSession& session);
DialogSession session_from_json(const nlohmann::json& doc);

/// One session per line.
void write_sessions(const std::filesystem::path& path, const std::vector<DialogSession>& sessions);
/// Throws DataError("<file>:<line>: <field problem>") on malformed records.
std::vector<DialogSession> read_sessions(const std::filesystem::path& path);

/// Writes train/dev/test and external_<type>.jsonl under `dir`.
void write_corpus(const CorpusSplit& split, const std::filesystem::path& dir);
CorpusSplit read_corpus(const std::filesystem::path& dir);

std::string external_file_name(DialogType type);

struct CorpusStats {
  std::size_t dialogs = 0;
  std::size_t utterances = 0;
  std::size_t tokens = 0;
  std::map<DialogType, std::size_t> sessions_with_type;
  double avg_utterances() const { return dialogs ? double(utterances) / double(dialogs) : 0.0; }
  double avg_tokens() const { return utterances ? double(tokens) / double(utterances) : 0.0; }
};
CorpusStats corpus_stats(const std::vector<DialogSession>& sessions);

}  // namespace mixdial
