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

#include "mixdial/session.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "mixdial/errors.hpp"

namespace mixdial {

using nlohmann::json;

std::vector<std::size_t> DialogSession::wizard_turns() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < turns.size(); ++i)
    if (turns[i].speaker == Speaker::wizard) out.push_back(i);
  return out;
}

const DialogState& DialogSession::state_before(std::size_t index) const {
  static const DialogState kEmpty;
  return index == 0 || index > turns.size() ? kEmpty : turns[index - 1].state;
}

std::vector<std::string> check_session(const DialogSession& session, const Ontology& ontology) {
  std::vector<std::string> out;
  DialogState folded;
  for (std::size_t i = 0; i < session.turns.size(); ++i) {
    const Turn& t = session.turns[i];
    const std::string where = session.id + " turn " + std::to_string(i) + ": ";
    const Speaker expected = i % 2 == 0 ? Speaker::user : Speaker::wizard;
    if (t.speaker != expected) out.push_back(where + "speakers do not alternate");
    try {
      folded = apply_delta(folded, t.delta, ontology);
    } catch (const DeltaError& e) {
      out.push_back(where + "delta rejected: " + e.what());
    }
    if (!(folded == t.state)) out.push_back(where + "state is not the fold of the deltas");
    for (const auto& v : validate_state(t.state, ontology).violations)
      out.push_back(where + "state " + v.domain + "/" + v.path + ": " + v.rule);
    if (t.speaker == Speaker::wizard)
      for (const auto& v : validate_act(t.act, ontology).violations)
        out.push_back(where + "act " + v.domain + "/" + v.path + ": " + v.rule);
    else if (!t.act.empty())
      out.push_back(where + "user turn carries an act");
    if (t.utterance.empty()) out.push_back(where + "empty utterance");
  }
  return out;
}

json session_to_json(const DialogSession& s) {
  json turns = json::array();
  for (const auto& t : s.turns) {
    json j;
    j["speaker"] = std::string(to_string(t.speaker));
    j["utterance"] = join_tokens(t.utterance);
    j["type"] = std::string(to_string(t.type));
    j["domain"] = t.domain;
    if (t.speaker == Speaker::wizard) {
      j["act"] = act_to_json(t.act);
      j["knowledge"] = t.knowledge;
      j["factual"] = t.factual;
    }
    j["delta"] = delta_to_json(t.delta);
    j["state"] = state_to_json(t.state);
    turns.push_back(std::move(j));
  }
  return {{"id", s.id}, {"template", s.template_id}, {"completed_orders", s.completed_orders}, {"turns", turns}};
}

namespace {

const json& need(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) throw DataError(std::string("missing field '") + key + "'");
  return doc.at(key);
}

std::string need_str(const json& doc, const char* key) {
  const json& v = need(doc, key);
  if (!v.is_string()) throw DataError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

DialogSession session_from_json(const json& doc) {
  DialogSession s;
  s.id = need_str(doc, "id");
  s.template_id = need_str(doc, "template");
  const json& co = need(doc, "completed_orders");
  if (!co.is_number_unsigned() && !co.is_number_integer()) throw DataError("field 'completed_orders' must be an integer");
  s.completed_orders = co.get<std::size_t>();
  const json& turns = need(doc, "turns");
  if (!turns.is_array()) throw DataError("field 'turns' must be a list");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const json& j = turns[i];
    try {
      Turn t;
      const std::string speaker = need_str(j, "speaker");
      if (speaker != "user" && speaker != "wizard") throw DataError("field 'speaker' must be user or wizard");
      t.speaker = speaker == "user" ? Speaker::user : Speaker::wizard;
      t.utterance = split_tokens(need_str(j, "utterance"));
      auto type = parse_dialog_type(need_str(j, "type"));
      if (!type) throw DataError("field 'type' is not a dialog type");
      t.type = *type;
      t.domain = need_str(j, "domain");
      if (t.speaker == Speaker::wizard) {
        t.act = act_from_json(need(j, "act"));
        const json& k = need(j, "knowledge");
        if (!k.is_array()) throw DataError("field 'knowledge' must be a list");
        for (const auto& ref : k) t.knowledge.push_back(ref.get<std::string>());
        const json& f = need(j, "factual");
        if (!f.is_boolean()) throw DataError("field 'factual' must be a boolean");
        t.factual = f.get<bool>();
      }
      t.delta = delta_from_json(need(j, "delta"));
      t.state = state_from_json(need(j, "state"));
      s.turns.push_back(std::move(t));
    } catch (const DataError& e) {
      throw DataError("turns[" + std::to_string(i) + "]: " + e.what());
    } catch (const json::exception& e) {
      throw DataError("turns[" + std::to_string(i) + "]: " + e.what());
    }
  }
  return s;
}

void write_sessions(const std::filesystem::path& path, const std::vector<DialogSession>& sessions) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& s : sessions) out << session_to_json(s).dump() << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<DialogSession> read_sessions(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<DialogSession> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path.filename().string() + ":" + std::to_string(lineno) + ": ";
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + "malformed record (" + e.what() + ")");
    }
    try {
      out.push_back(session_from_json(doc));
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return out;
}

std::string external_file_name(DialogType type) { return "external_" + std::string(to_string(type)) + ".jsonl"; }

void write_corpus(const CorpusSplit& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_sessions(dir / "train.jsonl", split.train);
  write_sessions(dir / "dev.jsonl", split.dev);
  write_sessions(dir / "test.jsonl", split.test);
  for (const auto& [type, sessions] : split.external) write_sessions(dir / external_file_name(type), sessions);
}

CorpusSplit read_corpus(const std::filesystem::path& dir) {
  CorpusSplit split;
  split.train = read_sessions(dir / "train.jsonl");
  split.dev = read_sessions(dir / "dev.jsonl");
  split.test = read_sessions(dir / "test.jsonl");
  for (auto type : kDialogTypes) {
    const auto path = dir / external_file_name(type);
    if (std::filesystem::exists(path)) split.external[type] = read_sessions(path);
  }
  return split;
}

CorpusStats corpus_stats(const std::vector<DialogSession>& sessions) {
  CorpusStats st;
  for (const auto& s : sessions) {
    ++st.dialogs;
    std::set<DialogType> types;
    for (const auto& t : s.turns) {
      ++st.utterances;
      st.tokens += t.utterance.size();
      types.insert(t.type);
    }
    for (auto type : types) ++st.sessions_with_type[type];
  }
  return st;
}

}  // namespace mixdial
