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

#include "mixdial/tasks.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <thread>

#include <nlohmann/json.hpp>

#include "mixdial/errors.hpp"

namespace mixdial {

using nlohmann::json;

std::string_view to_string(DstMode mode) { return mode == DstMode::rollout ? "rollout" : "oracle-state"; }

Tokens ModelPredictor::predict(const FormattedInput& input, std::size_t max_tokens) const {
  SequenceIds prompt;
  prompt.tokens = vocab_.encode(input.tokens);
  prompt.types = input.type_ids;
  prompt.tasks = input.task_ids;
  prompt.domains = input.domain_ids;
  DecodeConfig dc = decode_;
  dc.max_target_tokens = std::min(dc.max_target_tokens, max_tokens);
  const auto ids = generate(model_, prompt, {input.target_type, input.target_task, input.target_domain},
                            vocab_.eos_id(), dc);
  return vocab_.decode(ids);
}

std::vector<ContextTurn> context_until(const DialogSession& session, std::size_t last) {
  std::vector<ContextTurn> out;
  for (std::size_t i = 0; i <= last && i < session.turns.size(); ++i) {
    const Turn& t = session.turns[i];
    out.push_back({t.speaker, t.utterance, t.type, t.domain});
  }
  return out;
}

namespace {

// Token positions at which `needle` occurs in `hay`.
std::vector<std::size_t> occurrences(std::span<const std::string> hay, const Tokens& needle) {
  std::vector<std::size_t> out;
  if (needle.empty() || needle.size() > hay.size()) return out;
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i)
    if (std::equal(needle.begin(), needle.end(), hay.begin() + static_cast<std::ptrdiff_t>(i))) out.push_back(i);
  return out;
}

struct NameHit {
  const Entity* entity;
  std::size_t position;
};

// Entity names in a token sequence, longest first at each position.
std::vector<NameHit> find_names(std::span<const std::string> tokens, const KnowledgeBase& kb) {
  std::vector<NameHit> hits;
  for (const auto& e : kb.entities())
    for (std::size_t p : occurrences(tokens, split_tokens(e.name))) hits.push_back({&e, p});
  std::sort(hits.begin(), hits.end(), [](const NameHit& a, const NameHit& b) {
    if (a.position != b.position) return a.position < b.position;
    return a.entity->name.size() > b.entity->name.size();
  });
  return hits;
}

}  // namespace

const Entity* topic_entity(std::span<const ContextTurn> context, const KnowledgeBase& kb, std::string_view domain) {
  for (std::size_t i = context.size(); i-- > 0;) {
    auto hits = find_names(context[i].utterance, kb);
    for (auto it = hits.rbegin(); it != hits.rend(); ++it)
      if (it->entity->domain == domain) return it->entity;
  }
  return nullptr;
}

std::vector<KnowledgeItem> dap_knowledge(const DialogSession& session, std::size_t turn, const TaskContext& ctx) {
  if (ctx.options.knowledge_scope == KnowledgeScope::session)
    return session.turns.empty() ? std::vector<KnowledgeItem>{}
                                 : retrieve_coarse_knowledge(session.turns.back().state, ctx.kb);
  return retrieve_coarse_knowledge(session.state_before(turn), ctx.kb);
}

const DialogState& previous_wizard_state(const DialogSession& session, std::size_t turn) {
  static const DialogState kEmpty;
  for (std::size_t i = std::min(turn, session.turns.size()); i-- > 0;)
    if (session.turns[i].speaker == Speaker::wizard) return session.turns[i].state;
  return kEmpty;
}

namespace {

std::vector<Tokens> budget_knowledge(std::vector<KnowledgeItem> items, const DialogState& state, std::size_t budget) {
  auto current = [&](const KnowledgeItem& i) {
    const DomainState* d = state.find(i.domain);
    return d && d->entities.count(i.entity) > 0;
  };
  std::stable_partition(items.begin(), items.end(), current);
  std::vector<Tokens> out;
  std::size_t used = 1;  // closing marker
  for (auto& item : items) {
    const std::size_t cost = item.tokens.size() + 1;  // separator
    if (used + cost > budget) break;
    used += cost;
    out.push_back(std::move(item.tokens));
  }
  return out;
}

// Tokens left for the DAP knowledge segment once the prompt, the state and the
// newest user turn are placed.
std::size_t knowledge_room(const TaskInput& in, const TaskOptions& options) {
  constexpr std::size_t kContextReserve = 24;
  std::size_t fixed = serialize_state(in.state).size() + 1;
  if (options.format.prompts) fixed += in.type ? prompt_prefix(*in.type, in.prompt_knowledge).size() : 1;
  const std::size_t max_len = options.format.grammar.max_length;
  const std::size_t room = max_len > fixed + kContextReserve ? max_len - fixed - kContextReserve : 0;
  return options.max_knowledge_tokens ? std::min(room, options.max_knowledge_tokens) : room;
}

}  // namespace

FormattedInput task_input(const DialogSession& session, std::size_t turn, Task task, const TaskContext& ctx,
                          const DialogState* recent_state) {
  if (turn >= session.turns.size() || session.turns[turn].speaker != Speaker::wizard)
    throw DataError(session.id + ": turn " + std::to_string(turn) + " is not a wizard turn");
  const Turn& t = session.turns[turn];
  // DST sees the wizard utterance it annotates; the generation tasks stop at the user turn.
  const auto context = task == Task::dst ? context_until(session, turn)
                                         : (turn == 0 ? std::vector<ContextTurn>{} : context_until(session, turn - 1));
  TaskInput in;
  in.task = task;
  in.context = context;
  in.type = t.type;
  in.domain = t.domain;
  if (t.type == DialogType::knowledge)
    if (const Entity* e = topic_entity(context, ctx.kb, t.domain)) in.prompt_knowledge = e->snippets;
  switch (task) {
    case Task::dst:
      in.state = recent_state ? *recent_state : previous_wizard_state(session, turn);
      break;
    case Task::dap:
      in.state = session.state_before(turn);
      in.knowledge = budget_knowledge(dap_knowledge(session, turn, ctx), in.state, knowledge_room(in, ctx.options));
      break;
    case Task::rg:
      in.act = delexicalize(t.act);
      break;
    case Task::e2e:
      break;
  }
  return format_task_input(in, ctx.ontology, ctx.options.format);
}

Tokens task_target(const DialogSession& session, std::size_t turn, Task task) {
  const Turn& t = session.turns.at(turn);
  TaskGold g;
  g.state = t.state;
  g.header = {t.type, t.domain};
  g.act = t.act;
  g.response = task == Task::rg ? delexicalize_response(t.utterance, t.act) : t.utterance;
  return format_task_target(task, g);
}

std::vector<TaskExample> build_examples(const DialogSession& session, std::span<const Task> tasks,
                                        const TaskContext& ctx) {
  std::vector<TaskExample> out;
  for (std::size_t w : session.wizard_turns())
    for (Task task : tasks) {
      TaskExample ex;
      ex.session_id = session.id;
      ex.turn = w;
      ex.task = task;
      ex.input = task_input(session, w, task, ctx);
      ex.target = task_target(session, w, task);
      if (ex.target.size() > ctx.options.max_target_tokens) {
        ex.target.resize(ctx.options.max_target_tokens);
        ex.truncated = true;
      }
      out.push_back(std::move(ex));
    }
  return out;
}

EncodedExample encode_example(const TaskExample& ex, const Vocabulary& vocab) {
  EncodedExample e;
  e.tokens = vocab.encode(ex.input.tokens);
  e.types = ex.input.type_ids;
  e.tasks = ex.input.task_ids;
  e.domains = ex.input.domain_ids;
  e.prompt_length = e.tokens.size();
  for (int id : vocab.encode(ex.target)) e.tokens.push_back(id);
  if (!ex.truncated) e.tokens.push_back(vocab.eos_id());
  const std::size_t extra = e.tokens.size() - e.prompt_length;
  e.types.insert(e.types.end(), extra, ex.input.target_type);
  e.tasks.insert(e.tasks.end(), extra, ex.input.target_task);
  e.domains.insert(e.domains.end(), extra, ex.input.target_domain);
  return e;
}

std::vector<Mention> extract_mentions(std::span<const std::string> response, std::span<const ContextTurn> context,
                                      const KnowledgeBase& kb) {
  // value tokens -> slots that use it
  std::map<Tokens, std::vector<std::string>> values;
  for (const auto& e : kb.entities())
    for (const auto& [slot, v] : e.attributes) {
      if (slot == kAttitudeSlot || slot == "name") continue;
      auto& slots = values[split_tokens(fold_value(v))];
      if (std::find(slots.begin(), slots.end(), slot) == slots.end()) slots.push_back(slot);
    }
  Tokens folded;
  for (const auto& t : response) folded.push_back(fold_value(t));

  const auto names = find_names(folded, kb);
  std::vector<bool> in_name(folded.size(), false);
  for (const auto& h : names)
    for (std::size_t k = 0; k < split_tokens(h.entity->name).size(); ++k) in_name[h.position + k] = true;

  std::vector<const Entity*> context_entities;  // most recent first
  for (std::size_t i = context.size(); i-- > 0;) {
    Tokens f;
    for (const auto& t : context[i].utterance) f.push_back(fold_value(t));
    auto hits = find_names(f, kb);
    for (auto it = hits.rbegin(); it != hits.rend(); ++it) context_entities.push_back(it->entity);
  }

  std::vector<Mention> out;
  std::size_t i = 0;
  while (i < folded.size()) {
    if (in_name[i]) {
      ++i;
      continue;
    }
    const Tokens* best = nullptr;
    const std::vector<std::string>* slots = nullptr;
    for (const auto& [v, s] : values) {
      if (v.size() > folded.size() - i) continue;
      if (!std::equal(v.begin(), v.end(), folded.begin() + static_cast<std::ptrdiff_t>(i))) continue;
      bool overlaps_name = false;
      for (std::size_t k = 0; k < v.size(); ++k) overlaps_name = overlaps_name || in_name[i + k];
      if (overlaps_name) continue;
      if (!best || v.size() > best->size()) {
        best = &v;
        slots = &s;
      }
    }
    if (!best) {
      ++i;
      continue;
    }
    // Candidate entities: names before the value (nearest first), names after it, then context.
    std::vector<const Entity*> cands;
    for (auto it = names.rbegin(); it != names.rend(); ++it)
      if (it->position < i) cands.push_back(it->entity);
    for (const auto& h : names)
      if (h.position > i) cands.push_back(h.entity);
    cands.insert(cands.end(), context_entities.begin(), context_entities.end());
    Mention m;
    m.value = join_tokens(*best);
    m.slot = slots->front();
    for (const Entity* e : cands) {
      auto hit = std::find_if(slots->begin(), slots->end(), [&](const std::string& s) { return e->attributes.count(s) > 0; });
      if (hit == slots->end()) continue;
      m.domain = e->domain;
      m.entity = e->name;
      m.slot = *hit;
      m.correct = values_equal(e->attributes.at(*hit), m.value);
      break;
    }
    out.push_back(std::move(m));
    i += best->size();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Records

namespace {

json mention_to_json(const Mention& m) {
  return {{"domain", m.domain}, {"entity", m.entity}, {"slot", m.slot}, {"value", m.value}, {"correct", m.correct}};
}

}  // namespace

json record_to_json(const PredictionRecord& r) {
  json j = {{"session", r.session_id},
            {"turn", r.turn},
            {"task", std::string(to_string(r.task))},
            {"raw", join_tokens(r.raw)},
            {"report", {{"segments", r.report.segments}, {"dropped", r.report.dropped}, {"markers", r.report.markers_found}}},
            {"gold", r.gold}};
  switch (r.task) {
    case Task::dst:
      j["mode"] = r.mode;
      j["state"] = state_to_json(r.state);
      if (r.header)
        j["header"] = {{"type", r.header->type ? std::string(to_string(*r.header->type)) : std::string{}},
                       {"domain", r.header->domain}};
      break;
    case Task::dap:
      j["act"] = act_to_json(r.act);
      break;
    case Task::rg:
    case Task::e2e: {
      j["response"] = join_tokens(r.response);
      j["unresolved"] = r.unresolved_placeholders;
      json ms = json::array();
      for (const auto& m : r.mentions) ms.push_back(mention_to_json(m));
      j["mentions"] = ms;
      break;
    }
  }
  return j;
}

PredictionRecord record_from_json(const json& doc) {
  PredictionRecord r;
  try {
    r.session_id = doc.at("session").get<std::string>();
    r.turn = doc.at("turn").get<std::size_t>();
    auto task = parse_task(doc.at("task").get<std::string>());
    if (!task) throw DataError("field 'task' is not a task name");
    r.task = *task;
    r.raw = split_tokens(doc.at("raw").get<std::string>());
    const json& rep = doc.at("report");
    r.report.segments = rep.at("segments").get<std::size_t>();
    r.report.dropped = rep.at("dropped").get<std::size_t>();
    r.report.markers_found = rep.at("markers").get<bool>();
    r.gold = doc.at("gold").get<std::string>();
    switch (r.task) {
      case Task::dst:
        r.mode = doc.at("mode").get<std::string>();
        r.state = state_from_json(doc.at("state"));
        if (doc.contains("header")) {
          StateHeader h;
          h.type = parse_dialog_type(doc.at("header").at("type").get<std::string>());
          h.domain = doc.at("header").at("domain").get<std::string>();
          r.header = h;
        }
        break;
      case Task::dap:
        r.act = act_from_json(doc.at("act"));
        break;
      case Task::rg:
      case Task::e2e:
        r.response = split_tokens(doc.at("response").get<std::string>());
        r.unresolved_placeholders = doc.at("unresolved").get<std::size_t>();
        for (const auto& m : doc.at("mentions"))
          r.mentions.push_back({m.at("domain").get<std::string>(), m.at("entity").get<std::string>(),
                                m.at("slot").get<std::string>(), m.at("value").get<std::string>(),
                                m.at("correct").get<bool>()});
        break;
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("prediction record: ") + e.what());
  }
  return r;
}

void write_records(const std::filesystem::path& path, const std::vector<PredictionRecord>& records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

std::vector<PredictionRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path.filename().string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(path.filename().string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pipelines

namespace {

PredictionRecord make_record(const DialogSession& s, std::size_t turn, Task task, Tokens raw) {
  PredictionRecord r;
  r.session_id = s.id;
  r.turn = turn;
  r.task = task;
  r.raw = std::move(raw);
  r.gold = s.id + "#" + std::to_string(turn);
  return r;
}

}  // namespace

std::vector<PredictionRecord> run_dst(const Predictor& predictor, const DialogSession& session, DstMode mode,
                                      const TaskContext& ctx) {
  std::vector<PredictionRecord> out;
  DialogState recent;
  for (std::size_t w : session.wizard_turns()) {
    const DialogState& prev = mode == DstMode::rollout ? recent : previous_wizard_state(session, w);
    const FormattedInput input = task_input(session, w, Task::dst, ctx, &prev);
    PredictionRecord r = make_record(session, w, Task::dst, predictor.predict(input, ctx.options.max_target_tokens));
    r.mode = std::string(to_string(mode));
    ParsedState parsed = parse_state(r.raw);
    r.report = parsed.report;
    r.header = parsed.header;
    r.state = parsed.report.markers_found ? std::move(parsed.state) : prev;
    recent = r.state;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PredictionRecord> run_dap(const Predictor& predictor, const DialogSession& session,
                                      const TaskContext& ctx) {
  std::vector<PredictionRecord> out;
  for (std::size_t w : session.wizard_turns()) {
    const FormattedInput input = task_input(session, w, Task::dap, ctx);
    PredictionRecord r = make_record(session, w, Task::dap, predictor.predict(input, ctx.options.max_target_tokens));
    ParsedAct parsed = parse_act(r.raw);
    r.report = parsed.report;
    r.act = std::move(parsed.act);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PredictionRecord> run_rg(const Predictor& predictor, const DialogSession& session,
                                     const TaskContext& ctx) {
  std::vector<PredictionRecord> out;
  for (std::size_t w : session.wizard_turns()) {
    const FormattedInput input = task_input(session, w, Task::rg, ctx);
    PredictionRecord r = make_record(session, w, Task::rg, predictor.predict(input, ctx.options.max_target_tokens));
    Relexicalized rel = relexicalize(r.raw, session.turns[w].act);
    r.response = std::move(rel.tokens);
    r.unresolved_placeholders = rel.unresolved;
    r.mentions = extract_mentions(r.response, context_until(session, w - 1), ctx.kb);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PredictionRecord> run_e2e(const Predictor& predictor, const DialogSession& session,
                                      const TaskContext& ctx) {
  std::vector<PredictionRecord> out;
  for (std::size_t w : session.wizard_turns()) {
    const FormattedInput input = task_input(session, w, Task::e2e, ctx);
    PredictionRecord r = make_record(session, w, Task::e2e, predictor.predict(input, ctx.options.max_target_tokens));
    r.response = r.raw;
    r.mentions = extract_mentions(r.response, context_until(session, w - 1), ctx.kb);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PredictionRecord> run_task(const Predictor& predictor, const DialogSession& session, Task task,
                                       const TaskContext& ctx, DstMode mode) {
  switch (task) {
    case Task::dst:
      return run_dst(predictor, session, mode, ctx);
    case Task::dap:
      return run_dap(predictor, session, ctx);
    case Task::rg:
      return run_rg(predictor, session, ctx);
    case Task::e2e:
      return run_e2e(predictor, session, ctx);
  }
  return {};
}

std::vector<PredictionRecord> run_task_all(const Predictor& predictor, std::span<const DialogSession> sessions,
                                           Task task, const TaskContext& ctx, DstMode mode, int jobs) {
  std::vector<std::vector<PredictionRecord>> per(sessions.size());
  const std::size_t workers = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), 1, sessions.size() ? sessions.size() : 1);
  if (workers == 1) {
    for (std::size_t i = 0; i < sessions.size(); ++i) per[i] = run_task(predictor, sessions[i], task, ctx, mode);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < sessions.size(); i += workers)
            per[i] = run_task(predictor, sessions[i], task, ctx, mode);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  std::vector<PredictionRecord> out;
  for (auto& v : per)
    for (auto& r : v) out.push_back(std::move(r));
  return out;
}

std::optional<std::size_t> first_divergence(std::span<const PredictionRecord> rollout,
                                            std::span<const PredictionRecord> oracle) {
  const std::size_t n = std::min(rollout.size(), oracle.size());
  for (std::size_t i = 0; i < n; ++i)
    if (flatten_state(rollout[i].state) != flatten_state(oracle[i].state)) return i;
  if (rollout.size() != oracle.size()) return n;
  return std::nullopt;
}

}  // namespace mixdial
