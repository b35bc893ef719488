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

#include "mixdial/linearize.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "mixdial/errors.hpp"

namespace mixdial {

using G = SequenceGrammar;

std::string_view to_string(Task task) {
  switch (task) {
    case Task::dst:
      return "dst";
    case Task::dap:
      return "dap";
    case Task::rg:
      return "rg";
    case Task::e2e:
      return "e2e";
  }
  return "?";
}

std::optional<Task> parse_task(std::string_view name) {
  for (auto t : kTasks)
    if (to_string(t) == name) return t;
  return std::nullopt;
}

std::string_view to_string(Speaker speaker) { return speaker == Speaker::user ? "user" : "wizard"; }

const std::vector<std::string>& SequenceGrammar::special_tokens() {
  static const std::vector<std::string> kAll = {
      std::string(kUnk),        std::string(kEos),         std::string(kGen),
      std::string(kUser),       std::string(kWizard),      std::string(kStateOpen),
      std::string(kStateClose), std::string(kActOpen),     std::string(kActClose),
      std::string(kKbOpen),     std::string(kKbClose),     std::string(kSep),
      std::string(kAssign),     std::string(kHeader),      std::string(kPromptKnowledge),
      std::string(kPromptQa),   std::string(kPromptTask),  std::string(kPromptChat),
      std::string(kPromptUnknown)};
  return kAll;
}

Tokens prompt_prefix(DialogType type, std::span<const Tokens> knowledge) {
  switch (type) {
    case DialogType::knowledge: {
      Tokens out{std::string(G::kPromptKnowledge)};
      for (std::size_t i = 0; i < knowledge.size(); ++i) {
        if (i) out.emplace_back(G::kSep);
        out.insert(out.end(), knowledge[i].begin(), knowledge[i].end());
      }
      return out;
    }
    case DialogType::qa:
      return {std::string(G::kPromptQa)};
    case DialogType::task:
      return {std::string(G::kPromptTask)};
    case DialogType::chitchat:
      return {std::string(G::kPromptChat)};
  }
  throw DataError("prompt_prefix: unknown dialog type");
}

// ---------------------------------------------------------------------------
// State grammar: [state] ([hdr] type domain [;])? seg ([;] seg)* [/state]
// seg := domain section key* slot [=] value+

namespace {

struct Leaf {
  std::string domain;
  std::string section;
  Tokens key;
  std::size_t order = 0;  // booked index
  std::string slot;
  std::string value;
};

bool leaf_less(const Leaf& a, const Leaf& b) {
  return std::tie(a.domain, a.section, a.key, a.order, a.slot) <
         std::tie(b.domain, b.section, b.key, b.order, b.slot);
}

void emit_leaf(Tokens& out, const Leaf& l) {
  out.push_back(l.domain);
  out.push_back(l.section);
  if (l.section == kBookedSection)
    out.push_back(std::to_string(l.order));
  else
    out.insert(out.end(), l.key.begin(), l.key.end());
  out.push_back(l.slot);
  out.emplace_back(G::kAssign);
  for (auto& t : split_tokens(l.value)) out.push_back(std::move(t));
}

std::vector<Leaf> leaves(const DialogState& state) {
  std::vector<Leaf> out;
  for (const auto& [slot, value] : state.general)
    out.push_back({std::string(kGeneralDomain), std::string(kProfileSection), {}, 0, slot, value});
  for (const auto& [name, ds] : state.domains) {
    for (const auto& [slot, value] : ds.semi)
      out.push_back({name, std::string(kSemiSection), {}, 0, slot, value});
    for (const auto& [entity, es] : ds.entities)
      for (const auto& [slot, value] : es.attributes)
        out.push_back({name, std::string(kEntitiesSection), split_tokens(entity), 0, slot, value});
    for (std::size_t i = 0; i < ds.booked.size(); ++i)
      for (const auto& [slot, value] : ds.booked[i].slots)
        out.push_back({name, std::string(kBookedSection), {}, i, slot, value});
  }
  std::sort(out.begin(), out.end(), leaf_less);
  return out;
}

/// Splits [open, close) body on separators. Returns false when the open marker is missing.
bool body_segments(std::span<const std::string> tokens, std::string_view open, std::string_view close,
                   std::vector<std::span<const std::string>>& segs, bool& closed) {
  auto it = std::find(tokens.begin(), tokens.end(), open);
  if (it == tokens.end()) return false;
  auto begin = it + 1;
  auto end = std::find(begin, tokens.end(), close);
  closed = end != tokens.end();
  auto seg_begin = begin;
  for (auto p = begin; p != end; ++p) {
    if (*p == G::kSep) {
      segs.emplace_back(seg_begin, p);
      seg_begin = p + 1;
    }
  }
  if (seg_begin != end || !segs.empty()) segs.emplace_back(seg_begin, end);
  return true;
}

bool plain(std::span<const std::string> toks) {
  return !toks.empty() &&
         std::none_of(toks.begin(), toks.end(), [](const std::string& t) { return is_reserved_token(t); });
}

bool is_index(const std::string& t) {
  return !t.empty() && t.size() < 6 && std::all_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

Tokens serialize_state(const DialogState& state) {
  Tokens out{std::string(G::kStateOpen)};
  bool first = true;
  for (const auto& l : leaves(state)) {
    if (!first) out.emplace_back(G::kSep);
    first = false;
    emit_leaf(out, l);
  }
  out.emplace_back(G::kStateClose);
  return out;
}

Tokens serialize_state(const DialogState& state, const StateHeader& header) {
  Tokens body = serialize_state(state);
  Tokens out{std::string(G::kStateOpen), std::string(G::kHeader),
             header.type ? std::string(to_string(*header.type)) : std::string(G::kNone),
             header.domain.empty() ? std::string(G::kNone) : header.domain};
  if (body.size() > 2) out.emplace_back(G::kSep);
  out.insert(out.end(), body.begin() + 1, body.end());
  return out;
}

ParsedState parse_state(std::span<const std::string> tokens) {
  ParsedState result;
  std::vector<std::span<const std::string>> segs;
  bool closed = false;
  if (!body_segments(tokens, G::kStateOpen, G::kStateClose, segs, closed)) {
    result.report.markers_found = false;
    return result;
  }
  result.report.markers_found = closed;
  std::map<std::string, std::map<std::size_t, BookedOrder>> booked;
  for (std::size_t si = 0; si < segs.size(); ++si) {
    auto seg = segs[si];
    ++result.report.segments;
    if (si == 0 && !seg.empty() && seg[0] == G::kHeader) {
      if (seg.size() != 3 || is_reserved_token(seg[1]) || is_reserved_token(seg[2])) {
        ++result.report.dropped;
        continue;
      }
      StateHeader h;
      h.type = parse_dialog_type(seg[1]);
      if (seg[2] != G::kNone) h.domain = seg[2];
      if (!h.type && seg[1] != G::kNone) {
        ++result.report.dropped;
        continue;
      }
      result.header = h;
      continue;
    }
    auto eq = std::find(seg.begin(), seg.end(), G::kAssign);
    if (eq == seg.end()) {
      ++result.report.dropped;
      continue;
    }
    std::span<const std::string> path(seg.begin(), eq);
    std::span<const std::string> value(eq + 1, seg.end());
    if (path.size() < 3 || !plain(path) || !plain(value)) {
      ++result.report.dropped;
      continue;
    }
    const std::string& domain = path[0];
    const std::string& section = path[1];
    const std::string& slot = path.back();
    auto key = path.subspan(2, path.size() - 3);
    const std::string v = join_tokens(value);
    if (section == kProfileSection && domain == kGeneralDomain && key.empty()) {
      result.state.general[slot] = v;
    } else if (domain == kGeneralDomain) {
      ++result.report.dropped;
    } else if (section == kSemiSection && key.empty()) {
      result.state.domains[domain].semi[slot] = v;
    } else if (section == kEntitiesSection && !key.empty()) {
      result.state.domains[domain].entities[join_tokens(key)].attributes[slot] = v;
    } else if (section == kBookedSection && key.size() == 1 && is_index(key[0])) {
      booked[domain][std::stoul(key[0])].slots[slot] = v;
    } else {
      ++result.report.dropped;
    }
  }
  for (auto& [domain, orders] : booked)
    for (auto& [_, order] : orders) result.state.domains[domain].booked.push_back(std::move(order));
  result.state.prune();
  return result;
}

// ---------------------------------------------------------------------------
// Act grammar: [act] item ([;] item)* [/act]; item := domain intent (slot ([=] value+)?)?

Tokens serialize_act(const DialogAct& act) {
  Tokens out{std::string(G::kActOpen)};
  bool first = true;
  for (const auto& item : act.items) {
    if (!first) out.emplace_back(G::kSep);
    first = false;
    out.push_back(item.domain);
    out.push_back(item.intent);
    if (!item.slot.empty()) out.push_back(item.slot);
    if (!item.value.empty()) {
      out.emplace_back(G::kAssign);
      for (auto& t : split_tokens(item.value)) out.push_back(std::move(t));
    }
  }
  out.emplace_back(G::kActClose);
  return out;
}

ParsedAct parse_act(std::span<const std::string> tokens) {
  ParsedAct result;
  std::vector<std::span<const std::string>> segs;
  bool closed = false;
  if (!body_segments(tokens, G::kActOpen, G::kActClose, segs, closed)) {
    result.report.markers_found = false;
    return result;
  }
  result.report.markers_found = closed;
  for (auto seg : segs) {
    ++result.report.segments;
    auto eq = std::find(seg.begin(), seg.end(), G::kAssign);
    std::span<const std::string> head(seg.begin(), eq);
    const bool has_value = eq != seg.end();
    std::span<const std::string> value = has_value ? std::span<const std::string>(eq + 1, seg.end())
                                                   : std::span<const std::string>();
    const bool head_ok = (head.size() == 2 && !has_value) || head.size() == 3;
    bool value_ok = !has_value || (!value.empty() && (plain(value) || (value.size() == 1 && is_placeholder(value[0]))));
    if (!head_ok || !plain(head) || !value_ok) {
      ++result.report.dropped;
      continue;
    }
    result.act.items.insert({head[0], head[1], head.size() == 3 ? head[2] : std::string(),
                             has_value ? join_tokens(value) : std::string()});
  }
  return result;
}

// ---------------------------------------------------------------------------
// Delexicalization

std::string placeholder(std::string_view domain, std::string_view slot) {
  return "[value_" + std::string(domain) + "_" + std::string(slot) + "]";
}

bool is_placeholder(std::string_view token) {
  return token.size() > 8 && token.substr(0, 7) == "[value_" && token.back() == ']';
}

std::vector<std::string> placeholder_tokens(const Ontology& ontology) {
  std::vector<std::string> out;
  for (const auto& d : ontology.domains())
    for (const auto& s : d.slots()) out.push_back(placeholder(d.name, s));
  std::sort(out.begin(), out.end());
  return out;
}

DialogAct delexicalize(const DialogAct& act) {
  DialogAct out;
  for (const auto& item : act.items) {
    ActItem d = item;
    if (!d.value.empty() && !d.slot.empty()) d.value = placeholder(d.domain, d.slot);
    out.items.insert(std::move(d));
  }
  return out;
}

Tokens delexicalize_response(std::span<const std::string> response, const DialogAct& act) {
  struct Sub {
    Tokens value;
    std::string ph;
  };
  std::vector<Sub> subs;
  for (const auto& item : act.items)
    if (!item.value.empty() && !item.slot.empty())
      subs.push_back({split_tokens(item.value), placeholder(item.domain, item.slot)});
  std::stable_sort(subs.begin(), subs.end(),
                   [](const Sub& a, const Sub& b) { return a.value.size() > b.value.size(); });

  // Mark spans first so a shorter value never splits a longer one.
  std::vector<std::string> replacement(response.size());
  std::vector<std::size_t> span_len(response.size(), 0);
  std::vector<bool> used(response.size(), false);
  for (const auto& s : subs) {
    if (s.value.empty()) continue;
    std::size_t pos = 0;
    while ((pos = find_run(response, s.value, pos)) < response.size()) {
      bool free = true;
      for (std::size_t k = 0; k < s.value.size(); ++k) free = free && !used[pos + k];
      if (free) {
        for (std::size_t k = 0; k < s.value.size(); ++k) used[pos + k] = true;
        replacement[pos] = s.ph;
        span_len[pos] = s.value.size();
        pos += s.value.size();
      } else {
        ++pos;
      }
    }
  }
  Tokens out;
  for (std::size_t i = 0; i < response.size();) {
    if (span_len[i]) {
      out.push_back(replacement[i]);
      i += span_len[i];
    } else {
      out.push_back(response[i]);
      ++i;
    }
  }
  return out;
}

Relexicalized relexicalize(std::span<const std::string> response, const DialogAct& act) {
  std::map<std::string, std::vector<std::string>> values;
  for (const auto& item : act.items)
    if (!item.value.empty() && !item.slot.empty() && !is_placeholder(item.value))
      values[placeholder(item.domain, item.slot)].push_back(item.value);
  std::map<std::string, std::size_t> seen;
  Relexicalized out;
  for (const auto& tok : response) {
    if (!is_placeholder(tok)) {
      out.tokens.push_back(tok);
      continue;
    }
    auto it = values.find(tok);
    if (it == values.end()) {
      out.tokens.push_back(tok);
      ++out.unresolved;
      continue;
    }
    std::size_t k = std::min(seen[tok]++, it->second.size() - 1);
    for (auto& t : split_tokens(it->second[k])) out.tokens.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Task formatting

int type_id(std::optional<DialogType> type) { return type ? static_cast<int>(*type) + 1 : 0; }
int task_id(std::optional<Task> task) { return task ? static_cast<int>(*task) + 1 : 0; }

namespace {

Tokens knowledge_segment(const std::vector<Tokens>& items) {
  Tokens out{std::string(G::kKbOpen)};
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out.emplace_back(G::kSep);
    out.insert(out.end(), items[i].begin(), items[i].end());
  }
  out.emplace_back(G::kKbClose);
  return out;
}

}  // namespace

FormattedInput format_task_input(const TaskInput& input, const Ontology& ontology,
                                 const FormatOptions& options) {
  const bool e2e = input.task == Task::e2e;
  const bool ids = options.prompts;
  const int cur_type = (ids && !e2e) ? type_id(input.type) : 0;
  const int cur_domain = (ids && !e2e) ? ontology.domain_id(input.domain) : 0;
  const int cur_task = ids ? task_id(input.task) : 0;

  Tokens fixed;
  if (options.prompts) {
    if (e2e || !input.type)
      fixed.emplace_back(G::kPromptUnknown);
    else
      fixed = prompt_prefix(*input.type, input.prompt_knowledge);
  }
  auto append = [&](const Tokens& seg) { fixed.insert(fixed.end(), seg.begin(), seg.end()); };
  switch (input.task) {
    case Task::dst:
      append(serialize_state(input.state));
      break;
    case Task::dap:
      append(serialize_state(input.state));
      append(knowledge_segment(input.knowledge));
      break;
    case Task::rg:
      append(serialize_act(input.act));
      break;
    case Task::e2e:
      break;
  }
  const std::size_t max_len = options.grammar.max_length;
  if (fixed.size() + 1 > max_len)
    throw DataError("format_task_input: prompt and extras need " + std::to_string(fixed.size() + 1) +
                    " tokens, maximum is " + std::to_string(max_len));

  // Newest turns first until the budget runs out.
  std::size_t budget = max_len - fixed.size() - 1;
  std::size_t kept = 0;
  std::size_t tail_tokens = 0;  // partial newest turn when even it does not fit
  const std::size_t n = input.context.size();
  const std::size_t limit = options.max_context_turns ? options.max_context_turns : n;
  for (std::size_t i = 0; i < std::min(n, limit); ++i) {
    const auto& turn = input.context[n - 1 - i];
    const std::size_t len = turn.utterance.size() + 1;
    if (len > budget) {
      if (kept == 0 && budget > 1) tail_tokens = budget - 1;
      break;
    }
    budget -= len;
    ++kept;
  }

  FormattedInput out;
  out.tokens = fixed;
  out.type_ids.assign(fixed.size(), cur_type);
  out.domain_ids.assign(fixed.size(), cur_domain);
  out.task_ids.assign(fixed.size(), cur_task);
  auto push_turn = [&](const ContextTurn& turn, std::size_t skip) {
    const int t = (ids && !e2e) ? type_id(turn.type) : 0;
    const int d = (ids && !e2e) ? ontology.domain_id(turn.domain) : 0;
    const std::size_t len = turn.utterance.size() - skip + 1;
    out.tokens.emplace_back(turn.speaker == Speaker::user ? G::kUser : G::kWizard);
    out.tokens.insert(out.tokens.end(), turn.utterance.begin() + static_cast<std::ptrdiff_t>(skip),
                      turn.utterance.end());
    out.type_ids.insert(out.type_ids.end(), len, t);
    out.domain_ids.insert(out.domain_ids.end(), len, d);
    out.task_ids.insert(out.task_ids.end(), len, cur_task);
  };
  if (kept == 0 && tail_tokens > 0) {
    const auto& turn = input.context[n - 1];
    push_turn(turn, turn.utterance.size() - tail_tokens);
    out.context_turns = 1;
  } else {
    for (std::size_t i = n - kept; i < n; ++i) push_turn(input.context[i], 0);
    out.context_turns = kept;
  }
  out.tokens.emplace_back(G::kGen);
  out.type_ids.push_back(cur_type);
  out.domain_ids.push_back(cur_domain);
  out.task_ids.push_back(cur_task);
  out.target_type = cur_type;
  out.target_domain = cur_domain;
  out.target_task = cur_task;
  return out;
}

Tokens format_task_target(Task task, const TaskGold& gold) {
  switch (task) {
    case Task::dst:
      return serialize_state(gold.state, gold.header);
    case Task::dap:
      return serialize_act(gold.act);
    case Task::rg:
    case Task::e2e:
      return gold.response;
  }
  return {};
}

}  // namespace mixdial
