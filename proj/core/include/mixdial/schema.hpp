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

#include <compare>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mixdial/ontology.hpp"

namespace mixdial {

using SlotMap = std::map<std::string, std::string>;

/// One mentioned entity. May carry the reserved `_attitude` slot.
struct EntityState {
  SlotMap attributes;
  bool operator==(const EntityState&) const = default;
};

/// A completed order; holds every booking slot of its domain.
struct BookedOrder {
  SlotMap slots;
  bool operator==(const BookedOrder&) const = default;
};

struct DomainState {
  std::vector<BookedOrder> booked;
  SlotMap semi;
  std::map<std::string, EntityState> entities;

  bool empty() const { return booked.empty() && semi.empty() && entities.empty(); }
  bool operator==(const DomainState&) const = default;
};

/// Unified per-session dialog state.
///
/// Absent domains and empty domains compare equal, so a state never needs to
/// be pruned before comparison.
struct DialogState {
  SlotMap general;
  std::map<std::string, DomainState> domains;

  const DomainState* find(std::string_view domain) const;
  bool empty() const;
  /// Removes empty domain entries.
  void prune();

  friend bool operator==(const DialogState& a, const DialogState& b);
};

struct ActItem {
  std::string domain;
  std::string intent;
  std::string slot;
  std::string value;
  auto operator<=>(const ActItem&) const = default;
};

struct DialogAct {
  std::set<ActItem> items;

  void add(std::string domain, std::string intent, std::string slot = {}, std::string value = {});
  bool empty() const { return items.empty(); }
  bool operator==(const DialogAct&) const = default;
};

enum class EditKind {
  set_general,           // general profile slot; empty value removes it
  set_semi,              // `_semi` slot; empty value removes it
  set_entity_attribute,  // entity attribute; entity created on first write
  set_entity_attitude,   // `_attitude` of an entity; empty value removes it
  remove_entity,
  append_booked,
  clear_booked,
};

std::string_view to_string(EditKind kind);

struct StateEdit {
  EditKind kind = EditKind::set_semi;
  std::string domain;
  std::string entity;  // entity edits only
  std::string slot;
  std::string value;
  BookedOrder order;  // append_booked only

  bool operator==(const StateEdit&) const = default;
};

/// Ordered list of edits; applied left to right.
struct StateDelta {
  std::vector<StateEdit> edits;
  bool empty() const { return edits.empty(); }
  bool operator==(const StateDelta&) const = default;
};

struct Violation {
  std::string domain;
  std::string path;
  std::string rule;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

/// Canonical (domain, slot-path, value) leaf of a state. The path is
/// `section/slot`, `section/entity-name/slot` or `section/order-index/slot`;
/// the entity name and the value are case-folded.
struct Triplet {
  std::string domain;
  std::string path;
  std::string value;
  auto operator<=>(const Triplet&) const = default;
};

inline constexpr std::string_view kProfileSection = "_profile";
inline constexpr std::string_view kSemiSection = "_semi";
inline constexpr std::string_view kEntitiesSection = "_entities";
inline constexpr std::string_view kBookedSection = "_booked";

ValidationReport validate_state(const DialogState& state, const Ontology& ontology);
ValidationReport validate_act(const DialogAct& act, const Ontology& ontology);

/// Pure: returns a new state. Throws DeltaError naming the first rejected edit.
DialogState apply_delta(const DialogState& state, const StateDelta& delta, const Ontology& ontology);

/// Minimal edit list with apply_delta(prev, diff_states(prev, curr)) == curr.
StateDelta diff_states(const DialogState& prev, const DialogState& curr);

std::set<Triplet> flatten_state(const DialogState& state);

// JSON codecs used by the corpus and prediction-record files. The decoders
// throw DataError naming the offending field.
nlohmann::json state_to_json(const DialogState& state);
DialogState state_from_json(const nlohmann::json& doc);
nlohmann::json act_to_json(const DialogAct& act);
DialogAct act_from_json(const nlohmann::json& doc);
nlohmann::json delta_to_json(const StateDelta& delta);
StateDelta delta_from_json(const nlohmann::json& doc);

}  // namespace mixdial
