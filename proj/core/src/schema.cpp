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

#include "mixdial/schema.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "mixdial/errors.hpp"
#include "mixdial/text.hpp"

namespace mixdial {

using nlohmann::json;

const DomainState* DialogState::find(std::string_view domain) const {
  auto it = domains.find(std::string(domain));
  return it == domains.end() ? nullptr : &it->second;
}

bool DialogState::empty() const {
  if (!general.empty()) return false;
  for (const auto& [_, d] : domains)
    if (!d.empty()) return false;
  return true;
}

void DialogState::prune() { std::erase_if(domains, [](const auto& kv) { return kv.second.empty(); }); }

bool operator==(const DialogState& a, const DialogState& b) {
  if (a.general != b.general) return false;
  auto ia = a.domains.begin();
  auto ib = b.domains.begin();
  while (ia != a.domains.end() || ib != b.domains.end()) {
    if (ib == b.domains.end() || (ia != a.domains.end() && ia->first < ib->first)) {
      if (!ia->second.empty()) return false;
      ++ia;
    } else if (ia == a.domains.end() || ib->first < ia->first) {
      if (!ib->second.empty()) return false;
      ++ib;
    } else {
      if (!(ia->second == ib->second)) return false;
      ++ia;
      ++ib;
    }
  }
  return true;
}

void DialogAct::add(std::string domain, std::string intent, std::string slot, std::string value) {
  items.insert({std::move(domain), std::move(intent), std::move(slot), normalize_value(value)});
}

std::string_view to_string(EditKind kind) {
  switch (kind) {
    case EditKind::set_general:
      return "set-general";
    case EditKind::set_semi:
      return "set-semi";
    case EditKind::set_entity_attribute:
      return "set-entity-attribute";
    case EditKind::set_entity_attitude:
      return "set-entity-attitude";
    case EditKind::remove_entity:
      return "remove-entity";
    case EditKind::append_booked:
      return "append-booked";
    case EditKind::clear_booked:
      return "clear-booked";
  }
  return "?";
}

namespace {

std::optional<EditKind> parse_edit_kind(std::string_view s) {
  for (auto k : {EditKind::set_general, EditKind::set_semi, EditKind::set_entity_attribute,
                 EditKind::set_entity_attitude, EditKind::remove_entity, EditKind::append_booked,
                 EditKind::clear_booked})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

void check_value(ValidationReport& r, const std::string& domain, const std::string& path,
                 const std::string& value) {
  if (normalize_value(value).empty())
    r.violations.push_back({domain, path, "empty value"});
  else if (contains_reserved_token(value))
    r.violations.push_back({domain, path, "value contains a reserved token"});
}

bool valid_attitude(std::string_view v) { return v == kPositive || v == kNegative; }

}  // namespace

ValidationReport validate_state(const DialogState& state, const Ontology& ontology) {
  ValidationReport r;
  const DomainSchema* general = ontology.find(kGeneralDomain);
  for (const auto& [slot, value] : state.general) {
    const std::string path = std::string(kProfileSection) + "/" + slot;
    if (!general || !general->is_semi_slot(slot))
      r.violations.push_back({std::string(kGeneralDomain), path, "slot not in ontology"});
    check_value(r, std::string(kGeneralDomain), path, value);
  }
  for (const auto& [name, ds] : state.domains) {
    const DomainSchema* schema = ontology.find(name);
    if (!schema || schema->is_general()) {
      if (!ds.empty())
        r.violations.push_back({name, "", schema ? "general domain has no sections" : "unknown domain"});
      continue;
    }
    for (const auto& [slot, value] : ds.semi) {
      const std::string path = std::string(kSemiSection) + "/" + slot;
      if (!schema->is_semi_slot(slot)) r.violations.push_back({name, path, "slot not in ontology"});
      check_value(r, name, path, value);
    }
    for (const auto& [entity, es] : ds.entities) {
      const std::string base = std::string(kEntitiesSection) + "/" + entity;
      if (normalize_value(entity).empty() || contains_reserved_token(entity) ||
          entity.find('/') != std::string::npos)
        r.violations.push_back({name, base, "invalid entity name"});
      if (es.attributes.empty()) r.violations.push_back({name, base, "entity has no attributes"});
      for (const auto& [slot, value] : es.attributes) {
        const std::string path = base + "/" + slot;
        if (slot == kAttitudeSlot) {
          if (!valid_attitude(value))
            r.violations.push_back({name, path, "attitude value not in {positive, negative}"});
          continue;
        }
        if (!schema->is_attribute(slot)) r.violations.push_back({name, path, "slot not in ontology"});
        check_value(r, name, path, value);
      }
    }
    for (std::size_t i = 0; i < ds.booked.size(); ++i) {
      const std::string base = std::string(kBookedSection) + "/" + std::to_string(i);
      const auto& order = ds.booked[i];
      if (!schema->bookable()) r.violations.push_back({name, base, "domain is not bookable"});
      for (const auto& required : schema->booking)
        if (!order.slots.count(required))
          r.violations.push_back({name, base + "/" + required, "missing required booking slot '" + required + "'"});
      for (const auto& [slot, value] : order.slots) {
        const std::string path = base + "/" + slot;
        if (!schema->is_booking_slot(slot)) r.violations.push_back({name, path, "slot not a booking slot"});
        check_value(r, name, path, value);
      }
    }
  }
  return r;
}

ValidationReport validate_act(const DialogAct& act, const Ontology& ontology) {
  ValidationReport r;
  for (const auto& item : act.items) {
    const std::string path = item.intent + "/" + item.slot;
    const DomainSchema* schema = ontology.find(item.domain);
    if (!schema) {
      r.violations.push_back({item.domain, path, "unknown domain"});
      continue;
    }
    if (!schema->has_intent(item.intent)) r.violations.push_back({item.domain, path, "unknown intent"});
    if (!item.slot.empty() && !schema->has_slot(item.slot))
      r.violations.push_back({item.domain, path, "slot not in ontology"});
    if (item.slot.empty() && !item.value.empty())
      r.violations.push_back({item.domain, path, "value without slot"});
    if (contains_reserved_token(item.value) &&
        !(split_tokens(item.value).size() == 1 && item.value.rfind("[value_", 0) == 0))
      r.violations.push_back({item.domain, path, "value contains a reserved token"});
  }
  return r;
}

DialogState apply_delta(const DialogState& state, const StateDelta& delta, const Ontology& ontology) {
  DialogState out = state;
  for (std::size_t i = 0; i < delta.edits.size(); ++i) {
    const StateEdit& e = delta.edits[i];
    const DomainSchema* schema = ontology.find(e.domain);
    if (!schema) throw DeltaError(i, "unknown domain '" + e.domain + "'");
    const std::string value = normalize_value(e.value);
    if (contains_reserved_token(value)) throw DeltaError(i, "value contains a reserved token");

    if (e.kind == EditKind::set_general) {
      if (!schema->is_general()) throw DeltaError(i, "set-general on non-general domain");
      if (!schema->is_semi_slot(e.slot)) throw DeltaError(i, "unknown profile slot '" + e.slot + "'");
      if (value.empty())
        out.general.erase(e.slot);
      else
        out.general[e.slot] = value;
      continue;
    }
    if (schema->is_general()) throw DeltaError(i, std::string(to_string(e.kind)) + " on general domain");
    DomainState& ds = out.domains[e.domain];
    const std::string entity = normalize_value(e.entity);
    switch (e.kind) {
      case EditKind::set_semi:
        if (!schema->is_semi_slot(e.slot)) throw DeltaError(i, "unknown semi slot '" + e.slot + "'");
        if (value.empty())
          ds.semi.erase(e.slot);
        else
          ds.semi[e.slot] = value;
        break;
      case EditKind::set_entity_attribute:
      case EditKind::set_entity_attitude: {
        if (entity.empty() || entity.find('/') != std::string::npos ||
            contains_reserved_token(entity))
          throw DeltaError(i, "invalid entity name");
        std::string slot = e.slot;
        if (e.kind == EditKind::set_entity_attitude) {
          slot = std::string(kAttitudeSlot);
          if (!value.empty() && !valid_attitude(value))
            throw DeltaError(i, "attitude value not in {positive, negative}");
        } else if (!schema->is_attribute(slot)) {
          throw DeltaError(i, "unknown attribute '" + slot + "'");
        }
        if (value.empty()) {
          auto it = ds.entities.find(entity);
          if (it != ds.entities.end()) {
            it->second.attributes.erase(slot);
            if (it->second.attributes.empty()) ds.entities.erase(it);
          }
        } else {
          ds.entities[entity].attributes[slot] = value;
        }
        break;
      }
      case EditKind::remove_entity:
        ds.entities.erase(entity);
        break;
      case EditKind::append_booked: {
        if (!schema->bookable()) throw DeltaError(i, "domain '" + e.domain + "' is not bookable");
        BookedOrder order;
        for (const auto& [slot, v] : e.order.slots) {
          if (!schema->is_booking_slot(slot)) throw DeltaError(i, "unknown booking slot '" + slot + "'");
          std::string nv = normalize_value(v);
          if (nv.empty() || contains_reserved_token(nv)) throw DeltaError(i, "invalid booking value");
          order.slots[slot] = std::move(nv);
        }
        for (const auto& required : schema->booking)
          if (!order.slots.count(required))
            throw DeltaError(i, "booked order misses required slot '" + required + "'");
        ds.booked.push_back(std::move(order));
        break;
      }
      case EditKind::clear_booked:
        ds.booked.clear();
        break;
      case EditKind::set_general:
        break;
    }
  }
  out.prune();
  return out;
}

StateDelta diff_states(const DialogState& prev, const DialogState& curr) {
  StateDelta d;
  auto diff_map = [&](const SlotMap& a, const SlotMap& b, auto&& emit) {
    for (const auto& [slot, value] : b) {
      auto it = a.find(slot);
      if (it == a.end() || it->second != value) emit(slot, value);
    }
    for (const auto& [slot, _] : a)
      if (!b.count(slot)) emit(slot, std::string());
  };
  diff_map(prev.general, curr.general, [&](const std::string& slot, const std::string& value) {
    d.edits.push_back({EditKind::set_general, std::string(kGeneralDomain), {}, slot, value, {}});
  });

  std::set<std::string> names;
  for (const auto& [n, _] : prev.domains) names.insert(n);
  for (const auto& [n, _] : curr.domains) names.insert(n);
  static const DomainState kEmpty;
  for (const auto& name : names) {
    const DomainState* pa = prev.find(name);
    const DomainState* pb = curr.find(name);
    const DomainState& a = pa ? *pa : kEmpty;
    const DomainState& b = pb ? *pb : kEmpty;

    diff_map(a.semi, b.semi, [&](const std::string& slot, const std::string& value) {
      d.edits.push_back({EditKind::set_semi, name, {}, slot, value, {}});
    });

    for (const auto& [entity, _] : a.entities)
      if (!b.entities.count(entity)) d.edits.push_back({EditKind::remove_entity, name, entity, {}, {}, {}});
    for (const auto& [entity, eb] : b.entities) {
      auto it = a.entities.find(entity);
      static const EntityState kNone;
      const EntityState& ea = it == a.entities.end() ? kNone : it->second;
      // Additions first so an entity never passes through an empty state.
      for (const auto& [slot, value] : eb.attributes) {
        auto at = ea.attributes.find(slot);
        if (at != ea.attributes.end() && at->second == value) continue;
        if (slot == kAttitudeSlot)
          d.edits.push_back({EditKind::set_entity_attitude, name, entity, {}, value, {}});
        else
          d.edits.push_back({EditKind::set_entity_attribute, name, entity, slot, value, {}});
      }
      for (const auto& [slot, _] : ea.attributes) {
        if (eb.attributes.count(slot)) continue;
        if (slot == kAttitudeSlot)
          d.edits.push_back({EditKind::set_entity_attitude, name, entity, {}, {}, {}});
        else
          d.edits.push_back({EditKind::set_entity_attribute, name, entity, slot, {}, {}});
      }
    }

    const bool prefix = a.booked.size() <= b.booked.size() &&
                        std::equal(a.booked.begin(), a.booked.end(), b.booked.begin());
    std::size_t start = a.booked.size();
    if (!prefix) {
      d.edits.push_back({EditKind::clear_booked, name, {}, {}, {}, {}});
      start = 0;
    }
    for (std::size_t i = start; i < b.booked.size(); ++i)
      d.edits.push_back({EditKind::append_booked, name, {}, {}, {}, b.booked[i]});
  }
  return d;
}

std::set<Triplet> flatten_state(const DialogState& state) {
  std::set<Triplet> out;
  const std::string general(kGeneralDomain);
  for (const auto& [slot, value] : state.general)
    out.insert({general, std::string(kProfileSection) + "/" + slot, fold_value(value)});
  for (const auto& [name, ds] : state.domains) {
    for (const auto& [slot, value] : ds.semi)
      out.insert({name, std::string(kSemiSection) + "/" + slot, fold_value(value)});
    for (const auto& [entity, es] : ds.entities)
      for (const auto& [slot, value] : es.attributes)
        out.insert({name, std::string(kEntitiesSection) + "/" + fold_value(entity) + "/" + slot,
                    fold_value(value)});
    for (std::size_t i = 0; i < ds.booked.size(); ++i)
      for (const auto& [slot, value] : ds.booked[i].slots)
        out.insert({name, std::string(kBookedSection) + "/" + std::to_string(i) + "/" + slot,
                    fold_value(value)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON codecs

namespace {

const json& field(const json& doc, const char* key, const char* where) {
  if (!doc.is_object() || !doc.contains(key))
    throw DataError(std::string(where) + ": missing field '" + key + "'");
  return doc.at(key);
}

SlotMap slot_map_from(const json& doc, const char* where) {
  if (!doc.is_object()) throw DataError(std::string(where) + ": expected an object");
  SlotMap m;
  for (const auto& [k, v] : doc.items()) {
    if (!v.is_string()) throw DataError(std::string(where) + ": field '" + k + "' must be a string");
    m[k] = v.get<std::string>();
  }
  return m;
}

std::string str_field(const json& doc, const char* key, const char* where) {
  const json& v = field(doc, key, where);
  if (!v.is_string()) throw DataError(std::string(where) + ": field '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace

json state_to_json(const DialogState& state) {
  json doc;
  doc["general"] = state.general;
  doc["domains"] = json::object();
  for (const auto& [name, ds] : state.domains) {
    if (ds.empty()) continue;
    json d;
    d["_booked"] = json::array();
    for (const auto& o : ds.booked) d["_booked"].push_back(o.slots);
    d["_semi"] = ds.semi;
    d["_entities"] = json::object();
    for (const auto& [e, es] : ds.entities) d["_entities"][e] = es.attributes;
    doc["domains"][name] = std::move(d);
  }
  return doc;
}

DialogState state_from_json(const json& doc) {
  DialogState s;
  s.general = slot_map_from(field(doc, "general", "state"), "state.general");
  const json& domains = field(doc, "domains", "state");
  if (!domains.is_object()) throw DataError("state.domains: expected an object");
  for (const auto& [name, d] : domains.items()) {
    DomainState ds;
    const json& booked = field(d, "_booked", "state.domains._booked");
    if (!booked.is_array()) throw DataError("state.domains._booked: expected a list");
    for (const auto& o : booked) ds.booked.push_back({slot_map_from(o, "state.domains._booked")});
    ds.semi = slot_map_from(field(d, "_semi", "state.domains"), "state.domains._semi");
    const json& ents = field(d, "_entities", "state.domains");
    if (!ents.is_object()) throw DataError("state.domains._entities: expected an object");
    for (const auto& [e, attrs] : ents.items())
      ds.entities[e] = {slot_map_from(attrs, "state.domains._entities")};
    s.domains[name] = std::move(ds);
  }
  s.prune();
  return s;
}

json act_to_json(const DialogAct& act) {
  json doc = json::array();
  for (const auto& it : act.items) doc.push_back({it.domain, it.intent, it.slot, it.value});
  return doc;
}

DialogAct act_from_json(const json& doc) {
  if (!doc.is_array()) throw DataError("act: expected a list of items");
  DialogAct act;
  for (const auto& it : doc) {
    if (!it.is_array() || it.size() != 4)
      throw DataError("act item: expected [domain, intent, slot, value]");
    for (const auto& f : it)
      if (!f.is_string()) throw DataError("act item: fields must be strings");
    act.items.insert({it[0].get<std::string>(), it[1].get<std::string>(), it[2].get<std::string>(),
                      it[3].get<std::string>()});
  }
  return act;
}

json delta_to_json(const StateDelta& delta) {
  json doc = json::array();
  for (const auto& e : delta.edits) {
    json j;
    j["op"] = std::string(to_string(e.kind));
    j["domain"] = e.domain;
    if (!e.entity.empty()) j["entity"] = e.entity;
    if (!e.slot.empty()) j["slot"] = e.slot;
    if (e.kind == EditKind::append_booked)
      j["order"] = e.order.slots;
    else if (e.kind != EditKind::remove_entity && e.kind != EditKind::clear_booked)
      j["value"] = e.value;
    doc.push_back(std::move(j));
  }
  return doc;
}

StateDelta delta_from_json(const json& doc) {
  if (!doc.is_array()) throw DataError("delta: expected a list of edits");
  StateDelta d;
  for (const auto& j : doc) {
    StateEdit e;
    const std::string op = str_field(j, "op", "delta edit");
    auto kind = parse_edit_kind(op);
    if (!kind) throw DataError("delta edit: unknown op '" + op + "'");
    e.kind = *kind;
    e.domain = str_field(j, "domain", "delta edit");
    if (j.contains("entity")) e.entity = str_field(j, "entity", "delta edit");
    if (j.contains("slot")) e.slot = str_field(j, "slot", "delta edit");
    if (j.contains("value")) e.value = str_field(j, "value", "delta edit");
    if (e.kind == EditKind::append_booked) e.order.slots = slot_map_from(field(j, "order", "delta edit"), "delta edit.order");
    d.edits.push_back(std::move(e));
  }
  return d;
}

}  // namespace mixdial
