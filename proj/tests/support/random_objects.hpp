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

// Random valid states, acts and deltas for property tests.

#include <string>
#include <vector>

#include "mixdial/ontology.hpp"
#include "mixdial/random.hpp"
#include "mixdial/schema.hpp"
#include "mixdial/text.hpp"

namespace mixdial::testing {

inline std::string random_word(Rng& rng) {
  static const char* kAlphabet = "abcdefghijklmnopqrstuvwxyz";
  for (;;) {
    std::string w;
    const int n = rng.range(1, 7);
    for (int i = 0; i < n; ++i) w += kAlphabet[rng.below(26)];
    if (w != "none") return w;
  }
}

inline std::string random_value(Rng& rng, int max_words = 3) {
  std::string v = random_word(rng);
  const int extra = rng.range(0, max_words - 1);
  for (int i = 0; i < extra; ++i) v += " " + random_word(rng);
  return v;
}

template <class T>
const T& pick_from(Rng& rng, const std::vector<T>& v) {
  return v[rng.below(v.size())];
}

inline DialogState random_state(Rng& rng, const Ontology& ontology, double density = 0.5) {
  DialogState s;
  const DomainSchema& general = ontology.general();
  for (const auto& slot : general.informable)
    if (rng.chance(density * 0.6)) s.general[slot] = random_value(rng);
  for (const auto& d : ontology.domains()) {
    if (d.is_general() || !rng.chance(density)) continue;
    DomainState ds;
    for (const auto& slot : d.informable)
      if (rng.chance(0.4)) ds.semi[slot] = random_value(rng);
    for (const auto& slot : d.booking)
      if (rng.chance(0.2)) ds.semi[slot] = random_value(rng);
    const int entities = rng.range(0, 3);
    for (int e = 0; e < entities; ++e) {
      EntityState es;
      for (const auto& slot : d.attributes)
        if (rng.chance(0.4)) es.attributes[slot] = random_value(rng);
      if (rng.chance(0.5)) es.attributes[std::string(kAttitudeSlot)] = std::string(rng.chance(0.5) ? kPositive : kNegative);
      if (es.attributes.empty()) es.attributes[pick_from(rng, d.attributes)] = random_value(rng);
      ds.entities[random_value(rng, 2)] = es;
    }
    if (d.bookable()) {
      const int orders = rng.range(0, 2);
      for (int o = 0; o < orders; ++o) {
        BookedOrder b;
        for (const auto& slot : d.booking) b.slots[slot] = random_value(rng);
        ds.booked.push_back(b);
      }
    }
    if (!ds.empty()) s.domains[d.name] = ds;
  }
  return s;
}

inline DialogAct random_act(Rng& rng, const Ontology& ontology) {
  DialogAct a;
  const int n = rng.range(0, 5);
  for (int i = 0; i < n; ++i) {
    const DomainSchema& d = ontology.domains()[rng.below(ontology.domains().size())];
    const std::string intent = pick_from(rng, d.intents);
    const auto slots = d.slots();
    std::string slot, value;
    if (!slots.empty() && rng.chance(0.8)) {
      slot = pick_from(rng, slots);
      if (rng.chance(0.8)) value = rng.chance(0.2) ? "[value_" + d.name + "_" + slot + "]" : random_value(rng);
    }
    a.add(d.name, intent, slot, value);
  }
  return a;
}

/// A state derived from `base` by a few random changes, so deltas stay small
/// but touch every edit kind.
inline DialogState mutate_state(Rng& rng, const DialogState& base, const Ontology& ontology) {
  DialogState s = base;
  const int changes = rng.range(0, 4);
  for (int c = 0; c < changes; ++c) {
    switch (rng.below(4)) {
      case 0:
        s = random_state(rng, ontology, 0.3);
        break;
      case 1:
        if (!s.domains.empty()) {
          auto it = s.domains.begin();
          std::advance(it, static_cast<long>(rng.below(s.domains.size())));
          it->second.semi.clear();
        }
        break;
      case 2: {
        const DialogState extra = random_state(rng, ontology, 0.3);
        for (const auto& [k, v] : extra.general) s.general[k] = v;
        for (const auto& [name, ds] : extra.domains) {
          auto& dst = s.domains[name];
          for (const auto& [k, v] : ds.semi) dst.semi[k] = v;
          for (const auto& [k, v] : ds.entities) dst.entities[k] = v;
          for (const auto& b : ds.booked) dst.booked.push_back(b);
        }
        break;
      }
      default:
        for (auto& [name, ds] : s.domains)
          if (!ds.entities.empty() && rng.chance(0.5)) ds.entities.erase(ds.entities.begin());
        break;
    }
  }
  s.prune();
  return s;
}

}  // namespace mixdial::testing
