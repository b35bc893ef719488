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

#include <doctest.h>

#include <set>

#include <nlohmann/json.hpp>

#include "mixdial/corpus.hpp"
#include "mixdial/errors.hpp"
#include "mixdial/linearize.hpp"
#include "mixdial/schema.hpp"
#include "support/random_objects.hpp"

using namespace mixdial;
using namespace mixdial::testing;

namespace {

const Ontology& ontology() {
  static const Ontology o = Ontology::default_ontology();
  return o;
}

}  // namespace

TEST_SUITE("schema") {
  TEST_CASE("random states are valid and survive serialization") {
    Rng rng(101);
    for (int i = 0; i < 1000; ++i) {
      const DialogState s = random_state(rng, ontology());
      REQUIRE(validate_state(s, ontology()).ok());
      const ParsedState p = parse_state(serialize_state(s));
      CHECK(p.report.clean());
      CHECK(p.state == s);
      CHECK(state_from_json(state_to_json(s)) == s);
    }
  }

  TEST_CASE("random acts are valid and survive serialization") {
    Rng rng(102);
    for (int i = 0; i < 1000; ++i) {
      const DialogAct a = random_act(rng, ontology());
      REQUIRE(validate_act(a, ontology()).ok());
      const ParsedAct p = parse_act(serialize_act(a));
      CHECK(p.report.clean());
      CHECK(p.act == a);
      CHECK(act_from_json(act_to_json(a)) == a);
    }
  }

  TEST_CASE("applying a diff reproduces the target state") {
    Rng rng(103);
    for (int i = 0; i < 1000; ++i) {
      const DialogState prev = random_state(rng, ontology());
      const DialogState curr = mutate_state(rng, prev, ontology());
      const StateDelta d = diff_states(prev, curr);
      CHECK(apply_delta(prev, d, ontology()) == curr);
      CHECK(diff_states(curr, curr).empty());
      CHECK(delta_from_json(delta_to_json(d)) == d);
    }
  }

  TEST_CASE("flatten agrees with state equality") {
    Rng rng(104);
    for (int i = 0; i < 300; ++i) {
      const DialogState a = random_state(rng, ontology());
      const DialogState b = rng.chance(0.5) ? a : mutate_state(rng, a, ontology());
      CHECK((flatten_state(a) == flatten_state(b)) == (a == b));
    }
  }

  TEST_CASE("empty domains compare equal to absent ones") {
    DialogState a, b;
    b.domains["hotel"];
    CHECK(a == b);
    CHECK(flatten_state(a) == flatten_state(b));
  }

  TEST_CASE("validation names the offending path") {
    DialogState s;
    s.domains["hotel"].semi["colour"] = "red";
    s.domains["hotel"].entities["mimi inn"].attributes[std::string(kAttitudeSlot)] = "maybe";
    s.domains["spaceport"].semi["area"] = "north";
    const auto r = validate_state(s, ontology());
    std::set<std::string> paths;
    for (const auto& v : r.violations) paths.insert(v.domain + ":" + v.path);
    CHECK(paths.count("hotel:_semi/colour"));
    CHECK(paths.count("hotel:_entities/mimi inn/_attitude"));
    CHECK(paths.count("spaceport:"));
  }

  TEST_CASE("booked orders need every booking slot") {
    const DomainSchema* hotel = ontology().find("hotel");
    REQUIRE(hotel);
    REQUIRE(hotel->bookable());
    DialogState s;
    BookedOrder o;
    o.slots[hotel->booking.front()] = "two";
    s.domains["hotel"].booked.push_back(o);
    CHECK_EQ(validate_state(s, ontology()).ok(), hotel->booking.size() == 1);
  }

  TEST_CASE("rejected edits name their index") {
    StateDelta d;
    d.edits.push_back({EditKind::set_semi, "hotel", "", "area", "north", {}});
    d.edits.push_back({EditKind::set_semi, "hotel", "", "no_such_slot", "x", {}});
    try {
      (void)apply_delta({}, d, ontology());
      FAIL("expected a DeltaError");
    } catch (const DeltaError& e) {
      CHECK(e.index() == 1);
    }
  }

  TEST_CASE("values compare after folding") {
    CHECK(values_equal("  North   Side ", "north side"));
    CHECK_FALSE(values_equal("north", "north side"));
    CHECK(fold_value("A  B") == "a b");
  }

  TEST_CASE("malformed serialized states degrade gracefully") {
    const Tokens broken = split_tokens("[state] hotel _semi area [=] [;] hotel _semi price [=] cheap");
    const ParsedState p = parse_state(broken);
    CHECK(p.report.dropped >= 1);
    CHECK(p.state.find("hotel"));
    CHECK(p.state.find("hotel")->semi.at("price") == "cheap");
    CHECK_FALSE(parse_state(split_tokens("no markers here")).report.markers_found);
  }

  TEST_CASE("generated gold corpus passes the validation sweep") {
    GeneratorConfig cfg = GeneratorConfig::defaults();
    const GeneratedCorpus c = generate_corpus(cfg, ontology(), TransitionRules::defaults());
    std::size_t violations = 0, sessions = 0;
    auto sweep = [&](const std::vector<DialogSession>& v) {
      for (const auto& s : v) {
        ++sessions;
        violations += check_session(s, ontology()).size();
        for (const auto& t : s.turns) {
          violations += validate_state(t.state, ontology()).violations.size();
          violations += validate_act(t.act, ontology()).violations.size();
        }
      }
    };
    sweep(c.split.train);
    sweep(c.split.dev);
    sweep(c.split.test);
    for (const auto& [_, v] : c.split.external) sweep(v);
    CHECK(sessions >= 500);
    CHECK(violations == 0);
  }
}
