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

#include <algorithm>

#include "mixdial/errors.hpp"
#include "mixdial/linearize.hpp"
#include "mixdial/vocab.hpp"

using namespace mixdial;
using G = SequenceGrammar;

namespace {

const Ontology& ontology() {
  static const Ontology o = Ontology::default_ontology();
  return o;
}

ContextTurn turn(Speaker s, const char* text, DialogType type = DialogType::task, const char* domain = "hotel") {
  return {s, split_tokens(text), type, domain};
}

bool all_equal(const std::vector<int>& v, int x) {
  return std::all_of(v.begin(), v.end(), [x](int i) { return i == x; });
}

}  // namespace

TEST_SUITE("linearize") {
  TEST_CASE("embedding ids") {
    CHECK(type_id(std::nullopt) == 0);
    CHECK(type_id(DialogType::chitchat) == 1);
    CHECK(type_id(DialogType::qa) == 2);
    CHECK(type_id(DialogType::knowledge) == 3);
    CHECK(type_id(DialogType::task) == 4);
    CHECK(task_id(std::nullopt) == 0);
    CHECK(task_id(Task::dst) == 1);
    CHECK(task_id(Task::dap) == 2);
    CHECK(task_id(Task::rg) == 3);
    CHECK(task_id(Task::e2e) == 4);
    CHECK(ontology().domain_id("unknown-domain") == 0);
    CHECK(ontology().domain_id("general") >= 1);
  }

  TEST_CASE("prompt prefixes") {
    CHECK(prompt_prefix(DialogType::chitchat) == Tokens{"[Chat]"});
    CHECK(prompt_prefix(DialogType::qa) == Tokens{"[Question|Answer]"});
    CHECK(prompt_prefix(DialogType::task) == Tokens{"[Domain|Slot|Value]"});
    const std::vector<Tokens> k = {split_tokens("it is old"), split_tokens("it is big")};
    CHECK(prompt_prefix(DialogType::knowledge, k) == split_tokens("[Knowledge] it is old [;] it is big"));
  }

  TEST_CASE("formatted input layout") {
    const std::vector<ContextTurn> ctx = {turn(Speaker::user, "hi there", DialogType::chitchat, "general"),
                                          turn(Speaker::wizard, "hello"), turn(Speaker::user, "a hotel please")};
    TaskInput in;
    in.task = Task::dst;
    in.context = ctx;
    in.type = DialogType::task;
    in.domain = "hotel";
    const FormattedInput f = format_task_input(in, ontology(), {});
    CHECK(f.tokens.front() == "[Domain|Slot|Value]");
    CHECK(f.tokens.back() == G::kGen);
    CHECK(f.type_ids.size() == f.size());
    CHECK(f.task_ids.size() == f.size());
    CHECK(f.domain_ids.size() == f.size());
    CHECK(all_equal(f.task_ids, 1));
    CHECK(f.target_type == 4);
    CHECK(f.target_domain == ontology().domain_id("hotel"));
    CHECK(f.context_turns == 3);
    // The first context turn carries its own type.
    const auto user = std::find(f.tokens.begin(), f.tokens.end(), std::string(G::kUser)) - f.tokens.begin();
    CHECK(f.type_ids[static_cast<std::size_t>(user)] == 1);
  }

  TEST_CASE("no-prompt inputs have no prefix and unknown ids") {
    const std::vector<ContextTurn> ctx = {turn(Speaker::user, "a hotel please")};
    for (Task task : kTasks) {
      TaskInput in;
      in.task = task;
      in.context = ctx;
      in.type = DialogType::task;
      in.domain = "hotel";
      FormatOptions opt;
      opt.prompts = false;
      const FormattedInput f = format_task_input(in, ontology(), opt);
      CHECK(std::none_of(f.tokens.begin(), f.tokens.end(), [](const std::string& t) {
        return t == "[Domain|Slot|Value]" || t == "[Unknown]" || t == "[Chat]";
      }));
      CHECK(all_equal(f.type_ids, 0));
      CHECK(all_equal(f.task_ids, 0));
      CHECK(all_equal(f.domain_ids, 0));
      CHECK(f.target_type + f.target_task + f.target_domain == 0);
    }
  }

  TEST_CASE("end-to-end inputs use the unknown prompt and no type or domain ids") {
    const std::vector<ContextTurn> ctx = {turn(Speaker::user, "a hotel please")};
    TaskInput in;
    in.task = Task::e2e;
    in.context = ctx;
    in.type = DialogType::task;
    in.domain = "hotel";
    const FormattedInput f = format_task_input(in, ontology(), {});
    CHECK(f.tokens.front() == "[Unknown]");
    CHECK(all_equal(f.type_ids, 0));
    CHECK(all_equal(f.domain_ids, 0));
    CHECK(all_equal(f.task_ids, 4));
  }

  TEST_CASE("truncation drops the oldest turns first") {
    std::vector<ContextTurn> ctx;
    for (int i = 0; i < 10; ++i) ctx.push_back(turn(i % 2 ? Speaker::wizard : Speaker::user, "one two three four"));
    TaskInput in;
    in.task = Task::e2e;
    in.context = ctx;
    FormatOptions opt;
    opt.grammar.max_length = 2 + 3 * 5;  // prompt + gen + three turns
    const FormattedInput f = format_task_input(in, ontology(), opt);
    CHECK(f.context_turns == 3);
    CHECK(f.size() <= opt.grammar.max_length);
    CHECK(f.tokens.front() == "[Unknown]");

    opt.max_context_turns = 2;
    opt.grammar.max_length = 512;
    CHECK(format_task_input(in, ontology(), opt).context_turns == 2);
  }

  TEST_CASE("prompt and state that do not fit are an error") {
    DialogState s;
    s.domains["hotel"].semi["area"] = "north";
    TaskInput in;
    in.task = Task::dst;
    in.state = s;
    in.type = DialogType::task;
    FormatOptions opt;
    opt.grammar.max_length = 4;
    CHECK_THROWS_AS(format_task_input(in, ontology(), opt), DataError);
  }

  TEST_CASE("targets") {
    TaskGold g;
    g.state.domains["hotel"].semi["area"] = "north";
    g.header = {DialogType::task, "hotel"};
    g.act.add("hotel", "inform", "area", "north");
    g.response = split_tokens("it is in the north");
    const ParsedState ps = parse_state(format_task_target(Task::dst, g));
    CHECK(ps.state == g.state);
    REQUIRE(ps.header);
    CHECK(*ps.header == g.header);
    CHECK(parse_act(format_task_target(Task::dap, g)).act == g.act);
    CHECK(format_task_target(Task::rg, g) == g.response);
    CHECK(format_task_target(Task::e2e, g) == g.response);
  }

  TEST_CASE("delexicalization and relexicalization") {
    DialogAct act;
    act.add("hotel", "inform", "area", "north");
    act.add("hotel", "inform", "name", "mimi inn");
    const Tokens resp = split_tokens("mimi inn is in the north");
    const Tokens delex = delexicalize_response(resp, act);
    CHECK(delex == Tokens{placeholder("hotel", "name"), "is", "in", "the", placeholder("hotel", "area")});
    CHECK(is_placeholder(delex.front()));
    const Relexicalized r = relexicalize(delex, act);
    CHECK(r.tokens == resp);
    CHECK(r.unresolved == 0);
    const Relexicalized missing = relexicalize(Tokens{placeholder("hotel", "price")}, act);
    CHECK(missing.unresolved == 1);
  }

  TEST_CASE("relexicalization takes act values in order") {
    DialogAct act;
    act.add("hotel", "recommend", "name", "alpha inn");
    act.add("hotel", "recommend", "name", "beta inn");
    const std::string ph = placeholder("hotel", "name");
    const Relexicalized r = relexicalize(Tokens{ph, "or", ph, "or", ph}, act);
    CHECK(join_tokens(r.tokens) == "alpha inn or beta inn or beta inn");
  }

  TEST_CASE("vocabulary") {
    const Vocabulary v = Vocabulary::build(std::vector<std::string>{"b", "a", "a"});
    const auto& specials = G::special_tokens();
    CHECK(v.size() == specials.size() + 2);
    for (std::size_t i = 0; i < specials.size(); ++i) CHECK(v.id(specials[i]) == static_cast<int>(i));
    CHECK(v.id("zzz") == v.unk_id());
    CHECK(v.token(v.id("a")) == "a");
    CHECK(Vocabulary::deserialize(v.serialize()) == v);
    const Tokens t{"a", "b"};
    CHECK(v.decode(v.encode(t)) == t);
  }
}
