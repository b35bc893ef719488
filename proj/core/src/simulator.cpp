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

#include "mixdial/simulator.hpp"

#include <algorithm>
#include <map>

#include "mixdial/errors.hpp"
#include "mixdial/random.hpp"

namespace mixdial {

namespace {

Tokens say(std::initializer_list<std::string_view> parts) {
  Tokens out;
  for (auto p : parts)
    for (auto& t : split_tokens(p)) out.push_back(std::move(t));
  return out;
}

void extend(Tokens& a, const Tokens& b) { a.insert(a.end(), b.begin(), b.end()); }

std::string domain_noun(std::string_view domain) {
  static const std::map<std::string, std::string, std::less<>> kNouns = {
      {"hotel", "hotel"}, {"attraction", "place to visit"}, {"restaurant", "restaurant"},
      {"food", "local dish"}, {"movie", "movie"}};
  auto it = kNouns.find(domain);
  return it == kNouns.end() ? std::string(domain) : it->second;
}

/// How the user phrases a constraint.
Tokens constraint_phrase(std::string_view slot, const std::string& v) {
  if (slot == "area") return say({"in the", v, "area"});
  if (slot == "price") return say({"that is", v});
  if (slot == "rating") return say({"with", v, "reviews"});
  if (slot == "ticket") return say({"with", v, "tickets"});
  if (slot == "cuisine") return say({"serving", v, "food"});
  if (slot == "taste") return say({"that tastes", v});
  if (slot == "origin") return say({"from", v});
  if (slot == "genre") return say({"that is a", v});
  if (slot == "name") return say({"called", v});
  return say({"with", slot, v});
}

/// How the wizard states an entity attribute; always names the entity.
Tokens attribute_statement(const Entity& e, const std::string& slot) {
  const std::string& v = e.attributes.at(slot);
  const std::string& n = e.name;
  if (slot == "area") return say({n, "is in the", v, "area"});
  if (slot == "price") return say({n, "is", v, "to stay"});
  if (slot == "rating") return say({n, "has", v, "reviews"});
  if (slot == "parking") return say({n, "offers", v});
  if (slot == "ticket") return say({n, "has", v, "tickets"});
  if (slot == "opentime") return say({n, "is open", v});
  if (slot == "cuisine") return say({n, "serves", v, "food"});
  if (slot == "taste") return say({n, "tastes", v});
  if (slot == "origin") return say({n, "comes from", v});
  if (slot == "ingredient") return say({n, "is made with", v});
  if (slot == "season") return say({n, "is best in", v});
  if (slot == "genre") return say({n, "is a", v, "film"});
  if (slot == "director") return say({n, "was directed by", v});
  if (slot == "year") return say({n, "came out in", v});
  return say({"the", slot, "of", n, "is", v});
}

std::string_view booking_question(std::string_view slot) {
  if (slot == "date") return "which day";
  if (slot == "people") return "how many people";
  if (slot == "time") return "what time";
  if (slot == "nights") return "how many nights";
  return slot;
}

Tokens booking_answer(std::string_view slot, const std::string& v) {
  if (slot == "date") return say({"on", v});
  if (slot == "people") return say({"for", v, "people"});
  if (slot == "time") return say({"at", v});
  if (slot == "nights") return say({"for", v, "nights"});
  return say({slot, v});
}

class SessionBuilder {
 public:
  SessionBuilder(const Ontology& ontology, const KnowledgeBase& kb, const GeneratorConfig& config, Rng& rng)
      : ontology_(ontology), kb_(kb), config_(config), rng_(rng) {}

  void user(Tokens utterance, DialogType type, const std::string& domain, const std::vector<StateEdit>& edits = {}) {
    if (rng_.chance(config_.style.filler_probability)) {
      static const std::vector<std::string> kFill = {"well ,", "hmm ,", "you know ,", "honestly ,", "okay ,"};
      Tokens t = split_tokens(rng_.pick(kFill));
      extend(t, utterance);
      utterance = std::move(t);
    }
    push(Speaker::user, std::move(utterance), type, domain, {}, {}, edits);
  }

  void wizard(Tokens utterance, DialogType type, const std::string& domain, DialogAct act,
              std::vector<std::string> knowledge = {}, const std::vector<StateEdit>& edits = {}) {
    if (rng_.chance(config_.style.filler_probability * 0.5)) {
      static const std::vector<std::string> kFill = {"sure ,", "of course ,", "alright ,"};
      Tokens t = split_tokens(rng_.pick(kFill));
      extend(t, utterance);
      utterance = std::move(t);
    }
    push(Speaker::wizard, std::move(utterance), type, domain, std::move(act), std::move(knowledge), edits);
  }

  const DialogState& state() const { return state_; }
  DialogSession& session() { return session_; }

 private:
  void push(Speaker speaker, Tokens utterance, DialogType type, const std::string& domain, DialogAct act,
            std::vector<std::string> knowledge, const std::vector<StateEdit>& edits) {
    Turn t;
    t.speaker = speaker;
    t.utterance = std::move(utterance);
    t.type = type;
    t.domain = domain;
    t.act = std::move(act);
    t.knowledge = std::move(knowledge);
    DialogState next = apply_delta(state_, StateDelta{edits}, ontology_);
    t.delta = diff_states(state_, next);
    t.state = next;
    state_ = std::move(next);
    session_.turns.push_back(std::move(t));
  }

  const Ontology& ontology_;
  const KnowledgeBase& kb_;
  const GeneratorConfig& config_;
  Rng& rng_;
  DialogState state_;
  DialogSession session_;
};

StateEdit semi(const std::string& d, const std::string& slot, const std::string& v) {
  return {EditKind::set_semi, d, {}, slot, v, {}};
}
StateEdit attr(const Entity& e, const std::string& slot) {
  return {EditKind::set_entity_attribute, e.domain, e.name, slot, e.attributes.at(slot), {}};
}
StateEdit attitude(const Entity& e, std::string_view v) {
  return {EditKind::set_entity_attitude, e.domain, e.name, {}, std::string(v), {}};
}
StateEdit profile(const std::string& slot, const std::string& v) {
  return {EditKind::set_general, std::string(kGeneralDomain), {}, slot, v, {}};
}

class Simulator {
 public:
  Simulator(const Template& t, const KnowledgeBase& kb, const Ontology& ontology, const GeneratorConfig& config,
            std::uint64_t seed)
      : t_(t), kb_(kb), ontology_(ontology), config_(config), rng_(seed), b_(ontology, kb, config, rng_) {}

  DialogSession run() {
    for (std::size_t i = 0; i < t_.steps.size(); ++i) step(i);
    DialogSession s = std::move(b_.session());
    s.template_id = t_.id;
    return s;
  }

 private:
  const std::string general = std::string(kGeneralDomain);

  const Entity& entity_of(const SubScenario& s) {
    const Entity* e = kb_.find(s.domain, s.entity);
    if (!e) throw DataError("template " + t_.id + ": entity '" + s.entity + "' not in knowledge base");
    return *e;
  }

  DialogAct general_act(std::string_view intent) {
    DialogAct a;
    a.add(general, std::string(intent));
    return a;
  }

  int exchanges(int lo, int hi) { return rng_.range(lo, std::max(lo, hi)); }

  void step(std::size_t i) {
    const SubScenario& s = t_.steps[i];
    if (s.goal == goal::greeting) return greeting(s);
    if (s.goal == goal::decision) return decision(i);
    if (s.goal == goal::interrupt) return interrupt(s);
    if (s.goal == goal::farewell) return farewell(s);
    if (s.goal == goal::seek) return seek(s);
    if (s.goal == goal::book) return book(s);
    if (s.goal == goal::discuss) return discuss(s);
    if (s.goal == goal::question) return question(s);
    throw DataError("template " + t_.id + ": unknown goal '" + s.goal + "'");
  }

  void greeting(const SubScenario& s) {
    const auto& v = config_.values;
    const std::string mood = rng_.pick(v.at("mood"));
    Tokens u = say({"hi there , i feel", mood, "today"});
    std::vector<StateEdit> edits{profile("mood", mood)};
    if (rng_.chance(config_.style.profile_probability)) {
      if (rng_.chance(0.5)) {
        const std::string name = rng_.pick(v.at("name"));
        extend(u, say({", my name is", name}));
        edits.push_back(profile("name", name));
      } else {
        const std::string job = rng_.pick(v.at("occupation"));
        extend(u, say({", i work as a", job}));
        edits.push_back(profile("occupation", job));
      }
    }
    b_.user(u, s.type, general, edits);
    b_.wizard(say({"hello , nice to meet you . what is on your mind ?"}), s.type, general, general_act("greet"));
    static const std::vector<std::pair<std::string, std::string>> kSmall = {
        {"life has been rather dull lately", "i am sorry to hear that , a change may help"},
        {"i have had a long week at work", "that sounds tiring , you deserve a break"},
        {"the weather is lovely outside today", "yes it is a great day to go out"},
    };
    const int extra = exchanges(config_.style.chitchat_exchanges_min, config_.style.chitchat_exchanges_max) - 1;
    for (int k = 0; k < extra; ++k) {
      const auto& [ut, wt] = kSmall[(static_cast<std::size_t>(k) + rng_.below(kSmall.size())) % kSmall.size()];
      b_.user(split_tokens(ut), s.type, general);
      b_.wizard(split_tokens(wt), s.type, general, general_act("chitchat"));
    }
  }

  void decision(std::size_t i) {
    const SubScenario& s = t_.steps[i];
    std::string next = "short trip";
    for (std::size_t j = i + 1; j < t_.steps.size(); ++j)
      if (t_.steps[j].domain != general) {
        next = domain_noun(t_.steps[j].domain);
        break;
      }
    b_.user(say({"i do not know what to do this weekend"}), s.type, general);
    b_.wizard(say({"maybe you could try a new", next, "this time"}), s.type, general, general_act("chitchat"));
    b_.user(say({"that sounds like a good idea , i agree"}), s.type, general);
    b_.wizard(say({"great , let me help you find one"}), s.type, general, general_act("acknowledge"));
  }

  void interrupt(const SubScenario& s) {
    b_.user(say({"by the way , i just saw a funny video"}), s.type, general);
    b_.wizard(say({"oh really ? what was it about ?"}), s.type, general, general_act("chitchat"));
    b_.user(say({"a cat playing the piano , anyway let us continue"}), s.type, general);
    b_.wizard(say({"sure , let us go on"}), s.type, general, general_act("acknowledge"));
  }

  void farewell(const SubScenario& s) {
    b_.user(say({"thanks for your help , goodbye"}), s.type, general);
    DialogAct a = general_act("bye");
    a.add(general, "thank");
    b_.wizard(say({"you are welcome , have a nice day"}), s.type, general, a);
  }

  void seek(const SubScenario& s) {
    const Entity& e = entity_of(s);
    const std::string& d = s.domain;
    const DomainSchema& schema = *ontology_.find(d);
    const std::string noun = domain_noun(d);

    // Optional impossible request answered with no-offer.
    if (!s.constraints.empty() && rng_.chance(config_.style.no_offer_probability)) {
      const auto& [slot, _] = *s.constraints.begin();
      auto pool = kb_.in_domain(d);
      for (const auto& candidate : config_.values.at(slot)) {
        const bool offered = std::any_of(pool.begin(), pool.end(), [&](const Entity* x) {
          return x->attributes.count(slot) && x->attributes.at(slot) == candidate;
        });
        if (offered) continue;
        Tokens u = say({"is there a", noun});
        extend(u, constraint_phrase(slot, candidate));
        extend(u, say({"?"}));
        b_.user(u, s.type, d, {semi(d, slot, candidate)});
        DialogAct a;
        a.add(d, "no-offer");
        b_.wizard(say({"sorry , i can not find a", noun, "like that"}), s.type, d, a);
        break;
      }
    }

    Tokens u = say({"i am looking for a", noun});
    std::vector<StateEdit> edits;
    bool first = true;
    for (const auto& [slot, v] : s.constraints) {
      if (!first) extend(u, say({"and"}));
      first = false;
      extend(u, constraint_phrase(slot, v));
      edits.push_back(semi(d, slot, v));
    }
    b_.user(u, s.type, d, edits);

    // Ask for one more informable constraint the entity satisfies.
    std::vector<std::string> open;
    for (const auto& slot : schema.informable)
      if (slot != "name" && e.attributes.count(slot) && !s.constraints.count(slot)) open.push_back(slot);
    if (!open.empty() && rng_.chance(0.6)) {
      const std::string slot = rng_.pick(open);
      DialogAct a;
      a.add(d, "request", slot);
      b_.wizard(say({"do you have a preference for the", slot, "?"}), s.type, d, a);
      Tokens ans = constraint_phrase(slot, e.attributes.at(slot));
      extend(ans, say({"would be nice"}));
      b_.user(ans, s.type, d, {semi(d, slot, e.attributes.at(slot))});
    }

    auto recommend = [&](const Entity& x) {
      std::vector<std::string> slots;
      for (const auto& [slot, _] : x.attributes) slots.push_back(slot);
      const std::string slot = rng_.pick(slots);
      Tokens w = say({"i recommend"});
      extend(w, split_tokens(x.name));
      extend(w, say({", since"}));
      extend(w, attribute_statement(x, slot));
      DialogAct a;
      a.add(d, "recommend", "name", x.name);
      a.add(d, "inform", slot, x.attributes.at(slot));
      b_.wizard(w, s.type, d, a, {attribute_ref(x, slot)}, {attr(x, slot)});
    };

    if (s.outcome == "reject-first") {
      auto pool = kb_.in_domain(d);
      const DomainState* known = b_.state().find(d);
      std::erase_if(pool, [&](const Entity* x) { return x == &e || (known && known->entities.count(x->name)); });
      if (!pool.empty()) {
        const Entity& other = *rng_.pick(pool);
        recommend(other);
        Tokens r = say({"i have been to"});
        extend(r, split_tokens(other.name));
        extend(r, say({"before , anything else ?"}));
        b_.user(r, s.type, d, {attitude(other, kNegative)});
      }
    }
    recommend(e);
    Tokens acc = split_tokens(e.name);
    extend(acc, rng_.chance(0.5) ? say({"sounds interesting , but i do not know it"}) : say({"sounds great , i like it"}));
    b_.user(acc, s.type, d, {attitude(e, kPositive)});
    std::vector<std::string> rest;
    for (const auto& [slot, _] : e.attributes)
      if (!b_.state().find(d)->entities.at(e.name).attributes.count(slot)) rest.push_back(slot);
    if (rest.empty())
      for (const auto& [slot, _] : e.attributes) rest.push_back(slot);
    const std::string slot = rng_.pick(rest);
    DialogAct a;
    a.add(d, "inform", slot, e.attributes.at(slot));
    Tokens w = say({"also ,"});
    extend(w, attribute_statement(e, slot));
    b_.wizard(w, s.type, d, a, {attribute_ref(e, slot)}, {attr(e, slot)});
  }

  void discuss(const SubScenario& s) {
    const Entity& e = entity_of(s);
    const std::string& d = s.domain;
    static const std::vector<std::string> kAsks = {"tell me more about", "what else is special about",
                                                   "what do people say about", "is it worth visiting"};
    const int n = exchanges(config_.style.knowledge_exchanges_min, config_.style.knowledge_exchanges_max);
    std::vector<std::string> slots;
    for (const auto& [slot, _] : e.attributes) slots.push_back(slot);
    rng_.shuffle(slots);
    std::size_t next_slot = 0;
    std::size_t next_snippet = 0;
    for (int k = 0; k < n; ++k) {
      Tokens u = say({kAsks[static_cast<std::size_t>(k) % kAsks.size()]});
      extend(u, split_tokens(e.name));
      std::vector<StateEdit> ue;
      if (k == n - 1) {
        u = say({"i really like"});
        extend(u, split_tokens(e.name));
        extend(u, say({", tell me one more thing"}));
        ue.push_back(attitude(e, kPositive));
      }
      b_.user(u, s.type, d, ue);
      const bool use_snippet = next_snippet < e.snippets.size() && (k % 2 == 1 || next_slot >= slots.size());
      if (use_snippet) {
        DialogAct a;
        a.add(d, "inform", "name", e.name);
        Tokens w = e.snippets[next_snippet];
        b_.wizard(w, s.type, d, a, {snippet_ref(e, next_snippet)});
        ++next_snippet;
      } else {
        const std::string& slot = slots[next_slot % slots.size()];
        ++next_slot;
        DialogAct a;
        a.add(d, "inform", slot, e.attributes.at(slot));
        b_.wizard(attribute_statement(e, slot), s.type, d, a, {attribute_ref(e, slot)}, {attr(e, slot)});
      }
    }
  }

  void question(const SubScenario& s) {
    const Entity& e = entity_of(s);
    const std::string& d = s.domain;
    const int n = exchanges(config_.style.qa_exchanges_min, config_.style.qa_exchanges_max);
    std::vector<QaPair> pairs = e.qa;
    for (const auto& [slot, value] : e.attributes) {
      if (std::any_of(pairs.begin(), pairs.end(), [&](const QaPair& q) { return q.slot == slot; })) continue;
      pairs.push_back({split_tokens("what is the " + slot + " of " + e.name + " ?"),
                       split_tokens("the " + slot + " of " + e.name + " is " + value), slot});
    }
    rng_.shuffle(pairs);
    for (int k = 0; k < n; ++k) {
      const QaPair& q = pairs[static_cast<std::size_t>(k) % pairs.size()];
      b_.user(q.question, s.type, d);
      DialogAct a;
      a.add(d, "inform", q.slot, e.attributes.at(q.slot));
      b_.wizard(q.answer, s.type, d, a, {attribute_ref(e, q.slot)}, {attr(e, q.slot)});
    }
  }

  void book(const SubScenario& s) {
    const Entity& e = entity_of(s);
    const std::string& d = s.domain;
    const DomainSchema& schema = *ontology_.find(d);
    Tokens u = say({"i would like to book"});
    extend(u, split_tokens(e.name));
    b_.user(u, s.type, d, {semi(d, "name", e.name)});

    std::vector<std::string> ask;
    for (const auto& slot : schema.booking)
      if (slot != "name") ask.push_back(slot);
    DialogAct req;
    Tokens w = say({"sure ,"});
    for (std::size_t k = 0; k < ask.size(); ++k) {
      if (k) extend(w, say({k + 1 == ask.size() ? "and" : ","}));
      extend(w, say({booking_question(ask[k])}));
      req.add(d, "request", ask[k]);
    }
    extend(w, say({"?"}));
    b_.wizard(w, s.type, d, req);

    BookedOrder order;
    order.slots["name"] = e.name;
    Tokens ans;
    std::vector<StateEdit> edits;
    for (const auto& slot : ask) {
      const std::string v = rng_.pick(config_.values.at(slot));
      extend(ans, booking_answer(slot, v));
      edits.push_back(semi(d, slot, v));
      order.slots[slot] = v;
    }
    b_.user(ans, s.type, d, edits);

    DialogAct done;
    done.add(d, "inform", "name", e.name);
    Tokens c = say({"done ,"});
    extend(c, split_tokens(e.name));
    extend(c, say({"is booked for you", order.slots.count("date") ? "on " + order.slots.at("date") : ""}));
    StateEdit append{EditKind::append_booked, d, {}, {}, {}, order};
    b_.wizard(c, s.type, d, done, {}, {append});
    ++b_.session().completed_orders;
  }

  const Template& t_;
  const KnowledgeBase& kb_;
  const Ontology& ontology_;
  const GeneratorConfig& config_;
  Rng rng_;
  SessionBuilder b_;
};

}  // namespace

DialogSession simulate_dialog(const Template& t, const KnowledgeBase& kb, const Ontology& ontology,
                              const GeneratorConfig& config, std::uint64_t seed) {
  for (const auto& s : t.steps)
    if (!s.entity.empty() && !kb.find(s.domain, s.entity))
      throw DataError("template " + t.id + ": entity '" + s.entity + "' not in knowledge base");
  return Simulator(t, kb, ontology, config, seed).run();
}

}  // namespace mixdial
