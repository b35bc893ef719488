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

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mixdial/knowledge_base.hpp"
#include "mixdial/ontology.hpp"
#include "mixdial/schema.hpp"

namespace mixdial {

// Sub-scenario goal kinds.
namespace goal {
inline constexpr std::string_view greeting = "greeting";
inline constexpr std::string_view decision = "decision";
inline constexpr std::string_view interrupt = "interrupt";
inline constexpr std::string_view farewell = "farewell";
inline constexpr std::string_view seek = "seek";
inline constexpr std::string_view book = "book";
inline constexpr std::string_view discuss = "discuss";
inline constexpr std::string_view question = "question";
}  // namespace goal

/// One step of a template. The structured description is (goal, constraints, outcome).
struct SubScenario {
  DialogType type = DialogType::chitchat;
  std::string goal;
  std::string domain;  // "general" for chitchat
  std::string entity;  // topic entity; empty when topicless
  SlotMap constraints;
  std::string outcome;

  /// "type:goal", the node name used by transition rules.
  std::string kind() const;
  bool operator==(const SubScenario&) const = default;
};

struct Template {
  std::string id;
  std::uint64_t seed = 0;
  std::vector<SubScenario> steps;
  bool operator==(const Template&) const = default;
};

struct TransitionRule {
  std::string from;
  std::string to;
  bool operator==(const TransitionRule&) const = default;
};

/// Declarative coherence rules: allowed start kinds, allowed consecutive
/// pairs, and which kinds need an entity introduced by an earlier step.
struct TransitionRules {
  std::vector<std::string> starts;
  std::vector<TransitionRule> pairs;
  /// Kinds whose topic entity must come from an earlier step.
  std::vector<std::string> needs_known_entity;
  /// Kinds that introduce their topic entity.
  std::vector<std::string> introduces_entity;
  /// Kind inserted mid-task by the simulator's interruption behaviour.
  std::string interrupt_kind;

  static TransitionRules defaults();
  static TransitionRules from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  bool allows(const std::string& from, const std::string& to) const;
  bool is_start(const std::string& kind) const;
  bool empty() const { return pairs.empty(); }
};

bool check_template(const Template& t, const TransitionRules& rules);

struct EnumerateOptions {
  int min_steps = 4;
  int max_steps = 7;
  double interrupt_probability = 0.15;
  /// Attempts per requested template before giving up on uniqueness.
  int attempts_per_template = 40;
};

/// Enumerates rule-consistent kind sequences and instantiates them against
/// the knowledge base. Returns min(n, found) distinct templates, all of which
/// pass check_template.
std::vector<Template> enumerate_templates(const KnowledgeBase& kb, const Ontology& ontology,
                                          const TransitionRules& rules, std::uint64_t seed, int n,
                                          const EnumerateOptions& options = {});

nlohmann::json template_to_json(const Template& t);
Template template_from_json(const nlohmann::json& doc);

}  // namespace mixdial
