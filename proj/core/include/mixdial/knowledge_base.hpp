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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mixdial/generator_config.hpp"
#include "mixdial/ontology.hpp"
#include "mixdial/schema.hpp"
#include "mixdial/text.hpp"

namespace mixdial {

struct QaPair {
  Tokens question;
  Tokens answer;
  std::string slot;  // attribute the answer is grounded in
  bool operator==(const QaPair&) const = default;
};

struct Entity {
  std::string name;
  std::string domain;
  SlotMap attributes;
  std::vector<Tokens> snippets;
  std::vector<QaPair> qa;
  bool operator==(const Entity&) const = default;
};

class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(std::vector<Entity> entities);

  const std::vector<Entity>& entities() const { return entities_; }
  bool empty() const { return entities_.empty(); }
  std::size_t size() const { return entities_.size(); }
  /// Name lookup is case-insensitive.
  const Entity* find(std::string_view domain, std::string_view name) const;
  std::vector<const Entity*> in_domain(std::string_view domain) const;
  std::vector<std::string> domains() const;

  /// Invariant violations (duplicate names, ungrounded QA, snippets not naming their entity).
  std::vector<std::string> problems() const;

  nlohmann::json to_json() const;
  static KnowledgeBase from_json(const nlohmann::json& doc);

  bool operator==(const KnowledgeBase& other) const { return entities_ == other.entities_; }

 private:
  std::vector<Entity> entities_;  // sorted by (domain, name)
};

/// Deterministic for a given (config, seed). Throws ConfigError when a listed
/// domain has no entities or an attribute has no value pool.
KnowledgeBase build_kb(const GeneratorConfig& config, const Ontology& ontology, std::uint64_t seed);

/// One coarse-knowledge item: an attribute triplet or a snippet of a mentioned entity.
struct KnowledgeItem {
  std::string domain;
  std::string entity;
  std::string slot;  // empty for snippets
  std::size_t snippet = 0;
  Tokens tokens;
  bool operator==(const KnowledgeItem&) const = default;
};

/// All attributes and snippets of every entity in the state's `_entities`
/// sections, ordered by entity name, then slot, then snippet index.
std::vector<KnowledgeItem> retrieve_coarse_knowledge(const DialogState& state, const KnowledgeBase& kb);

/// Knowledge reference ids used in turn annotations.
std::string attribute_ref(const Entity& e, std::string_view slot);
std::string snippet_ref(const Entity& e, std::size_t index);

}  // namespace mixdial
