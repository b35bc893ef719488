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

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mixdial {

enum class DialogType { chitchat, qa, knowledge, task };

inline constexpr std::array<DialogType, 4> kDialogTypes = {DialogType::chitchat, DialogType::qa,
                                                           DialogType::knowledge, DialogType::task};

std::string_view to_string(DialogType type);
std::optional<DialogType> parse_dialog_type(std::string_view name);

inline constexpr std::string_view kGeneralDomain = "general";
inline constexpr std::string_view kAttitudeSlot = "_attitude";
inline constexpr std::string_view kPositive = "positive";
inline constexpr std::string_view kNegative = "negative";

/// Intents available to every non-general domain.
inline constexpr std::array<std::string_view, 4> kDomainIntents = {"request", "inform", "recommend",
                                                                   "no-offer"};
/// Default general-domain intent set; ontology files may extend it.
inline constexpr std::array<std::string_view, 5> kDefaultGeneralIntents = {
    "greet", "bye", "thank", "chitchat", "acknowledge"};

/// Slot and intent inventory of a single domain.
///
/// For the general domain `informable` holds the user-profile slots and the
/// other slot lists stay empty. A domain with no booking slots is not
/// bookable.
struct DomainSchema {
  std::string name;
  std::vector<std::string> informable;
  std::vector<std::string> booking;
  std::vector<std::string> attributes;
  std::vector<std::string> intents;

  bool is_general() const { return name == kGeneralDomain; }
  bool bookable() const { return !booking.empty(); }
  bool has_intent(std::string_view intent) const;
  /// Slots allowed in `_semi` (informable plus booking) or in the general profile.
  bool is_semi_slot(std::string_view slot) const;
  bool is_booking_slot(std::string_view slot) const;
  bool is_attribute(std::string_view slot) const;
  /// Union of all slot lists, sorted.
  std::vector<std::string> slots() const;
  bool has_slot(std::string_view slot) const;

  bool operator==(const DomainSchema&) const = default;
};

class Ontology {
 public:
  Ontology() = default;
  explicit Ontology(std::vector<DomainSchema> domains);

  /// General plus hotel, attraction, restaurant, food and movie.
  static Ontology default_ontology();
  /// Throws ConfigError when the document is malformed or fails problems().
  static Ontology from_json(const nlohmann::json& doc);
  static Ontology load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const std::vector<DomainSchema>& domains() const { return domains_; }
  const DomainSchema* find(std::string_view domain) const;
  const DomainSchema& general() const;
  /// Non-general domain names in declaration order.
  std::vector<std::string> task_domains() const;

  /// 1-based id of a domain for the embedding tables; 0 is the reserved unknown id.
  int domain_id(std::string_view domain) const;
  std::size_t domain_id_count() const { return domains_.size() + 1; }

  /// Well-formedness violations; empty when the ontology is usable.
  std::vector<std::string> problems() const;

  bool operator==(const Ontology&) const = default;

 private:
  std::vector<DomainSchema> domains_;
};

}  // namespace mixdial
