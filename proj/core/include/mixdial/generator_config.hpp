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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mixdial {

/// Knobs of the rule-based user and wizard agents.
struct StyleConfig {
  double interrupt_probability = 0.15;
  double reject_first_probability = 0.3;
  double no_offer_probability = 0.2;
  double profile_probability = 0.5;
  double filler_probability = 0.35;
  int knowledge_exchanges_min = 2;
  int knowledge_exchanges_max = 4;
  int qa_exchanges_min = 1;
  int qa_exchanges_max = 2;
  int chitchat_exchanges_min = 1;
  int chitchat_exchanges_max = 2;

  bool operator==(const StyleConfig&) const = default;
};

struct GeneratorConfig {
  std::uint64_t seed = 13;
  /// Entities per domain. Listed domains are the ones templates may use.
  std::map<std::string, int> entity_counts;
  /// Value pools per slot (attributes, booking slots, profile slots).
  std::map<std::string, std::vector<std::string>> values;
  int snippets_per_entity = 2;
  int qa_per_entity = 2;
  int train_sessions = 350;
  int dev_sessions = 50;
  int test_sessions = 100;
  /// Sessions per single-type external corpus.
  int external_sessions = 100;
  int template_min_steps = 4;
  int template_max_steps = 7;
  /// Number of distinct templates offered to the simulator.
  int template_pool = 400;
  StyleConfig style;

  /// Entity counts follow the source inventory (1133:435:122:1971:224)
  /// divided by 50 and rounded up.
  static GeneratorConfig defaults();
  static GeneratorConfig from_json(const nlohmann::json& doc);
  static GeneratorConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  /// Hash of the canonical JSON form.
  std::string hash() const;

  bool operator==(const GeneratorConfig&) const = default;
};

}  // namespace mixdial
