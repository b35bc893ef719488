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

#include "mixdial/generator_config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "mixdial/errors.hpp"
#include "mixdial/text.hpp"

namespace mixdial {

using nlohmann::json;

GeneratorConfig GeneratorConfig::defaults() {
  GeneratorConfig c;
  c.entity_counts = {{"hotel", 23}, {"attraction", 9}, {"restaurant", 3}, {"food", 40}, {"movie", 5}};
  c.values = {
      {"area", {"north", "south", "east", "west", "centre"}},
      {"price", {"cheap", "moderate", "expensive"}},
      {"rating", {"excellent", "good", "average"}},
      {"parking", {"free-parking", "paid-parking", "no-parking"}},
      {"ticket", {"free-entry", "low-fare", "high-fare"}},
      {"opentime", {"all-day", "daytime", "evening-only"}},
      {"cuisine", {"sichuan", "cantonese", "hunan", "western", "japanese"}},
      {"taste", {"spicy", "sweet", "sour", "salty", "savory"}},
      {"origin", {"chengdu", "beijing", "wuhan", "xian", "hangzhou"}},
      {"ingredient", {"pork", "beef", "tofu", "mushroom", "shrimp"}},
      {"season", {"spring", "summer", "autumn", "winter"}},
      {"genre", {"comedy", "drama", "action", "animation", "thriller"}},
      {"director", {"lin zhou", "wu han", "chen ye", "li mo", "zhao an"}},
      {"year", {"1998", "2004", "2011", "2016", "2020"}},
      {"date", {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"}},
      {"people", {"one", "two", "three", "four", "five"}},
      {"nights", {"1", "2", "3"}},
      {"time", {"morning", "noon", "night"}},
      {"mood", {"bored", "happy", "tired", "stressed"}},
      {"occupation", {"teacher", "student", "engineer", "doctor", "designer"}},
      {"name", {"amy", "bob", "lily", "tom", "mia", "leo"}},
  };
  return c;
}

namespace {

template <typename T>
void read_opt(const json& doc, const char* key, T& out) {
  if (!doc.contains(key)) return;
  try {
    out = doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("generator config: field '") + key + "': " + e.what());
  }
}

}  // namespace

GeneratorConfig GeneratorConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("generator config: expected an object");
  GeneratorConfig c = defaults();
  read_opt(doc, "seed", c.seed);
  read_opt(doc, "entity_counts", c.entity_counts);
  if (doc.contains("values")) {
    std::map<std::string, std::vector<std::string>> v;
    read_opt(doc, "values", v);
    for (auto& [k, pool] : v) c.values[k] = std::move(pool);
  }
  read_opt(doc, "snippets_per_entity", c.snippets_per_entity);
  read_opt(doc, "qa_per_entity", c.qa_per_entity);
  read_opt(doc, "train_sessions", c.train_sessions);
  read_opt(doc, "dev_sessions", c.dev_sessions);
  read_opt(doc, "test_sessions", c.test_sessions);
  read_opt(doc, "external_sessions", c.external_sessions);
  read_opt(doc, "template_min_steps", c.template_min_steps);
  read_opt(doc, "template_max_steps", c.template_max_steps);
  read_opt(doc, "template_pool", c.template_pool);
  if (doc.contains("style")) {
    const json& s = doc.at("style");
    read_opt(s, "interrupt_probability", c.style.interrupt_probability);
    read_opt(s, "reject_first_probability", c.style.reject_first_probability);
    read_opt(s, "no_offer_probability", c.style.no_offer_probability);
    read_opt(s, "profile_probability", c.style.profile_probability);
    read_opt(s, "filler_probability", c.style.filler_probability);
    read_opt(s, "knowledge_exchanges_min", c.style.knowledge_exchanges_min);
    read_opt(s, "knowledge_exchanges_max", c.style.knowledge_exchanges_max);
    read_opt(s, "qa_exchanges_min", c.style.qa_exchanges_min);
    read_opt(s, "qa_exchanges_max", c.style.qa_exchanges_max);
    read_opt(s, "chitchat_exchanges_min", c.style.chitchat_exchanges_min);
    read_opt(s, "chitchat_exchanges_max", c.style.chitchat_exchanges_max);
  }
  if (c.template_min_steps < 2 || c.template_max_steps < c.template_min_steps)
    throw ConfigError("generator config: template step bounds must satisfy 2 <= min <= max");
  if (c.train_sessions < 0 || c.dev_sessions < 0 || c.test_sessions < 0 || c.external_sessions < 0)
    throw ConfigError("generator config: session counts must be non-negative");
  return c;
}

GeneratorConfig GeneratorConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open generator config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("generator config " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

json GeneratorConfig::to_json() const {
  json s = {{"interrupt_probability", style.interrupt_probability},
            {"reject_first_probability", style.reject_first_probability},
            {"no_offer_probability", style.no_offer_probability},
            {"profile_probability", style.profile_probability},
            {"filler_probability", style.filler_probability},
            {"knowledge_exchanges_min", style.knowledge_exchanges_min},
            {"knowledge_exchanges_max", style.knowledge_exchanges_max},
            {"qa_exchanges_min", style.qa_exchanges_min},
            {"qa_exchanges_max", style.qa_exchanges_max},
            {"chitchat_exchanges_min", style.chitchat_exchanges_min},
            {"chitchat_exchanges_max", style.chitchat_exchanges_max}};
  return {{"seed", seed},
          {"entity_counts", entity_counts},
          {"values", values},
          {"snippets_per_entity", snippets_per_entity},
          {"qa_per_entity", qa_per_entity},
          {"train_sessions", train_sessions},
          {"dev_sessions", dev_sessions},
          {"test_sessions", test_sessions},
          {"external_sessions", external_sessions},
          {"template_min_steps", template_min_steps},
          {"template_max_steps", template_max_steps},
          {"template_pool", template_pool},
          {"style", s}};
}

std::string GeneratorConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

}  // namespace mixdial
