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

#include "mixdial/ontology.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "mixdial/errors.hpp"

namespace mixdial {

namespace {

bool contains(const std::vector<std::string>& v, std::string_view x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::vector<std::string> domain_intents() { return {kDomainIntents.begin(), kDomainIntents.end()}; }

std::vector<std::string> string_list(const nlohmann::json& doc, const char* key,
                                     const std::string& where) {
  std::vector<std::string> out;
  if (!doc.contains(key)) return out;
  const auto& v = doc.at(key);
  if (!v.is_array()) throw ConfigError(where + ": field '" + key + "' must be a list");
  for (const auto& item : v) {
    if (!item.is_string()) throw ConfigError(where + ": field '" + key + "' must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

std::string_view to_string(DialogType type) {
  switch (type) {
    case DialogType::chitchat:
      return "chitchat";
    case DialogType::qa:
      return "qa";
    case DialogType::knowledge:
      return "knowledge";
    case DialogType::task:
      return "task";
  }
  return "unknown";
}

std::optional<DialogType> parse_dialog_type(std::string_view name) {
  for (auto t : kDialogTypes)
    if (to_string(t) == name) return t;
  return std::nullopt;
}

bool DomainSchema::has_intent(std::string_view intent) const { return contains(intents, intent); }

bool DomainSchema::is_semi_slot(std::string_view slot) const {
  return contains(informable, slot) || contains(booking, slot);
}

bool DomainSchema::is_booking_slot(std::string_view slot) const { return contains(booking, slot); }

bool DomainSchema::is_attribute(std::string_view slot) const { return contains(attributes, slot); }

std::vector<std::string> DomainSchema::slots() const {
  std::set<std::string> all(informable.begin(), informable.end());
  all.insert(booking.begin(), booking.end());
  all.insert(attributes.begin(), attributes.end());
  return {all.begin(), all.end()};
}

bool DomainSchema::has_slot(std::string_view slot) const {
  return is_semi_slot(slot) || is_attribute(slot);
}

Ontology::Ontology(std::vector<DomainSchema> domains) : domains_(std::move(domains)) {}

Ontology Ontology::default_ontology() {
  std::vector<DomainSchema> d;
  d.push_back({"general", {"mood", "name", "occupation"}, {}, {},
               {kDefaultGeneralIntents.begin(), kDefaultGeneralIntents.end()}});
  d.push_back({"hotel",
               {"name", "area", "price", "rating"},
               {"name", "date", "people", "nights"},
               {"area", "price", "rating", "parking"},
               domain_intents()});
  d.push_back({"attraction",
               {"name", "area", "rating", "ticket"},
               {"name", "date", "people"},
               {"area", "ticket", "rating", "opentime"},
               domain_intents()});
  d.push_back({"restaurant",
               {"name", "area", "cuisine", "price"},
               {"name", "date", "time", "people"},
               {"area", "cuisine", "price", "rating"},
               domain_intents()});
  d.push_back({"food", {"name", "taste", "origin"}, {}, {"taste", "origin", "ingredient", "season"},
               domain_intents()});
  d.push_back({"movie",
               {"name", "genre", "rating"},
               {"name", "date", "time", "people"},
               {"genre", "director", "year", "rating"},
               domain_intents()});
  return Ontology(std::move(d));
}

Ontology Ontology::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("domains") || !doc.at("domains").is_array())
    throw ConfigError("ontology: expected an object with a 'domains' list");
  std::vector<DomainSchema> domains;
  for (const auto& entry : doc.at("domains")) {
    if (!entry.is_object() || !entry.contains("name") || !entry.at("name").is_string())
      throw ConfigError("ontology: every domain needs a string 'name'");
    DomainSchema s;
    s.name = entry.at("name").get<std::string>();
    const std::string where = "ontology domain '" + s.name + "'";
    s.informable = string_list(entry, "informable", where);
    s.booking = string_list(entry, "booking", where);
    s.attributes = string_list(entry, "attributes", where);
    s.intents = string_list(entry, "intents", where);
    if (s.intents.empty())
      s.intents = s.is_general()
                      ? std::vector<std::string>(kDefaultGeneralIntents.begin(),
                                                 kDefaultGeneralIntents.end())
                      : domain_intents();
    domains.push_back(std::move(s));
  }
  Ontology o(std::move(domains));
  if (auto p = o.problems(); !p.empty()) throw ConfigError("ontology: " + p.front());
  return o;
}

Ontology Ontology::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open ontology file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("ontology file " + path.string() + ": " + e.what());
  }
  return from_json(doc);
}

nlohmann::json Ontology::to_json() const {
  nlohmann::json doc;
  doc["version"] = 1;
  doc["domains"] = nlohmann::json::array();
  for (const auto& s : domains_) {
    doc["domains"].push_back({{"name", s.name},
                              {"informable", s.informable},
                              {"booking", s.booking},
                              {"attributes", s.attributes},
                              {"intents", s.intents}});
  }
  return doc;
}

const DomainSchema* Ontology::find(std::string_view domain) const {
  for (const auto& s : domains_)
    if (s.name == domain) return &s;
  return nullptr;
}

const DomainSchema& Ontology::general() const {
  const auto* g = find(kGeneralDomain);
  if (!g) throw ConfigError("ontology has no general domain");
  return *g;
}

std::vector<std::string> Ontology::task_domains() const {
  std::vector<std::string> out;
  for (const auto& s : domains_)
    if (!s.is_general()) out.push_back(s.name);
  return out;
}

int Ontology::domain_id(std::string_view domain) const {
  for (std::size_t i = 0; i < domains_.size(); ++i)
    if (domains_[i].name == domain) return static_cast<int>(i) + 1;
  return 0;
}

std::vector<std::string> Ontology::problems() const {
  std::vector<std::string> out;
  std::set<std::string> names;
  for (const auto& s : domains_) {
    if (s.name.empty()) out.push_back("empty domain name");
    if (!names.insert(s.name).second) out.push_back("duplicate domain '" + s.name + "'");
    for (const auto& slot : s.slots()) {
      if (slot.empty() || slot.front() == '_')
        out.push_back("domain '" + s.name + "': slot '" + slot + "' collides with reserved names");
      if (slot.find_first_of(" \t\n/[]") != std::string::npos)
        out.push_back("domain '" + s.name + "': slot '" + slot + "' is not a plain identifier");
    }
    if (s.is_general()) {
      if (!s.booking.empty() || !s.attributes.empty())
        out.push_back("general domain cannot declare booking or attribute slots");
    } else {
      for (auto intent : kDomainIntents)
        if (!s.has_intent(intent))
          out.push_back("domain '" + s.name + "' lacks intent '" + std::string(intent) + "'");
      for (const auto& intent : s.intents)
        if (std::find(kDomainIntents.begin(), kDomainIntents.end(), intent) == kDomainIntents.end())
          out.push_back("domain '" + s.name + "' declares unknown intent '" + intent + "'");
    }
  }
  if (!names.count(std::string(kGeneralDomain))) out.push_back("general domain missing");
  return out;
}

}  // namespace mixdial
