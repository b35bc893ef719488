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

#include "mixdial/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "mixdial/errors.hpp"
#include "mixdial/linearize.hpp"

namespace mixdial {

namespace {
constexpr std::string_view kMagic = "mixdial-vocab";
}

Vocabulary::Vocabulary() : tokens_(SequenceGrammar::special_tokens()) { index(); }

Vocabulary Vocabulary::from_content(std::vector<std::string> content) {
  const auto& specials = SequenceGrammar::special_tokens();
  std::set<std::string> uniq(content.begin(), content.end());
  for (const auto& s : specials) uniq.erase(s);
  Vocabulary v;
  v.tokens_ = specials;
  v.tokens_.insert(v.tokens_.end(), uniq.begin(), uniq.end());
  v.index();
  return v;
}

void Vocabulary::index() {
  ids_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<int>(i));
  unk_ = ids_.at(std::string(SequenceGrammar::kUnk));
  eos_ = ids_.at(std::string(SequenceGrammar::kEos));
}

int Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? unk_ : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) return tokens_[unk_];
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) > 0; }

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

Tokens Vocabulary::decode(std::span<const int> ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

std::string Vocabulary::serialize() const {
  std::ostringstream os;
  os << kMagic << ' ' << kFormatVersion << '\n' << tokens_.size() << '\n';
  for (const auto& t : tokens_) os << t << '\n';
  return os.str();
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(is >> magic >> version) || magic != kMagic) throw DataError("vocabulary: bad header");
  if (version != kFormatVersion)
    throw DataError("vocabulary: unsupported version " + std::to_string(version));
  if (!(is >> count)) throw DataError("vocabulary: missing token count");
  std::string line;
  std::getline(is, line);
  Vocabulary v;
  v.tokens_.clear();
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(is, line)) throw DataError("vocabulary: truncated at entry " + std::to_string(i));
    v.tokens_.push_back(line);
  }
  const auto& specials = SequenceGrammar::special_tokens();
  if (v.tokens_.size() < specials.size() || !std::equal(specials.begin(), specials.end(), v.tokens_.begin()))
    throw DataError("vocabulary: special-token block does not match this grammar version");
  v.index();
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  out << serialize();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read vocabulary " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace mixdial
