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

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mixdial/text.hpp"

namespace mixdial {

/// Token/id mapping. Ids 0..k-1 are the grammar's special tokens in fixed
/// order, followed by the sorted content tokens. Unknown tokens map to `[unk]`.
class Vocabulary {
 public:
  static constexpr int kFormatVersion = 1;

  Vocabulary();
  template <typename Range>
  static Vocabulary build(const Range& content) {
    std::vector<std::string> v(std::begin(content), std::end(content));
    return from_content(std::move(v));
  }
  static Vocabulary from_content(std::vector<std::string> content);

  int id(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;

  int unk_id() const { return unk_; }
  int eos_id() const { return eos_; }

  std::vector<int> encode(std::span<const std::string> tokens) const;
  Tokens decode(std::span<const int> ids) const;

  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  int unk_ = 0;
  int eos_ = 0;
};

}  // namespace mixdial
