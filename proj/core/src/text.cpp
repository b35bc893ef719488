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

#include "mixdial/text.hpp"

#include <cctype>
#include <cstdio>

namespace mixdial {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

Tokens split_tokens(std::string_view text) {
  Tokens out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join_tokens(std::span<const std::string> tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
}

std::string normalize_value(std::string_view value) {
  auto parts = split_tokens(value);
  return join_tokens(parts);
}

std::string fold_value(std::string_view value) {
  std::string out = normalize_value(value);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool values_equal(std::string_view a, std::string_view b) { return fold_value(a) == fold_value(b); }

bool is_reserved_token(std::string_view token) {
  return token.size() >= 2 && token.front() == '[' && token.back() == ']';
}

bool contains_reserved_token(std::string_view value) {
  for (const auto& t : split_tokens(value))
    if (is_reserved_token(t)) return true;
  return false;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::size_t find_run(std::span<const std::string> haystack, std::span<const std::string> needle,
                     std::size_t from) {
  if (needle.empty() || needle.size() > haystack.size()) return haystack.size();
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    bool hit = true;
    for (std::size_t k = 0; k < needle.size() && hit; ++k) hit = haystack[i + k] == needle[k];
    if (hit) return i;
  }
  return haystack.size();
}

}  // namespace mixdial
