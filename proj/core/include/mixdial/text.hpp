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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mixdial {

using Tokens = std::vector<std::string>;

/// Splits on ASCII whitespace; empty fields are dropped.
Tokens split_tokens(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens, std::string_view sep = " ");

/// Trims surrounding whitespace and collapses internal runs to one space.
std::string normalize_value(std::string_view value);
/// normalize_value followed by ASCII case folding. All value comparisons use this form.
std::string fold_value(std::string_view value);
bool values_equal(std::string_view a, std::string_view b);

/// Bracketed tokens such as "[state]" or "[value_hotel_area]" are reserved
/// for grammar markers and placeholders; content never contains them.
bool is_reserved_token(std::string_view token);
bool contains_reserved_token(std::string_view value);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// Finds `needle` as a contiguous token run inside `haystack`, starting at `from`.
/// Returns haystack.size() when absent.
std::size_t find_run(std::span<const std::string> haystack, std::span<const std::string> needle,
                     std::size_t from = 0);

}  // namespace mixdial
