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

#include <cstddef>
#include <vector>

#include "mixdial/model.hpp"

namespace mixdial {

struct DecodeConfig {
  std::size_t max_target_tokens = 300;
  int beam_width = 1;
  /// Beam scores are divided by length^alpha; 0 ranks by total log-probability.
  double length_alpha = 0.0;
};

/// Ids given to every generated position.
struct TargetIds {
  int type = 0;
  int task = 0;
  int domain = 0;
};

/// Generated token ids without the end marker. Greedy when beam_width == 1.
/// Never longer than max_target_tokens or the model's remaining positions.
std::vector<int> generate(const Model& model, const SequenceIds& prompt, const TargetIds& ids, int eos_id,
                          const DecodeConfig& config = {});
std::vector<int> greedy_decode(const Model& model, const SequenceIds& prompt, const TargetIds& ids, int eos_id,
                               std::size_t max_tokens);
std::vector<int> beam_decode(const Model& model, const SequenceIds& prompt, const TargetIds& ids, int eos_id,
                             std::size_t max_tokens, int width, double length_alpha);

}  // namespace mixdial
