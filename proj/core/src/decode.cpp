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

#include "mixdial/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mixdial/errors.hpp"

namespace mixdial {

namespace {

using Row = Model::RowVector;

Row log_softmax(const Row& logits) {
  const float mx = logits.maxCoeff();
  const float lse = mx + std::log((logits.array() - mx).exp().sum());
  return (logits.array() - lse).matrix();
}

// Lowest id wins ties.
int argmax(const Row& row) {
  int best = 0;
  for (Eigen::Index i = 1; i < row.size(); ++i)
    if (row(i) > row(best)) best = static_cast<int>(i);
  return best;
}

SequenceIds one(int token, const TargetIds& ids) {
  SequenceIds s;
  s.tokens = {token};
  s.types = {ids.type};
  s.tasks = {ids.task};
  s.domains = {ids.domain};
  return s;
}

std::size_t budget(const Model& model, const SequenceIds& prompt, std::size_t max_tokens) {
  if (prompt.size() == 0) throw DataError("generate: empty prompt");
  const auto positions = static_cast<std::size_t>(model.config().max_positions);
  if (prompt.size() > positions) throw DataError("generate: prompt longer than max_positions");
  // A generated token needs a position only when it is fed back.
  return std::min(max_tokens, positions - prompt.size() + 1);
}

}  // namespace

std::vector<int> greedy_decode(const Model& model, const SequenceIds& prompt, const TargetIds& ids, int eos_id,
                               std::size_t max_tokens) {
  const std::size_t limit = budget(model, prompt, max_tokens);
  std::vector<int> out;
  if (limit == 0) return out;
  auto state = model.start();
  Row logits = model.extend(state, prompt);
  while (out.size() < limit) {
    const int next = argmax(log_softmax(logits));
    if (next == eos_id) break;
    out.push_back(next);
    if (out.size() == limit) break;
    logits = model.extend(state, one(next, ids));
  }
  return out;
}

std::vector<int> beam_decode(const Model& model, const SequenceIds& prompt, const TargetIds& ids, int eos_id,
                             std::size_t max_tokens, int width, double length_alpha) {
  if (width < 1) throw ConfigError("beam width must be at least 1");
  const std::size_t limit = budget(model, prompt, max_tokens);
  if (limit == 0) return {};

  struct Beam {
    std::vector<int> tokens;
    double score = 0;
    DecodeState<float> state;
    Row logits;
  };
  struct Done {
    std::vector<int> tokens;
    double score;
  };
  auto normalized = [&](double score, std::size_t len) {
    return length_alpha == 0.0 ? score : score / std::pow(double(std::max<std::size_t>(len, 1)), length_alpha);
  };

  std::vector<Beam> beams(1);
  beams[0].state = model.start();
  beams[0].logits = model.extend(beams[0].state, prompt);
  std::vector<Done> done;

  for (std::size_t step = 0; step < limit && !beams.empty(); ++step) {
    struct Cand {
      double score;
      std::size_t beam;
      int token;
    };
    std::vector<Cand> cands;
    for (std::size_t b = 0; b < beams.size(); ++b) {
      const Row lp = log_softmax(beams[b].logits);
      for (Eigen::Index t = 0; t < lp.size(); ++t)
        cands.push_back({beams[b].score + double(lp(t)), b, static_cast<int>(t)});
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.beam != b.beam) return a.beam < b.beam;
      return a.token < b.token;
    });
    std::vector<Beam> next;
    for (const auto& c : cands) {
      if (static_cast<int>(next.size()) >= width) break;
      const Beam& src = beams[c.beam];
      if (c.token == eos_id) {
        done.push_back({src.tokens, normalized(c.score, src.tokens.size())});
        if (static_cast<int>(done.size()) >= width) break;
        continue;
      }
      Beam nb;
      nb.tokens = src.tokens;
      nb.tokens.push_back(c.token);
      nb.score = c.score;
      nb.state = src.state;
      if (nb.tokens.size() < limit) nb.logits = model.extend(nb.state, one(c.token, ids));
      next.push_back(std::move(nb));
    }
    beams = std::move(next);
    if (static_cast<int>(done.size()) >= width) {
      beams.clear();
      break;
    }
    if (!beams.empty() && beams.front().tokens.size() >= limit) break;
  }
  for (const auto& b : beams) done.push_back({b.tokens, normalized(b.score, b.tokens.size())});
  if (done.empty()) return {};
  // Stable: earlier finishers win ties.
  auto best = std::max_element(done.begin(), done.end(), [](const Done& a, const Done& b) { return a.score < b.score; });
  return best->tokens;
}

std::vector<int> generate(const Model& model, const SequenceIds& prompt, const TargetIds& ids, int eos_id,
                          const DecodeConfig& config) {
  if (config.beam_width <= 1) return greedy_decode(model, prompt, ids, eos_id, config.max_target_tokens);
  return beam_decode(model, prompt, ids, eos_id, config.max_target_tokens, config.beam_width, config.length_alpha);
}

}  // namespace mixdial
