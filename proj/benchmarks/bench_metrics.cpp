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

#include <benchmark/benchmark.h>

#include "mixdial/metrics.hpp"
#include "mixdial/random.hpp"

namespace {

using namespace mixdial;

std::vector<Tokens> sentences(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<Tokens> out(n);
  for (auto& s : out)
    for (std::size_t i = 0, len = 5 + rng.below(15); i < len; ++i) s.push_back("w" + std::to_string(rng.below(300)));
  return out;
}

void BM_Bleu(benchmark::State& state) {
  const auto h = sentences(1, 1000), r = sentences(2, 1000);
  for (auto _ : state) benchmark::DoNotOptimize(bleu(h, r, 2));
}
BENCHMARK(BM_Bleu)->Unit(benchmark::kMillisecond);

void BM_Meteor(benchmark::State& state) {
  const auto h = sentences(3, 1000), r = sentences(4, 1000);
  for (auto _ : state) benchmark::DoNotOptimize(meteor(h, r));
}
BENCHMARK(BM_Meteor)->Unit(benchmark::kMillisecond);

void BM_Cider(benchmark::State& state) {
  const auto h = sentences(5, 1000), r = sentences(6, 1000);
  for (auto _ : state) benchmark::DoNotOptimize(cider(h, r).score);
}
BENCHMARK(BM_Cider)->Unit(benchmark::kMillisecond);

void BM_Distinct(benchmark::State& state) {
  const auto c = sentences(7, 1000);
  for (auto _ : state) benchmark::DoNotOptimize(distinct_n(c, 2).value);
}
BENCHMARK(BM_Distinct)->Unit(benchmark::kMillisecond);

}  // namespace
