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

#include "mixdial/decode.hpp"
#include "mixdial/model.hpp"
#include "mixdial/random.hpp"

namespace {

using namespace mixdial;

ModelConfig bench_config() {
  ModelConfig c;
  c.vocab_size = 3000;
  c.domain_ids = 7;
  return c;
}

EncodedExample example(const ModelConfig& c, std::size_t n, std::size_t prompt) {
  Rng rng(3);
  EncodedExample e;
  for (std::size_t i = 0; i < n; ++i) {
    e.tokens.push_back(int(rng.below(std::size_t(c.vocab_size))));
    e.types.push_back(int(rng.below(5)));
    e.tasks.push_back(1);
    e.domains.push_back(int(rng.below(std::size_t(c.domain_ids))));
  }
  e.prompt_length = prompt;
  return e;
}

void BM_LossAndGradient(benchmark::State& state) {
  const ModelConfig c = bench_config();
  const Model m(c);
  const EncodedExample ex = example(c, std::size_t(state.range(0)), std::size_t(state.range(0)) / 2);
  std::vector<float> grad(m.parameters().size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.loss(ex, grad));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossAndGradient)->Arg(64)->Arg(192)->Arg(576)->Unit(benchmark::kMillisecond);

void BM_GreedyDecode(benchmark::State& state) {
  const ModelConfig c = bench_config();
  const Model m(c);
  const EncodedExample prompt = example(c, 120, 120);
  // An eos id outside the vocabulary never matches, so every step runs.
  for (auto _ : state) {
    benchmark::DoNotOptimize(greedy_decode(m, prompt, {4, 1, 1}, -1, std::size_t(state.range(0))));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GreedyDecode)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_BeamDecode(benchmark::State& state) {
  const ModelConfig c = bench_config();
  const Model m(c);
  const EncodedExample prompt = example(c, 120, 120);
  for (auto _ : state) {
    benchmark::DoNotOptimize(beam_decode(m, prompt, {4, 1, 1}, -1, 32, int(state.range(0)), 0.0));
  }
}
BENCHMARK(BM_BeamDecode)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
