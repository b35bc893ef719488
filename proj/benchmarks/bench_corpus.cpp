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

#include "mixdial/corpus.hpp"
#include "mixdial/schema.hpp"

namespace {

using namespace mixdial;

void BM_GenerateCorpus(benchmark::State& state) {
  GeneratorConfig cfg = GeneratorConfig::defaults();
  cfg.train_sessions = int(state.range(0));
  const Ontology o = Ontology::default_ontology();
  for (auto _ : state) benchmark::DoNotOptimize(generate_corpus(cfg, o, TransitionRules::defaults()).split.train.size());
}
BENCHMARK(BM_GenerateCorpus)->Arg(50)->Arg(350)->Unit(benchmark::kMillisecond);

void BM_StateRoundTrip(benchmark::State& state) {
  const GeneratedCorpus c = [] {
    GeneratorConfig cfg = GeneratorConfig::defaults();
    cfg.train_sessions = 20;
    return generate_corpus(cfg, Ontology::default_ontology(), TransitionRules::defaults());
  }();
  const DialogState& s = c.split.train.front().turns.back().state;
  for (auto _ : state) benchmark::DoNotOptimize(parse_state(serialize_state(s)).state.domains.size());
}
BENCHMARK(BM_StateRoundTrip);

}  // namespace

BENCHMARK_MAIN();
