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

#include <doctest.h>

#include <cmath>

#include "mixdial/decode.hpp"
#include "mixdial/errors.hpp"
#include "mixdial/model.hpp"
#include "mixdial/train.hpp"
#include "support/model_fixtures.hpp"

using namespace mixdial;
using namespace mixdial::testing;

TEST_SUITE("model") {
  TEST_CASE("parameter count matches the tensor layout and a hand count") {
    ModelConfig c = small_config(64, 2, 4);
    c.vocab_size = 500;
    const Model m(c);
    std::size_t total = 0;
    for (const auto& t : m.tensors()) total += t.size();
    CHECK(total == m.parameters().size());
    CHECK(parameter_count(c) == total);
    CHECK(hand_parameter_count(c) == total);
    CHECK(m.tensors().size() == 5 + 12 * 2 + 3);
  }

  TEST_CASE("invalid shapes are rejected") {
    ModelConfig c = small_config(65, 2, 4);
    CHECK_THROWS_AS(Model{c}, ConfigError);
    c.width = 64;
    c.layers = 0;
    c.dropout = 1.5;
    try {
      c.validate();
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("layers") != std::string::npos);
      CHECK(std::string(e.what()).find("dropout") != std::string::npos);
    }
  }

  TEST_CASE("initialization is deterministic in the seed") {
    const ModelConfig c = small_config(16, 2, 2);
    CHECK(Model(c).parameters() == Model(c).parameters());
    ModelConfig d = c;
    d.seed += 1;
    CHECK(Model(c).parameters() != Model(d).parameters());
  }

  TEST_CASE("initial scales") {
    ModelConfig c = small_config(64, 2, 4);
    c.vocab_size = 400;
    const Model m(c);
    auto stddev = [&](const char* name) {
      const auto v = m.view(m.tensor(name));
      const double mean = v.template cast<double>().mean();
      return std::sqrt((v.template cast<double>().array() - mean).square().mean());
    };
    CHECK(stddev("embed.token") == doctest::Approx(0.02).epsilon(0.05));
    CHECK(stddev("layer0.attn.wo") == doctest::Approx(0.02 / std::sqrt(4.0)).epsilon(0.1));
    CHECK(m.view(m.tensor("layer1.ln2.gain")).minCoeff() == 1.0f);
    CHECK(m.view(m.tensor("final_ln.bias")).cwiseAbs().maxCoeff() == 0.0f);
  }

  TEST_CASE("embedding is the elementwise sum of its tables") {
    const ModelConfig c = small_config(16, 1, 2);
    const Model m(c);
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const SequenceIds ids = random_ids(rng, c, 1 + rng.below(12));
      const std::size_t first = rng.below(8);
      const auto e = m.embed(ids, first);
      for (std::size_t i = 0; i < ids.size(); ++i)
        for (int k = 0; k < c.width; ++k) {
          double sum = 0;
          sum += m.view(m.tensor("embed.token"))(ids.tokens[i], k);
          sum += m.view(m.tensor("embed.position"))(static_cast<long>(first + i), k);
          sum += m.view(m.tensor("embed.type"))(ids.types[i], k);
          sum += m.view(m.tensor("embed.task"))(ids.tasks[i], k);
          sum += m.view(m.tensor("embed.domain"))(ids.domains[i], k);
          CHECK(e(static_cast<long>(i), k) == doctest::Approx(sum).epsilon(1e-6));
        }
    }
  }

  TEST_CASE("domain ids shift the embedding by the row difference") {
    const ModelConfig c = small_config(16, 1, 2);
    const Model m(c);
    Rng rng(6);
    SequenceIds a = random_ids(rng, c, 6);
    SequenceIds b = a;
    for (auto& d : a.domains) d = 1;
    for (auto& d : b.domains) d = 2;
    const auto diff = (m.embed(b) - m.embed(a)).eval();
    const auto rows = (m.view(m.tensor("embed.domain")).row(2) - m.view(m.tensor("embed.domain")).row(1)).eval();
    for (long i = 0; i < diff.rows(); ++i) CHECK((diff.row(i) - rows).cwiseAbs().maxCoeff() < 1e-6f);
  }

  TEST_CASE("out-of-range ids name their position") {
    const ModelConfig c = small_config(16, 1, 2);
    const Model m(c);
    Rng rng(7);
    SequenceIds ids = random_ids(rng, c, 5);
    ids.domains[3] = c.domain_ids;
    try {
      (void)m.embed(ids);
      FAIL("expected a DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("position 3") != std::string::npos);
    }
    SequenceIds longer = random_ids(rng, c, static_cast<std::size_t>(c.max_positions) + 1);
    CHECK_THROWS_AS(m.embed(longer), DataError);
  }

  TEST_CASE("uniform logits give ln V") {
    ModelConfig c = small_config(16, 2, 2);
    c.vocab_size = 37;
    Transformer<double> m(c);
    m.view(m.tensor("output")).setZero();
    Rng rng(8);
    const EncodedExample ex = random_example(rng, c, 10, 4);
    CHECK(std::abs(m.loss(ex) - std::log(37.0)) < 1e-9);
  }

  TEST_CASE("analytic gradient matches central differences") {
    const ModelConfig c = small_config(16, 2, 2);
    Transformer<double> m(c);
    Rng rng(9);
    randomize(m, rng, 0.3);
    const EncodedExample ex = random_example(rng, c, 12, 5);
    const double worst = gradient_check(m, ex, rng, 20, 1e-5);
    CHECK(worst < 1e-4);
  }

  TEST_CASE("incremental decoding matches full logits") {
    const ModelConfig c = small_config(16, 2, 2);
    const Model m(c);
    Rng rng(10);
    const SequenceIds ids = random_ids(rng, c, 9);
    const auto full = m.logits(ids);
    auto st = m.start();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto row = m.extend(st, slice(ids, i, i + 1));
      CHECK((row - full.row(static_cast<long>(i))).cwiseAbs().maxCoeff() < 1e-4f);
    }
    auto st2 = m.start();
    (void)m.extend(st2, slice(ids, 0, 4));
    const auto last = m.extend(st2, slice(ids, 4, ids.size()));
    CHECK((last - full.row(static_cast<long>(ids.size() - 1))).cwiseAbs().maxCoeff() < 1e-4f);
  }

  TEST_CASE("attention is causal") {
    const ModelConfig c = small_config(16, 2, 2);
    const Model m(c);
    Rng rng(11);
    SequenceIds a = random_ids(rng, c, 8);
    SequenceIds b = a;
    b.tokens[7] = (b.tokens[7] + 1) % c.vocab_size;
    const auto la = m.logits(a), lb = m.logits(b);
    CHECK((la.topRows(7) - lb.topRows(7)).cwiseAbs().maxCoeff() == 0.0f);
  }

  TEST_CASE("beam width 1 equals greedy and budgets hold") {
    const ModelConfig c = small_config(16, 2, 2);
    const Model m(c);
    Rng rng(12);
    for (int trial = 0; trial < 5; ++trial) {
      const SequenceIds prompt = random_ids(rng, c, 6);
      const TargetIds t{1, 1, 1};
      const auto g = greedy_decode(m, prompt, t, 1, 15);
      CHECK(beam_decode(m, prompt, t, 1, 15, 1, 0.0) == g);
      CHECK(g.size() <= 15);
      CHECK(beam_decode(m, prompt, t, 1, 15, 3, 0.7).size() <= 15);
      DecodeConfig dc;
      dc.max_target_tokens = 1000;
      CHECK(generate(m, prompt, t, 1, dc).size() <= static_cast<std::size_t>(c.max_positions) - prompt.size() + 1);
    }
  }

  TEST_CASE("checkpoint round trip is byte exact") {
    const ModelConfig c = small_config(16, 2, 2);
    Checkpoint ck{Model(c)};
    ck.history.push_back({Stage::prompt, Variant::mt, "a+b", 10, 3});
    ck.optimizer.m.assign(ck.model.parameters().size(), 0.5f);
    ck.optimizer.v.assign(ck.model.parameters().size(), 0.25f);
    ck.optimizer.step = 10;
    ck.provenance = {{"seed", 3}};
    const std::string bytes = serialize_checkpoint(ck);
    const Checkpoint back = deserialize_checkpoint(bytes);
    CHECK(serialize_checkpoint(back) == bytes);
    CHECK(back.history == ck.history);
    CHECK(back.model.parameters() == ck.model.parameters());

    std::string bad_version = bytes;
    bad_version[8] = 9;
    CHECK_THROWS_AS(deserialize_checkpoint(bad_version), DataError);
    CHECK_THROWS_AS(deserialize_checkpoint(bytes + "x"), DataError);
    CHECK_THROWS_AS(deserialize_checkpoint(bytes.substr(0, bytes.size() - 3)), DataError);
    CHECK_THROWS_AS(deserialize_checkpoint("not a checkpoint"), DataError);
  }
}
