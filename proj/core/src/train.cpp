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

#include "mixdial/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "mixdial/errors.hpp"

namespace mixdial {

using nlohmann::json;

std::string_view to_string(Stage stage) { return stage == Stage::prompt ? "prompt" : "finetune"; }
std::string_view to_string(Variant variant) { return variant == Variant::mt ? "mt" : "no-prompt"; }

std::optional<Stage> parse_stage(std::string_view text) {
  if (text == "prompt") return Stage::prompt;
  if (text == "finetune") return Stage::finetune;
  return std::nullopt;
}

std::optional<Variant> parse_variant(std::string_view text) {
  if (text == "mt") return Variant::mt;
  if (text == "no-prompt") return Variant::no_prompt;
  return std::nullopt;
}

std::vector<std::string> TrainConfig::problems() const {
  std::vector<std::string> out;
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) out.push_back("learning_rate must be >= 0");
  if (batch_size <= 0) out.push_back("batch_size must be positive");
  if (steps < 0) out.push_back("steps must be >= 0");
  if (!(clip_norm > 0.0)) out.push_back("clip_norm must be positive");
  if (eval_interval <= 0) out.push_back("eval_interval must be positive");
  if (warmup_steps < 0) out.push_back("warmup_steps must be >= 0");
  if (!(final_lr_fraction >= 0.0 && final_lr_fraction <= 1.0)) out.push_back("final_lr_fraction must be in [0, 1]");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) out.push_back("betas must be in [0, 1)");
  if (!(epsilon > 0.0)) out.push_back("epsilon must be positive");
  if (jobs <= 0) out.push_back("jobs must be positive");
  return out;
}

void TrainConfig::validate() const {
  auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid train config:";
  for (const auto& s : p) msg += " " + s + ";";
  msg.pop_back();
  throw ConfigError(msg);
}

json TrainConfig::to_json() const {
  return {{"stage", std::string(to_string(stage))},
          {"variant", std::string(to_string(variant))},
          {"learning_rate", learning_rate},
          {"batch_size", batch_size},
          {"steps", steps},
          {"clip_norm", clip_norm},
          {"eval_interval", eval_interval},
          {"warmup_steps", warmup_steps},
          {"decay", decay},
          {"final_lr_fraction", final_lr_fraction},
          {"beta1", beta1},
          {"beta2", beta2},
          {"epsilon", epsilon},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("train config must be an object");
  TrainConfig c;
  try {
    if (doc.contains("stage")) {
      auto s = parse_stage(doc.at("stage").get<std::string>());
      if (!s) throw ConfigError("train config: stage must be prompt or finetune");
      c.stage = *s;
    }
    if (doc.contains("variant")) {
      auto v = parse_variant(doc.at("variant").get<std::string>());
      if (!v) throw ConfigError("train config: variant must be mt or no-prompt");
      c.variant = *v;
    }
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.batch_size = doc.value("batch_size", c.batch_size);
    c.steps = doc.value("steps", c.steps);
    c.clip_norm = doc.value("clip_norm", c.clip_norm);
    c.eval_interval = doc.value("eval_interval", c.eval_interval);
    c.warmup_steps = doc.value("warmup_steps", c.warmup_steps);
    c.decay = doc.value("decay", c.decay);
    c.final_lr_fraction = doc.value("final_lr_fraction", c.final_lr_fraction);
    c.beta1 = doc.value("beta1", c.beta1);
    c.beta2 = doc.value("beta2", c.beta2);
    c.epsilon = doc.value("epsilon", c.epsilon);
    c.seed = doc.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("train config: ") + e.what());
  }
  return c;
}

double TrainConfig::rate_at(int step) const {
  if (warmup_steps > 0 && step < warmup_steps) return learning_rate * double(step + 1) / double(warmup_steps);
  if (!decay || steps <= warmup_steps) return learning_rate;
  const double progress = double(step - warmup_steps) / double(std::max(1, steps - warmup_steps));
  return learning_rate * (1.0 - (1.0 - final_lr_fraction) * std::min(1.0, progress));
}

StepLog train_stage(Checkpoint& ck, std::span<const EncodedExample> corpus, const TrainConfig& cfg,
                    const std::string& corpus_id, const IntervalHook& hook) {
  cfg.validate();
  if (corpus.empty()) throw DataError("train_stage: empty corpus");
  if (!ck.history.empty() && ck.history.back().variant != cfg.variant)
    throw ConfigError("train_stage: variant differs from the earlier stage");
  Model& model = ck.model;
  std::vector<float>& params = model.parameters();
  const std::size_t P = params.size();

  AdamState& opt = ck.optimizer;
  opt.m.assign(P, 0.0f);
  opt.v.assign(P, 0.0f);
  opt.step = 0;

  Rng order_rng(derive_seed(cfg.seed, 0x5eed));
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  order_rng.shuffle(order);
  std::size_t cursor = 0;

  const std::size_t B = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t jobs = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), B);
  std::vector<std::vector<float>> slot_grads(jobs > 1 ? B : 1, std::vector<float>(P));
  std::vector<float> total(P);
  std::vector<double> slot_loss(B);

  StepLog log;
  double interval_sum = 0;
  int interval_count = 0;
  for (int step = 0; step < cfg.steps; ++step) {
    std::vector<std::size_t> batch(B);
    for (auto& b : batch) {
      if (cursor == order.size()) {
        order_rng.shuffle(order);
        cursor = 0;
      }
      b = order[cursor++];
    }
    std::fill(total.begin(), total.end(), 0.0f);
    auto run = [&](std::size_t j, std::vector<float>& g) {
      std::fill(g.begin(), g.end(), 0.0f);
      Rng drop(derive_seed(cfg.seed, static_cast<std::uint64_t>(step) * B + j + 1));
      slot_loss[j] = double(model.loss(corpus[batch[j]], g, &drop));
    };
    if (jobs > 1) {
      std::vector<std::thread> workers;
      for (std::size_t w = 0; w < jobs; ++w)
        workers.emplace_back([&, w] {
          for (std::size_t j = w; j < B; j += jobs) run(j, slot_grads[j]);
        });
      for (auto& t : workers) t.join();
      for (std::size_t j = 0; j < B; ++j)
        for (std::size_t i = 0; i < P; ++i) total[i] += slot_grads[j][i];
    } else {
      for (std::size_t j = 0; j < B; ++j) {
        run(j, slot_grads[0]);
        for (std::size_t i = 0; i < P; ++i) total[i] += slot_grads[0][i];
      }
    }
    double loss = 0;
    for (double l : slot_loss) loss += l;
    loss /= double(B);
    if (!std::isfinite(loss)) throw DivergenceError(step, "loss is not finite at step " + std::to_string(step));

    const float inv = 1.0f / float(B);
    double norm2 = 0;
    for (auto& g : total) {
      g *= inv;
      norm2 += double(g) * double(g);
    }
    if (!std::isfinite(norm2)) throw DivergenceError(step, "gradient is not finite at step " + std::to_string(step));
    const double norm = std::sqrt(norm2);
    const float clip = norm > cfg.clip_norm ? float(cfg.clip_norm / norm) : 1.0f;

    ++opt.step;
    const double lr = cfg.rate_at(step);
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(opt.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(opt.step));
    const float b1 = float(cfg.beta1), b2 = float(cfg.beta2);
    const float step_size = float(lr / bc1);
    const float eps = float(cfg.epsilon);
    const float rbc2 = float(1.0 / std::sqrt(bc2));
    for (std::size_t i = 0; i < P; ++i) {
      const float g = total[i] * clip;
      opt.m[i] = b1 * opt.m[i] + (1.0f - b1) * g;
      opt.v[i] = b2 * opt.v[i] + (1.0f - b2) * g * g;
      params[i] -= step_size * opt.m[i] / (std::sqrt(opt.v[i]) * rbc2 + eps);
    }

    log.losses.push_back(loss);
    interval_sum += loss;
    ++interval_count;
    if (interval_count == cfg.eval_interval || step + 1 == cfg.steps) {
      log.intervals.push_back({step + 1, interval_sum / interval_count});
      if (hook) hook(step + 1, interval_sum / interval_count);
      interval_sum = 0;
      interval_count = 0;
    }
  }
  ck.history.push_back({cfg.stage, cfg.variant, corpus_id, cfg.steps, cfg.seed});
  return log;
}

ContinualLog continual_train(Checkpoint& ck, std::span<const std::vector<EncodedExample>> external,
                             std::span<const std::string> external_ids, std::span<const EncodedExample> target,
                             const std::string& target_id, const ContinualConfig& cfg, const IntervalHook& hook) {
  if (cfg.prompt.variant != cfg.finetune.variant)
    throw ConfigError("continual_train: variant must be the same in both stages");
  if (external.size() != external_ids.size()) throw ConfigError("continual_train: one id per external corpus");
  ContinualLog log;
  if (!cfg.skip_prompt_stage) {
    if (external.empty()) throw DataError("continual_train: at least one external corpus is required");
    TrainConfig pc = cfg.prompt;
    pc.stage = Stage::prompt;
    if (cfg.order == ExternalOrder::shuffled) {
      std::vector<EncodedExample> all;
      std::string id;
      for (std::size_t i = 0; i < external.size(); ++i) {
        all.insert(all.end(), external[i].begin(), external[i].end());
        id += (i ? "+" : "") + external_ids[i];
      }
      log.prompt.push_back(train_stage(ck, all, pc, id, hook));
    } else {
      // Steps are split evenly, remainder to the first corpora.
      const int n = static_cast<int>(external.size());
      for (int i = 0; i < n; ++i) {
        TrainConfig c = pc;
        c.steps = pc.steps / n + (i < pc.steps % n ? 1 : 0);
        c.seed = derive_seed(pc.seed, static_cast<std::uint64_t>(i));
        log.prompt.push_back(train_stage(ck, external[static_cast<std::size_t>(i)], c,
                                         external_ids[static_cast<std::size_t>(i)], hook));
      }
    }
  }
  if (cfg.skip_finetune_stage) return log;
  TrainConfig fc = cfg.finetune;
  fc.stage = Stage::finetune;
  log.finetune = train_stage(ck, target, fc, target_id, hook);
  return log;
}

namespace {

constexpr char kMagic[8] = {'M', 'I', 'X', 'D', 'C', 'K', 'P', 'T'};

template <class U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

template <class U>
U get(std::string_view bytes, std::size_t& pos) {
  if (pos + sizeof(U) > bytes.size()) throw DataError("checkpoint truncated");
  U v;
  std::memcpy(&v, bytes.data() + pos, sizeof(U));
  pos += sizeof(U);
  return v;
}

void put_floats(std::string& out, const std::vector<float>& v) {
  out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float));
}

std::vector<float> get_floats(std::string_view bytes, std::size_t& pos, std::size_t n) {
  if (pos + n * sizeof(float) > bytes.size()) throw DataError("checkpoint truncated");
  std::vector<float> v(n);
  std::memcpy(v.data(), bytes.data() + pos, n * sizeof(float));
  pos += n * sizeof(float);
  return v;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ck) {
  json history = json::array();
  for (const auto& h : ck.history)
    history.push_back({{"stage", std::string(to_string(h.stage))},
                       {"variant", std::string(to_string(h.variant))},
                       {"corpus", h.corpus_id},
                       {"steps", h.steps},
                       {"seed", h.seed}});
  json tensors = json::array();
  for (const auto& t : ck.model.tensors()) tensors.push_back({t.name, t.rows, t.cols});
  const bool has_opt = !ck.optimizer.m.empty();
  json header = {{"config", ck.model.config().to_json()},
                 {"history", history},
                 {"tensors", tensors},
                 {"optimizer", {{"step", ck.optimizer.step}, {"moments", has_opt}}},
                 {"provenance", ck.provenance}};
  const std::string text = header.dump();
  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  put_floats(out, ck.model.parameters());
  if (has_opt) {
    put_floats(out, ck.optimizer.m);
    put_floats(out, ck.optimizer.v);
  }
  return out;
}

namespace {

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw DataError("not a checkpoint file");
  std::size_t pos = sizeof kMagic;
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kCheckpointVersion)
    throw DataError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  const auto len = get<std::uint64_t>(bytes, pos);
  if (pos + len > bytes.size()) throw DataError("checkpoint truncated");
  json header;
  try {
    header = json::parse(bytes.substr(pos, len));
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  pos += len;
  ModelConfig config;
  try {
    config = ModelConfig::from_json(header.at("config"));
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint config: ") + e.what());
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
  const std::size_t P = parameter_count(config);
  Model model(config, get_floats(bytes, pos, P));
  const json& tensors = header.at("tensors");
  if (tensors.size() != model.tensors().size()) throw DataError("checkpoint tensor list does not match config");
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& t = model.tensors()[i];
    if (tensors[i].at(0).get<std::string>() != t.name || tensors[i].at(1).get<std::size_t>() != t.rows ||
        tensors[i].at(2).get<std::size_t>() != t.cols)
      throw DataError("checkpoint tensor '" + tensors[i].at(0).get<std::string>() + "' does not match config");
  }
  Checkpoint ck(std::move(model));
  for (const auto& h : header.at("history")) {
    StageRecord r;
    auto s = parse_stage(h.at("stage").get<std::string>());
    auto v = parse_variant(h.at("variant").get<std::string>());
    if (!s || !v) throw DataError("checkpoint history has an unknown stage or variant");
    r.stage = *s;
    r.variant = *v;
    r.corpus_id = h.at("corpus").get<std::string>();
    r.steps = h.at("steps").get<int>();
    r.seed = h.at("seed").get<std::uint64_t>();
    ck.history.push_back(r);
  }
  ck.optimizer.step = header.at("optimizer").at("step").get<std::int64_t>();
  if (header.at("optimizer").at("moments").get<bool>()) {
    ck.optimizer.m = get_floats(bytes, pos, P);
    ck.optimizer.v = get_floats(bytes, pos, P);
  }
  if (pos != bytes.size()) throw DataError("checkpoint has trailing bytes");
  ck.provenance = header.value("provenance", json::object());
  return ck;
}

}  // namespace

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  try {
    return parse_checkpoint(bytes);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint header: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  const std::string bytes = serialize_checkpoint(ck);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("cannot write " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace mixdial
