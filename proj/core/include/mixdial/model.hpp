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
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "mixdial/random.hpp"

namespace mixdial {

struct ModelConfig {
  int vocab_size = 0;
  int width = 64;
  int layers = 2;
  int heads = 4;
  int ff_width = 256;
  int max_positions = 640;
  // Each count includes the reserved unknown id 0.
  int type_ids = 5;
  int task_ids = 5;
  int domain_ids = 1;
  double dropout = 0.0;
  std::uint64_t seed = 1;

  std::vector<std::string> problems() const;
  /// Throws ConfigError listing every violated constraint.
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& doc);
  bool operator==(const ModelConfig&) const = default;
};

/// Closed-form parameter count for a configuration.
std::size_t parameter_count(const ModelConfig& config);

struct TensorInfo {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return rows * cols; }
  bool operator==(const TensorInfo&) const = default;
};

/// Parallel token / type / task / domain id sequences.
struct SequenceIds {
  std::vector<int> tokens;
  std::vector<int> types;
  std::vector<int> tasks;
  std::vector<int> domains;
  std::size_t size() const { return tokens.size(); }
};

/// Input ⊕ target ⊕ [eos]. Positions from prompt_length - 1 onwards predict the
/// next token; everything before is context only.
struct EncodedExample : SequenceIds {
  std::size_t prompt_length = 0;
  std::size_t target_count() const { return size() - prompt_length; }
};

/// Per-layer keys and values of an already processed prefix.
template <class T>
struct DecodeState {
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  std::vector<Matrix> keys;
  std::vector<Matrix> values;
  std::size_t length = 0;
};

/// Decoder-only causal transformer with pre-layer-norm blocks, GELU feed-forward
/// and an untied output projection. Gradients are computed by hand.
template <class T>
class Transformer {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;

  /// Deterministic initialization from config.seed.
  explicit Transformer(const ModelConfig& config);
  /// Adopts existing parameters (sizes must match the config).
  Transformer(const ModelConfig& config, std::vector<T> parameters);

  const ModelConfig& config() const { return config_; }
  std::vector<T>& parameters() { return params_; }
  const std::vector<T>& parameters() const { return params_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo& tensor(std::string_view name) const;
  MatrixMap view(const TensorInfo& t) { return MatrixMap(params_.data() + t.offset, t.rows, t.cols); }
  ConstMatrixMap view(const TensorInfo& t) const {
    return ConstMatrixMap(params_.data() + t.offset, t.rows, t.cols);
  }

  /// Sum of token, position, type, task and domain rows. Throws DataError naming
  /// the position of any out-of-range id.
  Matrix embed(const SequenceIds& ids, std::size_t first_position = 0) const;

  /// Mean next-token cross-entropy over target positions. When `grad` is
  /// non-empty the gradient of that loss is added to it.
  T loss(const EncodedExample& example, std::span<T> grad = {}, Rng* dropout_rng = nullptr) const;

  /// Logits of every position (no cache, no dropout).
  Matrix logits(const SequenceIds& ids) const;

  DecodeState<T> start() const;
  /// Appends a block of positions to the cache and returns the logits of its last row.
  RowVector extend(DecodeState<T>& state, const SequenceIds& block) const;

 private:
  struct Layer {
    std::size_t ln1_g, ln1_b, wqkv, bqkv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
  };
  std::size_t add_tensor(const std::string& name, std::size_t rows, std::size_t cols);
  void layout();
  void initialize();
  void check_ids(const SequenceIds& ids, std::size_t first_position) const;

  ConstMatrixMap at(std::size_t idx) const { return view(tensors_[idx]); }

  ModelConfig config_;
  std::vector<TensorInfo> tensors_;
  std::vector<T> params_;
  std::size_t tok_ = 0, pos_ = 0, type_ = 0, task_ = 0, dom_ = 0, lnf_g_ = 0, lnf_b_ = 0, out_ = 0;
  std::vector<Layer> layers_;
};

extern template class Transformer<float>;
extern template class Transformer<double>;

using Model = Transformer<float>;

}  // namespace mixdial
