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

#include "mixdial/model.hpp"

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "mixdial/errors.hpp"

namespace mixdial {

using nlohmann::json;

std::vector<std::string> ModelConfig::problems() const {
  std::vector<std::string> out;
  auto positive = [&](const char* name, int v) {
    if (v <= 0) out.push_back(std::string(name) + " must be positive");
  };
  positive("vocab_size", vocab_size);
  positive("width", width);
  positive("layers", layers);
  positive("heads", heads);
  positive("ff_width", ff_width);
  positive("max_positions", max_positions);
  if (width > 0 && heads > 0 && width % heads != 0)
    out.push_back("width " + std::to_string(width) + " is not divisible by heads " + std::to_string(heads));
  if (type_ids < 1) out.push_back("type_ids must include the unknown id");
  if (task_ids < 1) out.push_back("task_ids must include the unknown id");
  if (domain_ids < 1) out.push_back("domain_ids must include the unknown id");
  if (!(dropout >= 0.0 && dropout < 1.0)) out.push_back("dropout must be in [0, 1)");
  return out;
}

void ModelConfig::validate() const {
  auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid model config:";
  for (const auto& s : p) msg += " " + s + ";";
  msg.pop_back();
  throw ConfigError(msg);
}

json ModelConfig::to_json() const {
  return {{"vocab_size", vocab_size}, {"width", width},         {"layers", layers},
          {"heads", heads},           {"ff_width", ff_width},   {"max_positions", max_positions},
          {"type_ids", type_ids},     {"task_ids", task_ids},   {"domain_ids", domain_ids},
          {"dropout", dropout},       {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("model config must be an object");
  ModelConfig c;
  try {
    c.vocab_size = doc.value("vocab_size", c.vocab_size);
    c.width = doc.value("width", c.width);
    c.layers = doc.value("layers", c.layers);
    c.heads = doc.value("heads", c.heads);
    c.ff_width = doc.value("ff_width", c.ff_width);
    c.max_positions = doc.value("max_positions", c.max_positions);
    c.type_ids = doc.value("type_ids", c.type_ids);
    c.task_ids = doc.value("task_ids", c.task_ids);
    c.domain_ids = doc.value("domain_ids", c.domain_ids);
    c.dropout = doc.value("dropout", c.dropout);
    c.seed = doc.value("seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  return c;
}

std::size_t parameter_count(const ModelConfig& c) {
  const std::size_t d = static_cast<std::size_t>(c.width);
  const std::size_t v = static_cast<std::size_t>(c.vocab_size);
  const std::size_t ff = static_cast<std::size_t>(c.ff_width);
  const std::size_t embeddings = (v + static_cast<std::size_t>(c.max_positions + c.type_ids + c.task_ids + c.domain_ids)) * d;
  const std::size_t attention = 2 * d + 3 * d * d + 3 * d + d * d + d;
  const std::size_t feed_forward = 2 * d + d * ff + ff + ff * d + d;
  return embeddings + static_cast<std::size_t>(c.layers) * (attention + feed_forward) + 2 * d + d * v;
}

namespace {

constexpr double kLnEps = 1e-5;

template <class M, class T>
void layer_norm(const M& x, const T* gain, const T* bias, M& xhat, std::vector<T>& rstd, M& y) {
  const Eigen::Index n = x.rows(), d = x.cols();
  xhat.resize(n, d);
  y.resize(n, d);
  rstd.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mean = x.row(i).mean();
    const T var = (x.row(i).array() - mean).square().mean();
    const T r = T(1) / std::sqrt(var + T(kLnEps));
    rstd[static_cast<std::size_t>(i)] = r;
    for (Eigen::Index j = 0; j < d; ++j) {
      const T h = (x(i, j) - mean) * r;
      xhat(i, j) = h;
      y(i, j) = h * gain[j] + bias[j];
    }
  }
}

// dx from dy; accumulates gain/bias gradients when non-null.
template <class M, class T>
M layer_norm_backward(const M& dy, const M& xhat, const std::vector<T>& rstd, const T* gain, T* dgain, T* dbias) {
  const Eigen::Index n = dy.rows(), d = dy.cols();
  M dx(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    T mean_dh = 0, mean_dhx = 0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const T dh = dy(i, j) * gain[j];
      mean_dh += dh;
      mean_dhx += dh * xhat(i, j);
      if (dgain) dgain[j] += dy(i, j) * xhat(i, j);
      if (dbias) dbias[j] += dy(i, j);
    }
    mean_dh /= T(d);
    mean_dhx /= T(d);
    const T r = rstd[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < d; ++j)
      dx(i, j) = r * (dy(i, j) * gain[j] - mean_dh - xhat(i, j) * mean_dhx);
  }
  return dx;
}

template <class T>
T gelu(T u) {
  constexpr T c = T(0.7978845608028654);  // sqrt(2 / pi)
  return T(0.5) * u * (T(1) + std::tanh(c * (u + T(0.044715) * u * u * u)));
}

template <class T>
T gelu_grad(T u) {
  constexpr T c = T(0.7978845608028654);
  const T t = std::tanh(c * (u + T(0.044715) * u * u * u));
  return T(0.5) * (T(1) + t) + T(0.5) * u * (T(1) - t * t) * c * (T(1) + T(3) * T(0.044715) * u * u);
}

// Adds the column sums of m to out, row by row, so the order of additions does
// not depend on how the buffers happen to be aligned.
template <class Out, class M>
void add_column_sums(Out&& out, const M& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) out += m.row(r);
}

// Row softmax where row i sees columns 0..offset+i; later columns become 0.
template <class M>
void causal_softmax(M& s, std::size_t offset) {
  using T = typename M::Scalar;
  const Eigen::Index n = s.rows(), m = s.cols();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index valid = std::min<Eigen::Index>(m, static_cast<Eigen::Index>(offset) + i + 1);
    T mx = -std::numeric_limits<T>::infinity();
    for (Eigen::Index j = 0; j < valid; ++j) mx = std::max(mx, s(i, j));
    T sum = 0;
    for (Eigen::Index j = 0; j < valid; ++j) {
      s(i, j) = std::exp(s(i, j) - mx);
      sum += s(i, j);
    }
    for (Eigen::Index j = 0; j < valid; ++j) s(i, j) /= sum;
    for (Eigen::Index j = valid; j < m; ++j) s(i, j) = 0;
  }
}

template <class M>
M dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng* rng) {
  using T = typename M::Scalar;
  M mask(rows, cols);
  const T keep = T(1.0 / (1.0 - p));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) mask(i, j) = rng->uniform() < p ? T(0) : keep;
  return mask;
}

}  // namespace

template <class T>
Transformer<T>::Transformer(const ModelConfig& config) : config_(config) {
  config_.validate();
  layout();
  initialize();
}

template <class T>
Transformer<T>::Transformer(const ModelConfig& config, std::vector<T> parameters) : config_(config) {
  config_.validate();
  layout();
  if (parameters.size() != params_.size())
    throw DataError("parameter count " + std::to_string(parameters.size()) + " does not match config (" +
                    std::to_string(params_.size()) + ")");
  params_ = std::move(parameters);
}

template <class T>
std::size_t Transformer<T>::add_tensor(const std::string& name, std::size_t rows, std::size_t cols) {
  const std::size_t offset = tensors_.empty() ? 0 : tensors_.back().offset + tensors_.back().size();
  tensors_.push_back({name, rows, cols, offset});
  return tensors_.size() - 1;
}

template <class T>
void Transformer<T>::layout() {
  const auto d = static_cast<std::size_t>(config_.width);
  const auto ff = static_cast<std::size_t>(config_.ff_width);
  const auto v = static_cast<std::size_t>(config_.vocab_size);
  tok_ = add_tensor("embed.token", v, d);
  pos_ = add_tensor("embed.position", static_cast<std::size_t>(config_.max_positions), d);
  type_ = add_tensor("embed.type", static_cast<std::size_t>(config_.type_ids), d);
  task_ = add_tensor("embed.task", static_cast<std::size_t>(config_.task_ids), d);
  dom_ = add_tensor("embed.domain", static_cast<std::size_t>(config_.domain_ids), d);
  for (int l = 0; l < config_.layers; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    Layer L;
    L.ln1_g = add_tensor(p + "ln1.gain", 1, d);
    L.ln1_b = add_tensor(p + "ln1.bias", 1, d);
    L.wqkv = add_tensor(p + "attn.wqkv", d, 3 * d);
    L.bqkv = add_tensor(p + "attn.bqkv", 1, 3 * d);
    L.wo = add_tensor(p + "attn.wo", d, d);
    L.bo = add_tensor(p + "attn.bo", 1, d);
    L.ln2_g = add_tensor(p + "ln2.gain", 1, d);
    L.ln2_b = add_tensor(p + "ln2.bias", 1, d);
    L.w1 = add_tensor(p + "ff.w1", d, ff);
    L.b1 = add_tensor(p + "ff.b1", 1, ff);
    L.w2 = add_tensor(p + "ff.w2", ff, d);
    L.b2 = add_tensor(p + "ff.b2", 1, d);
    layers_.push_back(L);
  }
  lnf_g_ = add_tensor("final_ln.gain", 1, d);
  lnf_b_ = add_tensor("final_ln.bias", 1, d);
  out_ = add_tensor("output", d, v);
  params_.assign(tensors_.back().offset + tensors_.back().size(), T(0));
}

template <class T>
void Transformer<T>::initialize() {
  Rng rng(config_.seed);
  const double base = 0.02;
  const double residual = base / std::sqrt(2.0 * config_.layers);
  for (const auto& t : tensors_) {
    T* p = params_.data() + t.offset;
    const bool gain = t.name.ends_with(".gain");
    const bool bias = t.name.ends_with(".bias") || t.name.ends_with(".bqkv") || t.name.ends_with(".bo") ||
                      t.name.ends_with(".b1") || t.name.ends_with(".b2");
    const double scale = t.name.ends_with(".wo") || t.name.ends_with(".w2") ? residual : base;
    for (std::size_t i = 0; i < t.size(); ++i) p[i] = gain ? T(1) : bias ? T(0) : T(rng.normal() * scale);
  }
}

template <class T>
const TensorInfo& Transformer<T>::tensor(std::string_view name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return t;
  throw DataError("no tensor named '" + std::string(name) + "'");
}

template <class T>
void Transformer<T>::check_ids(const SequenceIds& ids, std::size_t first_position) const {
  const std::size_t n = ids.size();
  if (ids.types.size() != n || ids.tasks.size() != n || ids.domains.size() != n)
    throw DataError("embed: id sequences differ in length");
  auto check = [](int v, int count, const char* what, std::size_t pos) {
    if (v < 0 || v >= count)
      throw DataError(std::string("embed: ") + what + " id " + std::to_string(v) + " out of range at position " +
                      std::to_string(pos));
  };
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t pos = first_position + i;
    if (pos >= static_cast<std::size_t>(config_.max_positions))
      throw DataError("embed: position " + std::to_string(pos) + " exceeds max_positions " +
                      std::to_string(config_.max_positions));
    check(ids.tokens[i], config_.vocab_size, "token", pos);
    check(ids.types[i], config_.type_ids, "type", pos);
    check(ids.tasks[i], config_.task_ids, "task", pos);
    check(ids.domains[i], config_.domain_ids, "domain", pos);
  }
}

template <class T>
typename Transformer<T>::Matrix Transformer<T>::embed(const SequenceIds& ids, std::size_t first) const {
  check_ids(ids, first);
  const auto n = static_cast<Eigen::Index>(ids.size());
  Matrix x(n, config_.width);
  auto tok = at(tok_), pos = at(pos_), ty = at(type_), ta = at(task_), dm = at(dom_);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    x.row(i) = tok.row(ids.tokens[k]) + pos.row(static_cast<Eigen::Index>(first) + i) + ty.row(ids.types[k]) +
               ta.row(ids.tasks[k]) + dm.row(ids.domains[k]);
  }
  return x;
}

template <class T>
T Transformer<T>::loss(const EncodedExample& ex, std::span<T> grad, Rng* rng) const {
  if (ex.size() < 2 || ex.prompt_length == 0 || ex.prompt_length >= ex.size())
    throw DataError("loss: example needs a non-empty prompt and target");
  if (!grad.empty() && grad.size() != params_.size()) throw DataError("loss: gradient buffer has wrong size");
  const bool backward = !grad.empty();
  const double p_drop = rng ? config_.dropout : 0.0;
  const bool drop = p_drop > 0.0;

  SequenceIds in;
  const std::size_t n = ex.size() - 1;
  in.tokens.assign(ex.tokens.begin(), ex.tokens.begin() + static_cast<std::ptrdiff_t>(n));
  in.types.assign(ex.types.begin(), ex.types.begin() + static_cast<std::ptrdiff_t>(n));
  in.tasks.assign(ex.tasks.begin(), ex.tasks.begin() + static_cast<std::ptrdiff_t>(n));
  in.domains.assign(ex.domains.begin(), ex.domains.begin() + static_cast<std::ptrdiff_t>(n));
  for (int t : ex.tokens)
    if (t < 0 || t >= config_.vocab_size) throw DataError("loss: target token out of range");

  const Eigen::Index N = static_cast<Eigen::Index>(n);
  const Eigen::Index d = config_.width;
  const Eigen::Index H = config_.heads;
  const Eigen::Index dh = d / H;
  const T scale = T(1) / std::sqrt(T(dh));

  struct Cache {
    Matrix x_in, xhat1, h1, qkv, att, x_mid, xhat2, h2, u, g, mask_a, mask_f;
    std::vector<T> rstd1, rstd2;
    std::vector<Matrix> probs;
  };
  std::vector<Cache> caches(layers_.size());

  Matrix x = embed(in);
  Matrix mask_e;
  if (drop) {
    mask_e = dropout_mask<Matrix>(N, d, p_drop, rng);
    x = x.cwiseProduct(mask_e);
  }

  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& L = layers_[l];
    Cache& c = caches[l];
    c.x_in = x;
    layer_norm(x, params_.data() + tensors_[L.ln1_g].offset, params_.data() + tensors_[L.ln1_b].offset, c.xhat1,
               c.rstd1, c.h1);
    c.qkv.noalias() = c.h1 * at(L.wqkv);
    c.qkv.rowwise() += at(L.bqkv).row(0);
    c.att.resize(N, d);
    c.probs.resize(static_cast<std::size_t>(H));
    for (Eigen::Index h = 0; h < H; ++h) {
      Matrix& P = c.probs[static_cast<std::size_t>(h)];
      P.noalias() = c.qkv.middleCols(h * dh, dh) * c.qkv.middleCols(d + h * dh, dh).transpose();
      P *= scale;
      causal_softmax(P, 0);
      c.att.middleCols(h * dh, dh).noalias() = P * c.qkv.middleCols(2 * d + h * dh, dh);
    }
    Matrix a;
    a.noalias() = c.att * at(L.wo);
    a.rowwise() += at(L.bo).row(0);
    if (drop) {
      c.mask_a = dropout_mask<Matrix>(N, d, p_drop, rng);
      a = a.cwiseProduct(c.mask_a);
    }
    c.x_mid = x + a;
    layer_norm(c.x_mid, params_.data() + tensors_[L.ln2_g].offset, params_.data() + tensors_[L.ln2_b].offset,
               c.xhat2, c.rstd2, c.h2);
    c.u.noalias() = c.h2 * at(L.w1);
    c.u.rowwise() += at(L.b1).row(0);
    c.g = c.u.unaryExpr([](T v) { return gelu(v); });
    Matrix f;
    f.noalias() = c.g * at(L.w2);
    f.rowwise() += at(L.b2).row(0);
    if (drop) {
      c.mask_f = dropout_mask<Matrix>(N, d, p_drop, rng);
      f = f.cwiseProduct(c.mask_f);
    }
    x = c.x_mid + f;
  }

  Matrix xhatf, hf;
  std::vector<T> rstdf;
  layer_norm(x, params_.data() + tensors_[lnf_g_].offset, params_.data() + tensors_[lnf_b_].offset, xhatf, rstdf,
             hf);
  const Eigen::Index first = static_cast<Eigen::Index>(ex.prompt_length) - 1;
  const Eigen::Index m = N - first;
  Matrix z;
  z.noalias() = hf.bottomRows(m) * at(out_);
  T total = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const T mx = z.row(i).maxCoeff();
    z.row(i).array() = (z.row(i).array() - mx).exp();
    const T sum = z.row(i).sum();
    z.row(i) /= sum;
    const int target = ex.tokens[static_cast<std::size_t>(first + i + 1)];
    total -= std::log(std::max(z(i, target), std::numeric_limits<T>::min()));
  }
  const T loss = total / T(m);
  if (!backward) return loss;

  auto gview = [&](std::size_t idx) {
    const auto& t = tensors_[idx];
    return MatrixMap(grad.data() + t.offset, static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
  };
  auto gptr = [&](std::size_t idx) { return grad.data() + tensors_[idx].offset; };
  auto gain_ptr = [&](std::size_t idx) { return params_.data() + tensors_[idx].offset; };

  // z now holds probabilities; turn it into dL/dlogits.
  for (Eigen::Index i = 0; i < m; ++i) z(i, ex.tokens[static_cast<std::size_t>(first + i + 1)]) -= T(1);
  z /= T(m);
  gview(out_).noalias() += hf.bottomRows(m).transpose() * z;
  Matrix dhf = Matrix::Zero(N, d);
  dhf.bottomRows(m).noalias() = z * at(out_).transpose();
  Matrix dx = layer_norm_backward(dhf, xhatf, rstdf, gain_ptr(lnf_g_), gptr(lnf_g_), gptr(lnf_b_));

  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& L = layers_[li];
    Cache& c = caches[li];
    Matrix df = drop ? Matrix(dx.cwiseProduct(c.mask_f)) : dx;
    gview(L.w2).noalias() += c.g.transpose() * df;
    add_column_sums(gview(L.b2).row(0), df);
    Matrix du;
    du.noalias() = df * at(L.w2).transpose();
    du = du.cwiseProduct(c.u.unaryExpr([](T v) { return gelu_grad(v); }));
    gview(L.w1).noalias() += c.h2.transpose() * du;
    add_column_sums(gview(L.b1).row(0), du);
    Matrix dh2;
    dh2.noalias() = du * at(L.w1).transpose();
    Matrix dmid = dx + layer_norm_backward(dh2, c.xhat2, c.rstd2, gain_ptr(L.ln2_g), gptr(L.ln2_g), gptr(L.ln2_b));

    Matrix da = drop ? Matrix(dmid.cwiseProduct(c.mask_a)) : dmid;
    gview(L.wo).noalias() += c.att.transpose() * da;
    add_column_sums(gview(L.bo).row(0), da);
    Matrix datt;
    datt.noalias() = da * at(L.wo).transpose();
    Matrix dqkv(N, 3 * d);
    for (Eigen::Index h = 0; h < H; ++h) {
      const Matrix& P = c.probs[static_cast<std::size_t>(h)];
      auto q = c.qkv.middleCols(h * dh, dh);
      auto k = c.qkv.middleCols(d + h * dh, dh);
      auto v = c.qkv.middleCols(2 * d + h * dh, dh);
      auto dO = datt.middleCols(h * dh, dh);
      dqkv.middleCols(2 * d + h * dh, dh).noalias() = P.transpose() * dO;
      Matrix dP;
      dP.noalias() = dO * v.transpose();
      Matrix dS = P.cwiseProduct(dP);
      const Eigen::Matrix<T, Eigen::Dynamic, 1> rows = dS.rowwise().sum();
      dS.noalias() -= P.cwiseProduct(rows.replicate(1, N));
      dS *= scale;
      dqkv.middleCols(h * dh, dh).noalias() = dS * k;
      dqkv.middleCols(d + h * dh, dh).noalias() = dS.transpose() * q;
    }
    gview(L.wqkv).noalias() += c.h1.transpose() * dqkv;
    add_column_sums(gview(L.bqkv).row(0), dqkv);
    Matrix dh1;
    dh1.noalias() = dqkv * at(L.wqkv).transpose();
    dx = dmid + layer_norm_backward(dh1, c.xhat1, c.rstd1, gain_ptr(L.ln1_g), gptr(L.ln1_g), gptr(L.ln1_b));
  }

  if (drop) dx = dx.cwiseProduct(mask_e);
  auto gtok = gview(tok_), gpos = gview(pos_), gty = gview(type_), gta = gview(task_), gdm = gview(dom_);
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto k = static_cast<std::size_t>(i);
    gtok.row(in.tokens[k]) += dx.row(i);
    gpos.row(i) += dx.row(i);
    gty.row(in.types[k]) += dx.row(i);
    gta.row(in.tasks[k]) += dx.row(i);
    gdm.row(in.domains[k]) += dx.row(i);
  }
  return loss;
}

template <class T>
DecodeState<T> Transformer<T>::start() const {
  DecodeState<T> s;
  s.keys.assign(layers_.size(), Matrix(0, config_.width));
  s.values.assign(layers_.size(), Matrix(0, config_.width));
  return s;
}

template <class T>
typename Transformer<T>::RowVector Transformer<T>::extend(DecodeState<T>& state, const SequenceIds& block) const {
  if (block.size() == 0) throw DataError("extend: empty block");
  const std::size_t offset = state.length;
  Matrix x = embed(block, offset);
  const Eigen::Index k = x.rows();
  const Eigen::Index d = config_.width;
  const Eigen::Index H = config_.heads;
  const Eigen::Index dh = d / H;
  const T scale = T(1) / std::sqrt(T(dh));
  const Eigen::Index total = static_cast<Eigen::Index>(offset) + k;
  Matrix xhat, h, qkv, att(k, d), s, a, f, u;
  std::vector<T> rstd;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& L = layers_[l];
    layer_norm(x, params_.data() + tensors_[L.ln1_g].offset, params_.data() + tensors_[L.ln1_b].offset, xhat, rstd, h);
    qkv.noalias() = h * at(L.wqkv);
    qkv.rowwise() += at(L.bqkv).row(0);
    Matrix& K = state.keys[l];
    Matrix& V = state.values[l];
    K.conservativeResize(total, d);
    V.conservativeResize(total, d);
    K.bottomRows(k) = qkv.middleCols(d, d);
    V.bottomRows(k) = qkv.middleCols(2 * d, d);
    for (Eigen::Index hd = 0; hd < H; ++hd) {
      s.noalias() = qkv.middleCols(hd * dh, dh) * K.middleCols(hd * dh, dh).transpose();
      s *= scale;
      causal_softmax(s, offset);
      att.middleCols(hd * dh, dh).noalias() = s * V.middleCols(hd * dh, dh);
    }
    a.noalias() = att * at(L.wo);
    a.rowwise() += at(L.bo).row(0);
    x += a;
    layer_norm(x, params_.data() + tensors_[L.ln2_g].offset, params_.data() + tensors_[L.ln2_b].offset, xhat, rstd, h);
    u.noalias() = h * at(L.w1);
    u.rowwise() += at(L.b1).row(0);
    u = u.unaryExpr([](T v) { return gelu(v); });
    f.noalias() = u * at(L.w2);
    f.rowwise() += at(L.b2).row(0);
    x += f;
  }
  state.length = static_cast<std::size_t>(total);
  Matrix last = x.bottomRows(1);
  layer_norm(last, params_.data() + tensors_[lnf_g_].offset, params_.data() + tensors_[lnf_b_].offset, xhat, rstd, h);
  RowVector logits = h * at(out_);
  return logits;
}

template <class T>
typename Transformer<T>::Matrix Transformer<T>::logits(const SequenceIds& ids) const {
  const std::size_t n = ids.size();
  Matrix out(static_cast<Eigen::Index>(n), config_.vocab_size);
  DecodeState<T> state = start();
  // One position at a time keeps this independent of the batched training path.
  for (std::size_t i = 0; i < n; ++i) {
    SequenceIds one;
    one.tokens = {ids.tokens[i]};
    one.types = {ids.types[i]};
    one.tasks = {ids.tasks[i]};
    one.domains = {ids.domains[i]};
    out.row(static_cast<Eigen::Index>(i)) = extend(state, one);
  }
  return out;
}

template class Transformer<float>;
template class Transformer<double>;

}  // namespace mixdial
