// Copyright 2026 The cswitch Authors.
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

#include "cswitch/encoder.h"

#include <cmath>

#include "cswitch/error.h"

namespace cswitch {

void EncoderConfig::check() const {
  if (embedding_dim <= 0 || layer_count < 0 || head_count <= 0 || ffn_dim <= 0 ||
      max_sequence_length <= 0) {
    throw_config_error("encoder dimensions must be positive");
  }
  if (embedding_dim % head_count != 0) {
    throw_config_error("embedding_dim must be divisible by head_count");
  }
  if (dropout < 0.0 || dropout >= 1.0) {
    throw_config_error("dropout must lie in [0, 1)");
  }
}

namespace {

constexpr double kLayerNormEpsilon = 1e-5;

template <typename T>
using Matrix = typename EncoderT<T>::Matrix;
template <typename T>
using RowVector = typename EncoderT<T>::RowVector;
template <typename T>
using ConstMap = Eigen::Map<const Matrix<T>>;
template <typename T>
using MutableMap = Eigen::Map<Matrix<T>>;
template <typename T>
using ConstRowMap = Eigen::Map<const RowVector<T>>;
template <typename T>
using MutableRowMap = Eigen::Map<RowVector<T>>;

template <typename T>
struct LayerNormCache {
  Matrix<T> normalized;
  Eigen::Matrix<T, Eigen::Dynamic, 1> inverse_std;
};

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& x, const ConstRowMap<T>& gain,
                     const ConstRowMap<T>& bias, LayerNormCache<T>* cache) {
  const Eigen::Index n = x.rows(), d = x.cols();
  Matrix<T> normalized(n, d);
  Eigen::Matrix<T, Eigen::Dynamic, 1> inverse_std(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const T mean = x.row(i).mean();
    const T var = (x.row(i).array() - mean).square().mean();
    inverse_std(i) = T(1) / std::sqrt(var + T(kLayerNormEpsilon));
    normalized.row(i) = (x.row(i).array() - mean) * inverse_std(i);
  }
  Matrix<T> y = (normalized.array().rowwise() * gain.array()).rowwise() +
                bias.array();
  if (cache) {
    cache->normalized = std::move(normalized);
    cache->inverse_std = std::move(inverse_std);
  }
  return y;
}

template <typename T>
Matrix<T> layer_norm_backward(const Matrix<T>& dy, const LayerNormCache<T>& cache,
                              const ConstRowMap<T>& gain, MutableRowMap<T> dgain,
                              MutableRowMap<T> dbias) {
  dgain += (dy.array() * cache.normalized.array()).colwise().sum().matrix();
  dbias += dy.colwise().sum();
  Matrix<T> dxhat = dy.array().rowwise() * gain.array();
  const T d = static_cast<T>(dy.cols());
  Matrix<T> dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const T mean_dxhat = dxhat.row(i).sum() / d;
    const T mean_dot = dxhat.row(i).dot(cache.normalized.row(i)) / d;
    dx.row(i) = (dxhat.row(i).array() - mean_dxhat -
                 cache.normalized.row(i).array() * mean_dot) *
                cache.inverse_std(i);
  }
  return dx;
}

template <typename T>
T gelu(T u) {
  constexpr T kC = static_cast<T>(0.7978845608028654);  // sqrt(2 / pi)
  return T(0.5) * u * (T(1) + std::tanh(kC * (u + T(0.044715) * u * u * u)));
}

template <typename T>
T gelu_derivative(T u) {
  constexpr T kC = static_cast<T>(0.7978845608028654);
  const T t = std::tanh(kC * (u + T(0.044715) * u * u * u));
  return T(0.5) * (T(1) + t) +
         T(0.5) * u * (T(1) - t * t) * kC * (T(1) + T(3 * 0.044715) * u * u);
}

template <typename T>
void softmax_rows(Matrix<T>& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const T max = s.row(i).maxCoeff();
    s.row(i) = (s.row(i).array() - max).exp();
    s.row(i) /= s.row(i).sum();
  }
}

template <typename T>
Matrix<T> dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  Matrix<T> mask(rows, cols);
  const T keep = static_cast<T>(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng.uniform() < rate ? T(0) : keep;
  }
  return mask;
}

template <typename T>
struct LayerState {
  Matrix<T> input;
  LayerNormCache<T> ln1;
  Matrix<T> attn_in;
  Matrix<T> q, k, v;
  std::vector<Matrix<T>> attention;  // per head, n x n
  Matrix<T> heads;                   // concatenated head outputs
  Matrix<T> mask1;
  Matrix<T> middle;
  LayerNormCache<T> ln2;
  Matrix<T> ffn_in;
  Matrix<T> pre_activation;
  Matrix<T> activation;
  Matrix<T> mask2;
};

}  // namespace

template <typename T>
EncoderT<T>::EncoderT(const EncoderConfig& config, int vocab_size)
    : config_(config), vocab_size_(vocab_size) {
  config_.check();
  if (vocab_size <= 0) throw_config_error("vocabulary must be nonempty");
  const int d = config_.embedding_dim;
  const int f = config_.ffn_dim;
  token_embedding_ = add_group("token_embedding", vocab_size, d, true);
  position_embedding_ =
      add_group("position_embedding", config_.max_sequence_length, d, true);
  for (int l = 0; l < config_.layer_count; ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    Layer layer;
    layer.ln1_gain = add_group(p + "ln1.gain", 1, d, false);
    layer.ln1_bias = add_group(p + "ln1.bias", 1, d, false);
    layer.wq = add_group(p + "attention.query.weight", d, d, true);
    layer.bq = add_group(p + "attention.query.bias", 1, d, false);
    layer.wk = add_group(p + "attention.key.weight", d, d, true);
    layer.bk = add_group(p + "attention.key.bias", 1, d, false);
    layer.wv = add_group(p + "attention.value.weight", d, d, true);
    layer.bv = add_group(p + "attention.value.bias", 1, d, false);
    layer.wo = add_group(p + "attention.output.weight", d, d, true);
    layer.bo = add_group(p + "attention.output.bias", 1, d, false);
    layer.ln2_gain = add_group(p + "ln2.gain", 1, d, false);
    layer.ln2_bias = add_group(p + "ln2.bias", 1, d, false);
    layer.w1 = add_group(p + "ffn.in.weight", d, f, true);
    layer.b1 = add_group(p + "ffn.in.bias", 1, f, false);
    layer.w2 = add_group(p + "ffn.out.weight", f, d, true);
    layer.b2 = add_group(p + "ffn.out.bias", 1, d, false);
    layers_.push_back(layer);
  }
  final_gain_ = add_group("final_ln.gain", 1, d, false);
  final_bias_ = add_group("final_ln.bias", 1, d, false);
  head_weight_ = add_group("head.weight", d, kClassCount, true);
  head_bias_ = add_group("head.bias", 1, kClassCount, false);
  params_.assign(groups_.back().offset + groups_.back().size(), T(0));
}

template <typename T>
std::size_t EncoderT<T>::add_group(const std::string& name, int rows, int cols,
                                   bool decay) {
  const std::size_t offset =
      groups_.empty() ? 0 : groups_.back().offset + groups_.back().size();
  groups_.push_back({name, offset, rows, cols, decay});
  return offset;
}

template <typename T>
const ParamGroup& EncoderT<T>::group(const std::string& name) const {
  for (const auto& g : groups_) {
    if (g.name == name) return g;
  }
  throw_config_error("no parameter group '" + name + "'");
}

template <typename T>
void EncoderT<T>::initialize(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "encoder-init"));
  for (const auto& g : groups_) {
    T* p = params_.data() + g.offset;
    const bool gain = g.name.ends_with(".gain");
    const bool is_bias = g.name.ends_with(".bias");
    double stddev = 0.0;
    if (g.name == "token_embedding" || g.name == "position_embedding") {
      stddev = 0.02;
    } else if (!gain && !is_bias) {
      stddev = std::sqrt(2.0 / (g.rows + g.cols));
      if (g.name.ends_with("output.weight") || g.name.ends_with("ffn.out.weight")) {
        stddev /= std::sqrt(2.0 * std::max(1, config_.layer_count));
      }
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      p[i] = gain ? T(1) : static_cast<T>(stddev * rng.normal());
    }
  }
}

template <typename T>
typename EncoderT<T>::Probabilities EncoderT<T>::head(const RowVector& pooled) const {
  const T* p = params_.data();
  ConstMap<T> w(p + head_weight_, config_.embedding_dim, kClassCount);
  ConstRowMap<T> b(p + head_bias_, kClassCount);
  Probabilities logits = pooled * w + b;
  Probabilities out = (logits.array() - logits.maxCoeff()).exp();
  out /= out.sum();
  return out;
}

template <typename T>
typename EncoderT<T>::Output EncoderT<T>::forward(std::span<const int> ids) const {
  if (ids.empty()) throw_data_error("empty model input");
  if (ids.size() > static_cast<std::size_t>(config_.max_sequence_length)) {
    throw_data_error("input longer than max_sequence_length");
  }
  const int n = static_cast<int>(ids.size());
  const int d = config_.embedding_dim;
  const int heads = config_.head_count;
  const int hw = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(hw));
  const T* p = params_.data();

  Matrix h(n, d);
  ConstMap<T> emb(p + token_embedding_, vocab_size_, d);
  ConstMap<T> pos(p + position_embedding_, config_.max_sequence_length, d);
  for (int i = 0; i < n; ++i) {
    if (ids[i] < 0 || ids[i] >= vocab_size_) throw_data_error("token id out of range");
    h.row(i) = emb.row(ids[i]);
    if (config_.positional) h.row(i) += pos.row(i);
  }
  for (const Layer& L : layers_) {
    const int f = config_.ffn_dim;
    Matrix a = layer_norm<T>(h, ConstRowMap<T>(p + L.ln1_gain, d),
                             ConstRowMap<T>(p + L.ln1_bias, d), nullptr);
    Matrix q = (a * ConstMap<T>(p + L.wq, d, d)).rowwise() + ConstRowMap<T>(p + L.bq, d);
    Matrix k = (a * ConstMap<T>(p + L.wk, d, d)).rowwise() + ConstRowMap<T>(p + L.bk, d);
    Matrix v = (a * ConstMap<T>(p + L.wv, d, d)).rowwise() + ConstRowMap<T>(p + L.bv, d);
    Matrix o(n, d);
    for (int hd = 0; hd < heads; ++hd) {
      Matrix s = (q.middleCols(hd * hw, hw) * k.middleCols(hd * hw, hw).transpose()) * scale;
      softmax_rows<T>(s);
      o.middleCols(hd * hw, hw).noalias() = s * v.middleCols(hd * hw, hw);
    }
    h += (o * ConstMap<T>(p + L.wo, d, d)).rowwise() + ConstRowMap<T>(p + L.bo, d);
    Matrix c = layer_norm<T>(h, ConstRowMap<T>(p + L.ln2_gain, d),
                             ConstRowMap<T>(p + L.ln2_bias, d), nullptr);
    Matrix u = (c * ConstMap<T>(p + L.w1, d, f)).rowwise() + ConstRowMap<T>(p + L.b1, f);
    u = u.unaryExpr([](T x) { return gelu(x); });
    h += (u * ConstMap<T>(p + L.w2, f, d)).rowwise() + ConstRowMap<T>(p + L.b2, d);
  }
  Output out;
  out.tokens = layer_norm<T>(h, ConstRowMap<T>(p + final_gain_, d),
                             ConstRowMap<T>(p + final_bias_, d), nullptr);
  out.pooled = out.tokens.colwise().mean();
  ConstMap<T> w(p + head_weight_, d, kClassCount);
  out.logits = out.pooled * w + ConstRowMap<T>(p + head_bias_, kClassCount);
  out.probabilities = (out.logits.array() - out.logits.maxCoeff()).exp();
  out.probabilities /= out.probabilities.sum();
  return out;
}

template <typename T>
T EncoderT<T>::accumulate_gradient(std::span<const int> ids, int label,
                                   ParamVector<T>& grad, Rng* dropout_rng) const {
  if (ids.empty()) throw_data_error("empty model input");
  if (ids.size() > static_cast<std::size_t>(config_.max_sequence_length)) {
    throw_data_error("input longer than max_sequence_length");
  }
  if (grad.size() != params_.size()) grad.assign(params_.size(), T(0));
  const int n = static_cast<int>(ids.size());
  const int d = config_.embedding_dim;
  const int f = config_.ffn_dim;
  const int heads = config_.head_count;
  const int hw = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(hw));
  const double rate = dropout_rng ? config_.dropout : 0.0;
  const T* p = params_.data();
  T* g = grad.data();

  // Forward with caches.
  Matrix h(n, d);
  ConstMap<T> emb(p + token_embedding_, vocab_size_, d);
  ConstMap<T> pos(p + position_embedding_, config_.max_sequence_length, d);
  for (int i = 0; i < n; ++i) {
    if (ids[i] < 0 || ids[i] >= vocab_size_) throw_data_error("token id out of range");
    h.row(i) = emb.row(ids[i]);
    if (config_.positional) h.row(i) += pos.row(i);
  }
  Matrix mask0;
  if (rate > 0) {
    mask0 = dropout_mask<T>(n, d, rate, *dropout_rng);
    h.array() *= mask0.array();
  }
  std::vector<LayerState<T>> states(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& L = layers_[l];
    LayerState<T>& s = states[l];
    s.input = h;
    s.attn_in = layer_norm<T>(h, ConstRowMap<T>(p + L.ln1_gain, d),
                              ConstRowMap<T>(p + L.ln1_bias, d), &s.ln1);
    s.q = (s.attn_in * ConstMap<T>(p + L.wq, d, d)).rowwise() + ConstRowMap<T>(p + L.bq, d);
    s.k = (s.attn_in * ConstMap<T>(p + L.wk, d, d)).rowwise() + ConstRowMap<T>(p + L.bk, d);
    s.v = (s.attn_in * ConstMap<T>(p + L.wv, d, d)).rowwise() + ConstRowMap<T>(p + L.bv, d);
    s.heads.resize(n, d);
    s.attention.resize(heads);
    for (int hd = 0; hd < heads; ++hd) {
      Matrix& a = s.attention[hd];
      a = (s.q.middleCols(hd * hw, hw) * s.k.middleCols(hd * hw, hw).transpose()) * scale;
      softmax_rows<T>(a);
      s.heads.middleCols(hd * hw, hw).noalias() = a * s.v.middleCols(hd * hw, hw);
    }
    Matrix attn_out =
        (s.heads * ConstMap<T>(p + L.wo, d, d)).rowwise() + ConstRowMap<T>(p + L.bo, d);
    if (rate > 0) {
      s.mask1 = dropout_mask<T>(n, d, rate, *dropout_rng);
      attn_out.array() *= s.mask1.array();
    }
    h += attn_out;
    s.middle = h;
    s.ffn_in = layer_norm<T>(h, ConstRowMap<T>(p + L.ln2_gain, d),
                             ConstRowMap<T>(p + L.ln2_bias, d), &s.ln2);
    s.pre_activation =
        (s.ffn_in * ConstMap<T>(p + L.w1, d, f)).rowwise() + ConstRowMap<T>(p + L.b1, f);
    s.activation = s.pre_activation.unaryExpr([](T x) { return gelu(x); });
    Matrix ffn_out =
        (s.activation * ConstMap<T>(p + L.w2, f, d)).rowwise() + ConstRowMap<T>(p + L.b2, d);
    if (rate > 0) {
      s.mask2 = dropout_mask<T>(n, d, rate, *dropout_rng);
      ffn_out.array() *= s.mask2.array();
    }
    h += ffn_out;
  }
  LayerNormCache<T> final_cache;
  Matrix tokens = layer_norm<T>(h, ConstRowMap<T>(p + final_gain_, d),
                                ConstRowMap<T>(p + final_bias_, d), &final_cache);
  RowVector pooled = tokens.colwise().mean();
  ConstMap<T> w_head(p + head_weight_, d, kClassCount);
  Probabilities logits = pooled * w_head + ConstRowMap<T>(p + head_bias_, kClassCount);
  Probabilities probs = (logits.array() - logits.maxCoeff()).exp();
  const T partition = probs.sum();
  probs /= partition;
  const T loss = -(logits(label) - logits.maxCoeff() - std::log(partition));

  // Backward.
  Probabilities dlogits = probs;
  dlogits(label) -= T(1);
  MutableMap<T>(g + head_weight_, d, kClassCount) += pooled.transpose() * dlogits;
  MutableRowMap<T>(g + head_bias_, kClassCount) += dlogits;
  RowVector dpooled = dlogits * w_head.transpose();
  Matrix dtokens = dpooled.replicate(n, 1) / static_cast<T>(n);
  Matrix dh = layer_norm_backward<T>(dtokens, final_cache,
                                     ConstRowMap<T>(p + final_gain_, d),
                                     MutableRowMap<T>(g + final_gain_, d),
                                     MutableRowMap<T>(g + final_bias_, d));
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& L = layers_[li];
    const LayerState<T>& s = states[li];
    // Feed-forward branch.
    Matrix dffn = dh;
    if (rate > 0) dffn.array() *= s.mask2.array();
    MutableMap<T>(g + L.w2, f, d).noalias() += s.activation.transpose() * dffn;
    MutableRowMap<T>(g + L.b2, d) += dffn.colwise().sum();
    Matrix dact = dffn * ConstMap<T>(p + L.w2, f, d).transpose();
    Matrix dpre = dact.array() *
                  s.pre_activation.unaryExpr([](T x) { return gelu_derivative(x); }).array();
    MutableMap<T>(g + L.w1, d, f).noalias() += s.ffn_in.transpose() * dpre;
    MutableRowMap<T>(g + L.b1, f) += dpre.colwise().sum();
    Matrix dffn_in = dpre * ConstMap<T>(p + L.w1, d, f).transpose();
    dh += layer_norm_backward<T>(dffn_in, s.ln2, ConstRowMap<T>(p + L.ln2_gain, d),
                                 MutableRowMap<T>(g + L.ln2_gain, d),
                                 MutableRowMap<T>(g + L.ln2_bias, d));
    // Attention branch.
    Matrix dattn = dh;
    if (rate > 0) dattn.array() *= s.mask1.array();
    MutableMap<T>(g + L.wo, d, d).noalias() += s.heads.transpose() * dattn;
    MutableRowMap<T>(g + L.bo, d) += dattn.colwise().sum();
    Matrix dheads = dattn * ConstMap<T>(p + L.wo, d, d).transpose();
    Matrix dq(n, d), dk(n, d), dv(n, d);
    for (int hd = 0; hd < heads; ++hd) {
      const Matrix& a = s.attention[hd];
      auto dout = dheads.middleCols(hd * hw, hw);
      Matrix da = dout * s.v.middleCols(hd * hw, hw).transpose();
      dv.middleCols(hd * hw, hw).noalias() = a.transpose() * dout;
      Eigen::Matrix<T, Eigen::Dynamic, 1> row_dot = (da.array() * a.array()).rowwise().sum();
      Matrix ds = (a.array() * (da.array().colwise() - row_dot.array())) * scale;
      dq.middleCols(hd * hw, hw).noalias() = ds * s.k.middleCols(hd * hw, hw);
      dk.middleCols(hd * hw, hw).noalias() = ds.transpose() * s.q.middleCols(hd * hw, hw);
    }
    MutableMap<T>(g + L.wq, d, d).noalias() += s.attn_in.transpose() * dq;
    MutableMap<T>(g + L.wk, d, d).noalias() += s.attn_in.transpose() * dk;
    MutableMap<T>(g + L.wv, d, d).noalias() += s.attn_in.transpose() * dv;
    MutableRowMap<T>(g + L.bq, d) += dq.colwise().sum();
    MutableRowMap<T>(g + L.bk, d) += dk.colwise().sum();
    MutableRowMap<T>(g + L.bv, d) += dv.colwise().sum();
    Matrix dattn_in = dq * ConstMap<T>(p + L.wq, d, d).transpose();
    dattn_in.noalias() += dk * ConstMap<T>(p + L.wk, d, d).transpose();
    dattn_in.noalias() += dv * ConstMap<T>(p + L.wv, d, d).transpose();
    dh += layer_norm_backward<T>(dattn_in, s.ln1, ConstRowMap<T>(p + L.ln1_gain, d),
                                 MutableRowMap<T>(g + L.ln1_gain, d),
                                 MutableRowMap<T>(g + L.ln1_bias, d));
  }
  if (rate > 0) dh.array() *= mask0.array();
  MutableMap<T> demb(g + token_embedding_, vocab_size_, d);
  MutableMap<T> dpos(g + position_embedding_, config_.max_sequence_length, d);
  for (int i = 0; i < n; ++i) {
    demb.row(ids[i]) += dh.row(i);
    if (config_.positional) dpos.row(i) += dh.row(i);
  }
  return loss;
}

template class EncoderT<float>;
template class EncoderT<double>;

}  // namespace cswitch
