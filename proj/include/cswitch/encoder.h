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

// Compact self-attention text encoder with a two-class linear head.
//
// Pre-norm transformer blocks over learned token and position embeddings,
// a final layer norm, mean pooling, and softmax over {no switch, switch}.
// Gradients are derived by hand; the scalar type is a template parameter so
// that the same code is checked in double precision and trained in float.

#ifndef CSWITCH_ENCODER_H_
#define CSWITCH_ENCODER_H_

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cswitch/random.h"

namespace cswitch {

enum class Pooling { kMean };

struct EncoderConfig {
  int embedding_dim = 64;
  int layer_count = 2;
  int head_count = 4;
  int ffn_dim = 128;
  int max_sequence_length = 256;
  double dropout = 0.1;
  Pooling pooling = Pooling::kMean;
  // Learned positions; off turns the encoder into a bag of words.
  bool positional = true;

  // Throws Error(kConfig) when the shape is inconsistent.
  void check() const;

  bool operator==(const EncoderConfig&) const = default;
};

// Named contiguous slice of the flat parameter vector.
struct ParamGroup {
  std::string name;
  std::size_t offset = 0;
  int rows = 0;
  int cols = 0;
  bool decay = false;  // weight decay applies to matrices only

  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

inline constexpr int kClassCount = 2;

// Parameter and gradient storage. Aligned allocation fixes where Eigen's
// vectorized reductions split their work, so results do not depend on the
// heap address of the buffer.
template <typename T>
using ParamVector = std::vector<T, Eigen::aligned_allocator<T>>;

template <typename T>
class EncoderT {
 public:
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using RowVector = Eigen::Matrix<T, 1, Eigen::Dynamic>;
  using Probabilities = Eigen::Matrix<T, 1, kClassCount>;

  struct Output {
    Probabilities probabilities;
    Probabilities logits;
    RowVector pooled;
    Matrix tokens;  // final-layer token representations, one row per token
  };

  EncoderT(const EncoderConfig& config, int vocab_size);

  // Fresh random weights; deterministic in seed.
  void initialize(std::uint64_t seed);

  // Evaluation-mode forward pass. ids must be nonempty and no longer than
  // max_sequence_length.
  Output forward(std::span<const int> ids) const;

  // Training step for one example: adds d(loss)/d(params) into grad (same
  // layout as params) and returns the cross-entropy loss. dropout_rng may be
  // null to disable dropout.
  T accumulate_gradient(std::span<const int> ids, int label,
                        ParamVector<T>& grad, Rng* dropout_rng) const;

  // Classifier head applied to an arbitrary pooled vector.
  Probabilities head(const RowVector& pooled) const;

  const EncoderConfig& config() const { return config_; }
  int vocab_size() const { return vocab_size_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }
  ParamVector<T>& params() { return params_; }
  const ParamVector<T>& params() const { return params_; }
  const ParamGroup& group(const std::string& name) const;

 private:
  struct Layer {
    std::size_t ln1_gain, ln1_bias, wq, bq, wk, bk, wv, bv, wo, bo;
    std::size_t ln2_gain, ln2_bias, w1, b1, w2, b2;
  };

  std::size_t add_group(const std::string& name, int rows, int cols, bool decay);

  EncoderConfig config_;
  int vocab_size_;
  std::vector<ParamGroup> groups_;
  ParamVector<T> params_;
  std::size_t token_embedding_ = 0, position_embedding_ = 0;
  std::vector<Layer> layers_;
  std::size_t final_gain_ = 0, final_bias_ = 0, head_weight_ = 0, head_bias_ = 0;
};

extern template class EncoderT<float>;
extern template class EncoderT<double>;

using Encoder = EncoderT<float>;

}  // namespace cswitch

#endif  // CSWITCH_ENCODER_H_
