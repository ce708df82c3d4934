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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cswitch/error.h"

namespace cswitch {
namespace {

EncoderConfig SmallConfig() {
  EncoderConfig config;
  config.embedding_dim = 8;
  config.layer_count = 2;
  config.head_count = 2;
  config.ffn_dim = 12;
  config.max_sequence_length = 16;
  config.dropout = 0.0;
  return config;
}

double Loss(const EncoderT<double>& model, const std::vector<int>& ids, int label) {
  return -std::log(model.forward(ids).probabilities(label));
}

TEST(EncoderTest, GradientMatchesFiniteDifferences) {
  EncoderT<double> model(SmallConfig(), 11);
  model.initialize(7);
  // Perturb gains and biases so their gradients are not trivially aligned.
  Rng rng(3);
  for (double& p : model.params()) p += 0.05 * rng.normal();
  const std::vector<int> ids = {2, 5, 7, 1, 9, 5, 3, 10, 4, 6};
  for (int label = 0; label < 2; ++label) {
    ParamVector<double> grad;
    const double loss = model.accumulate_gradient(ids, label, grad, nullptr);
    EXPECT_NEAR(loss, Loss(model, ids, label), 1e-12);
    constexpr double kStep = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < model.params().size(); ++i) {
      const double saved = model.params()[i];
      model.params()[i] = saved + kStep;
      const double up = Loss(model, ids, label);
      model.params()[i] = saved - kStep;
      const double down = Loss(model, ids, label);
      model.params()[i] = saved;
      const double numeric = (up - down) / (2 * kStep);
      const double err = std::abs(numeric - grad[i]) /
                         std::max(1e-3, std::abs(numeric) + std::abs(grad[i]));
      worst = std::max(worst, err);
    }
    EXPECT_LT(worst, 1e-5) << "label " << label;
  }
}

TEST(EncoderTest, GradientAccumulates) {
  EncoderT<double> model(SmallConfig(), 11);
  model.initialize(1);
  const std::vector<int> ids = {3, 4, 5};
  ParamVector<double> once, twice;
  model.accumulate_gradient(ids, 1, once, nullptr);
  model.accumulate_gradient(ids, 1, twice, nullptr);
  model.accumulate_gradient(ids, 1, twice, nullptr);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(2 * once[i], twice[i], 1e-12);
}

TEST(EncoderTest, InitializationIsDeterministic) {
  Encoder a(SmallConfig(), 20), b(SmallConfig(), 20), c(SmallConfig(), 20);
  a.initialize(42);
  b.initialize(42);
  c.initialize(43);
  EXPECT_EQ(a.params(), b.params());
  EXPECT_NE(a.params(), c.params());
}

TEST(EncoderTest, HeadMatchesForwardOnPooled) {
  EncoderT<double> model(SmallConfig(), 11);
  model.initialize(5);
  const std::vector<int> ids = {2, 3, 4, 5};
  const auto out = model.forward(ids);
  EXPECT_NEAR(out.probabilities.sum(), 1.0, 1e-12);
  const auto again = model.head(out.pooled);
  EXPECT_NEAR(again(0), out.probabilities(0), 1e-12);
  EXPECT_NEAR((out.tokens.colwise().mean() - out.pooled).norm(), 0.0, 1e-12);
}

TEST(EncoderTest, RejectsBadShapes) {
  EncoderConfig config = SmallConfig();
  config.head_count = 3;
  EXPECT_THROW(Encoder(config, 10), Error);
  EncoderT<double> model(SmallConfig(), 11);
  EXPECT_THROW(model.forward(std::vector<int>{}), Error);
  EXPECT_THROW(model.forward(std::vector<int>(17, 2)), Error);
  EXPECT_THROW(model.forward(std::vector<int>{11}), Error);
}

TEST(EncoderTest, DropoutChangesOnlyTrainingLoss) {
  EncoderConfig config = SmallConfig();
  config.dropout = 0.3;
  EncoderT<double> model(config, 11);
  model.initialize(2);
  const std::vector<int> ids = {2, 3, 4, 5};
  ParamVector<double> grad;
  Rng rng(9);
  const double train_loss = model.accumulate_gradient(ids, 0, grad, &rng);
  const double eval_loss = model.accumulate_gradient(ids, 0, grad, nullptr);
  EXPECT_NEAR(eval_loss, Loss(model, ids, 0), 1e-12);
  EXPECT_NE(train_loss, eval_loss);
}

}  // namespace
}  // namespace cswitch
