// Copyright 2026 The LaFee Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include <gtest/gtest.h>

#include "lafee/lstm.hpp"
#include "lafee/train.hpp"
#include "test_util.hpp"

namespace lafee {
namespace {

using lafee::testing::random_sequence;
using lafee::testing::randomize;

// Scalar cell, all weights 1, biases 0, zero carry, input 1. Frozen from an
// independent evaluation: C = sigmoid(1) * tanh(1), H = sigmoid(1) * tanh(C).
constexpr double kCell = 0.556769941145940;
constexpr double kHidden = 0.369606352935706;

TEST(ScalarOracle, FrozenConstantsMatchLibm) {
  const double s = 1.0 / (1.0 + std::exp(-1.0));
  EXPECT_NEAR(s * std::tanh(1.0), kCell, 1e-15);
  EXPECT_NEAR(s * std::tanh(kCell), kHidden, 1e-15);
}

TEST(LstmStep, ScalarHandEvaluation) {
  LstmDims d{1, 1};
  auto p = LstmParams::zeros(d);
  p.visit([](std::string_view name, TensorMap t) {
    if (!name.ends_with("_b")) t.setOnes();
  });
  const auto t = lstm_step(p, LstmCarry::zeros(d), Eigen::VectorXd::Ones(1));
  EXPECT_NEAR(t.forget(0), 0.731058578630005, 1e-14);
  EXPECT_NEAR(t.cand(0), 0.761594155955765, 1e-14);
  EXPECT_NEAR(t.after.c(0), kCell, 1e-14);
  EXPECT_NEAR(t.after.h(0), kHidden, 1e-14);
  EXPECT_NEAR(t.prediction, kHidden, 1e-14);
}

TEST(LstmStep, ZeroNetwork) {
  const LstmDims d;
  const auto t = lstm_step(LstmParams::zeros(d), LstmCarry::zeros(d), Eigen::VectorXd::Ones(d.d_input));
  EXPECT_TRUE(t.after.c.isZero(0.0));
  EXPECT_TRUE(t.after.h.isZero(0.0));
  EXPECT_EQ(t.prediction, 0.0);
}

TEST(LstmStep, SaturatedGatesKeepMemory) {
  LstmDims d{3, 2};
  std::mt19937_64 rng(1);
  auto p = LstmParams::zeros(d);
  randomize(p, rng, 0.5);
  p.forget_b.setConstant(1e3);
  p.input_b.setConstant(-1e3);
  LstmCarry prev{Eigen::VectorXd::Constant(2, 0.4), Eigen::VectorXd::Constant(2, -0.7)};
  const auto t = lstm_step(p, prev, Eigen::VectorXd::Ones(3));
  EXPECT_NEAR((t.after.c - prev.c).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(LstmStep, InputExcludesInterval) {
  const LstmDims d;
  EXPECT_EQ(d.d_input, 27);
  std::mt19937_64 rng(2);
  auto s = lafee::testing::random_step(rng, 8, 19, IntervalKind::InGame);
  EXPECT_EQ(lstm_input(s).size(), 27);
  const auto before = lstm_input(s);
  s.target = 123.0;
  EXPECT_EQ(lstm_input(s), before);
}

TEST(LstmProperty, GateRanges) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    LstmDims d{static_cast<Eigen::Index>(1 + rng() % 6) + 1, static_cast<Eigen::Index>(1 + rng() % 5)};
    auto p = LstmParams::zeros(d);
    randomize(p, rng, 2.0);
    const auto seq = random_sequence(rng, 10, 1, d.d_input - 1);
    for (const auto& t : lstm_forward(p, seq)) {
      for (const auto* g : {&t.forget, &t.input, &t.output}) {
        EXPECT_TRUE((g->array() > 0.0).all() && (g->array() < 1.0).all());
      }
      EXPECT_TRUE((t.cand.array() > -1.0).all() && (t.cand.array() < 1.0).all());
    }
  }
}

TEST(LstmGradCheck, ScalarAndRandomInstances) {
  {
    LstmDims d{2, 1};
    std::mt19937_64 rng(3);
    auto p = LstmParams::zeros(d);
    randomize(p, rng, 0.8);
    const auto seq = random_sequence(rng, 6, 1, 1);
    EXPECT_TRUE((grad_check<LstmModel>(p, seq, TrainConfig{}, 1e-5, 1e-4).passed()));
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    LstmDims d{static_cast<Eigen::Index>(2 + rng() % 4), static_cast<Eigen::Index>(1 + rng() % 5)};
    auto p = LstmParams::zeros(d);
    randomize(p, rng, 0.5);
    const auto seq = random_sequence(rng, 2 + rng() % 15, 1, d.d_input - 1);
    // Finite differences see the full objective, so the window covers the sequence.
    TrainConfig cfg;
    cfg.bptt_window = static_cast<int>(seq.steps.size());
    const auto r = grad_check<LstmModel>(p, seq, cfg, 1e-5, 1e-4);
    EXPECT_TRUE(r.passed()) << "seed " << seed << " error " << r.max_rel_error;
  }
}

TEST(LstmFit, DeterministicAndZeroEpochs) {
  LstmDims d{27, 4};
  std::mt19937_64 rng(9);
  EncodedDataset ds;
  for (int i = 0; i < 5; ++i) ds.sequences.push_back(random_sequence(rng, 8, 8, 19));
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.seed = 7;
  EXPECT_TRUE(bit_identical(fit<LstmModel>(d, ds, cfg).params, fit<LstmModel>(d, ds, cfg).params));
  cfg.epochs = 0;
  EXPECT_TRUE(bit_identical(fit<LstmModel>(d, ds, cfg).params, LstmParams::init(d, 7)));
}

TEST(LstmFit, WarmStartUsesLossWeightedMean) {
  auto p = LstmParams::zeros(LstmDims{});
  TrainConfig cfg;
  cfg.lambda_in = 1.0;
  cfg.lambda_out = 3.0;
  LstmModel::warm_start_readout(p, 2.0, 6.0, cfg);
  EXPECT_DOUBLE_EQ(p.readout_b, 5.0);
}

}  // namespace
}  // namespace lafee
