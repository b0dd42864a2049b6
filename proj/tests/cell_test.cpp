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

#include "lafee/cell.hpp"
#include "test_util.hpp"

namespace lafee {
namespace {

using lafee::testing::random_sequence;
using lafee::testing::randomize;

// Hand-evaluated scalar cell with all weights 1 and biases 0, frozen:
// gate = sigmoid(1), candidate = tanh(1), blend = gate * candidate.
constexpr double kSigmoid1 = 0.731058578630005;
constexpr double kTanh1 = 0.761594155955765;
constexpr double kBlend = 0.556769941145940;
constexpr double kInjected = 1.11353988229188;

LaFeeDims scalar_dims() {
  LaFeeDims d;
  d.d_state = d.d_action = d.d_sat = d.d_asp = 1;
  return d;
}

LaFeeParams unit_params(const LaFeeDims& d) {
  auto p = LaFeeParams::zeros(d);
  p.visit([](std::string_view name, TensorMap t) {
    if (!name.ends_with("_b")) t.setOnes();
  });
  return p;
}

Eigen::VectorXd ones(Eigen::Index n) { return Eigen::VectorXd::Ones(n); }

TEST(ScalarOracle, FrozenConstantsMatchLibm) {
  EXPECT_NEAR(1.0 / (1.0 + std::exp(-1.0)), kSigmoid1, 1e-15);
  EXPECT_NEAR(std::tanh(1.0), kTanh1, 1e-15);
  EXPECT_NEAR(kSigmoid1 * kTanh1, kBlend, 1e-15);
  EXPECT_NEAR(2.0 * kBlend, kInjected, 1e-14);
}

TEST(StepIn, ScalarHandEvaluation) {
  const auto d = scalar_dims();
  const auto p = unit_params(d);
  const auto t = step_in(p, LatentState::zeros(d), ones(1), ones(1));
  EXPECT_NEAR(t.sat_gate(0), kSigmoid1, 1e-14);
  EXPECT_NEAR(t.sat_cand(0), kTanh1, 1e-14);
  EXPECT_NEAR(t.after.sat(0), kBlend, 1e-14);
  EXPECT_NEAR(t.asp_gate(0), kSigmoid1, 1e-14);
  EXPECT_NEAR(t.after.asp(0), kInjected, 1e-14);
  EXPECT_NEAR(t.prediction, kInjected, 1e-14);
  EXPECT_EQ(t.path, Path::In);
}

TEST(StepOut, ScalarHandEvaluation) {
  const auto d = scalar_dims();
  const auto p = unit_params(d);
  const auto t = step_out(p, LatentState::zeros(d), ones(1), ones(1));
  EXPECT_NEAR(t.after.asp(0), kBlend, 1e-14);
  EXPECT_NEAR(t.sat_gate(0), kSigmoid1, 1e-14);
  EXPECT_NEAR(t.after.sat(0), kInjected, 1e-14);
  EXPECT_NEAR(t.prediction, kInjected, 1e-14);
  EXPECT_EQ(t.path, Path::Out);
}

TEST(Step, ZeroNetworkGivesZero) {
  const LaFeeDims d;
  const auto p = LaFeeParams::zeros(d);
  std::mt19937_64 rng(1);
  const auto seq = random_sequence(rng, 6, d.d_state, d.d_action);
  for (const auto& t : forward_sequence(p, seq)) {
    EXPECT_TRUE(t.after.sat.isZero(0.0));
    EXPECT_TRUE(t.after.asp.isZero(0.0));
    EXPECT_EQ(t.prediction, 0.0);
  }
}

TEST(Step, DimensionMismatchRejected) {
  const LaFeeDims d;
  const auto p = LaFeeParams::zeros(d);
  EXPECT_THROW(step_in(p, LatentState::zeros(d), ones(3), ones(19)), ConfigError);
}

TEST(Step, NonFiniteNamesTensor) {
  const auto d = scalar_dims();
  auto p = unit_params(d);
  p.sat_to_asp_b(0) = std::numeric_limits<double>::infinity();
  try {
    step_in(p, LatentState::zeros(d), ones(1), ones(1));
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("aspiration"), std::string::npos);
  }
}

TEST(StepOut, WithoutInjectionSatisfactionMatchesInPath) {
  std::mt19937_64 rng(5);
  LaFeeDims d;
  d.d_sat = 4;
  d.d_asp = 3;
  auto p = LaFeeParams::zeros(d);
  randomize(p, rng, 0.7);
  p.asp_to_sat_w.setZero();
  p.asp_to_sat_b.setZero();
  LatentState prev{Eigen::VectorXd::Random(4), Eigen::VectorXd::Random(3)};
  const auto x = lafee::testing::random_step(rng, d.d_state, d.d_action, IntervalKind::InGame);
  EXPECT_EQ(step_out(p, prev, x.state, x.action).after.sat, step_in(p, prev, x.state, x.action).after.sat);
}

TEST(Step, GateClosedPreservesMemory) {
  const auto d = scalar_dims();
  auto p = unit_params(d);
  p.sat_to_asp_w.setZero();
  p.asp_to_sat_w.setZero();
  LatentState prev{Eigen::VectorXd::Constant(1, 0.3), Eigen::VectorXd::Constant(1, -0.2)};
  double last = 1.0;
  for (double b : {-5.0, -10.0, -20.0, -1000.0}) {
    p.sat_gate_b(0) = b;
    const auto t = step_out(p, prev, ones(1), ones(1));
    const double moved = std::abs(t.after.sat(0) - prev.sat(0));
    EXPECT_LE(moved, t.sat_gate(0) * (std::abs(t.sat_cand(0)) + std::abs(prev.sat(0))) + 1e-15);
    EXPECT_LE(moved, last);
    last = moved;
  }
  EXPECT_LT(last, 1e-12);
}

// Gate ranges, convex core and chaining over random instances.
TEST(CellProperty, GateRangesConvexCoreAndChaining) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    LaFeeDims d;
    d.d_sat = 1 + static_cast<Eigen::Index>(rng() % 6);
    d.d_asp = 1 + static_cast<Eigen::Index>(rng() % 6);
    d.d_state = 1 + static_cast<Eigen::Index>(rng() % 6);
    d.d_action = 1 + static_cast<Eigen::Index>(rng() % 6);
    auto p = LaFeeParams::zeros(d);
    randomize(p, rng, 1.5);
    // Without injection the latents stay in the hull of the previous
    // latent and (-1, 1).
    auto core = p;
    core.sat_to_asp_w.setZero();
    core.sat_to_asp_b.setZero();
    core.asp_to_sat_w.setZero();
    core.asp_to_sat_b.setZero();
    const auto seq = random_sequence(rng, 1 + rng() % 20, d.d_state, d.d_action);
    LatentState init{Eigen::VectorXd::Random(d.d_sat) * 3.0, Eigen::VectorXd::Random(d.d_asp) * 3.0};
    const auto traces = forward_sequence(p, seq, init);
    const auto core_traces = forward_sequence(core, seq, init);
    ASSERT_EQ(traces.size(), seq.steps.size());
    for (std::size_t j = 0; j < traces.size(); ++j) {
      const auto& t = traces[j];
      EXPECT_EQ(t.path, path_for(seq.steps[j].kind));
      EXPECT_TRUE(t.before == (j == 0 ? init : traces[j - 1].after));
      // Closed bounds: large pre-activations saturate to exactly 0 or 1 in double.
      for (const auto* g : {&t.sat_gate, &t.asp_gate}) {
        EXPECT_TRUE((g->array() >= 0.0).all() && (g->array() <= 1.0).all());
      }
      for (const auto* c : {&t.sat_cand, &t.asp_cand}) {
        EXPECT_TRUE((c->array() >= -1.0).all() && (c->array() <= 1.0).all());
      }
      const auto& ct = core_traces[j];
      for (auto [prev, next] : {std::pair{&ct.before.sat, &ct.after.sat}, std::pair{&ct.before.asp, &ct.after.asp}}) {
        const double lo = std::min(prev->minCoeff(), -1.0);
        const double hi = std::max(prev->maxCoeff(), 1.0);
        EXPECT_TRUE((next->array() >= lo).all() && (next->array() <= hi).all());
      }
    }
  }
}

TEST(CellProperty, DeterministicBitIdenticalTraces) {
  std::mt19937_64 rng(3);
  const LaFeeDims d;
  const auto p = LaFeeParams::init(d, 42);
  const auto seq = random_sequence(rng, 30, d.d_state, d.d_action);
  const auto a = forward_sequence(p, seq);
  const auto b = forward_sequence(p, seq);
  for (std::size_t j = 0; j < a.size(); ++j) {
    EXPECT_TRUE(a[j].after == b[j].after);
    EXPECT_EQ(std::memcmp(&a[j].prediction, &b[j].prediction, sizeof(double)), 0);
  }
  EXPECT_TRUE(bit_identical(LaFeeParams::init(d, 42), p));
  EXPECT_FALSE(bit_identical(LaFeeParams::init(d, 43), p));
}

TEST(CellProperty, SharedTranslationsUseOneStorage) {
  // Changing the shared satisfaction gate is seen by both paths, and each
  // shared tensor is visited exactly once.
  const auto d = scalar_dims();
  auto p = unit_params(d);
  const auto in_before = step_in(p, LatentState::zeros(d), ones(1), ones(1));
  const auto out_before = step_out(p, LatentState::zeros(d), ones(1), ones(1));
  p.sat_gate_w(0, 1) = -2.0;
  EXPECT_NE(step_in(p, LatentState::zeros(d), ones(1), ones(1)).sat_gate(0), in_before.sat_gate(0));
  EXPECT_NE(step_out(p, LatentState::zeros(d), ones(1), ones(1)).sat_gate(0), out_before.sat_gate(0));
  const auto names = tensor_names(p);
  for (const auto& shared : shared_tensor_names()) {
    EXPECT_EQ(std::count(names.begin(), names.end(), shared), 1);
  }
  EXPECT_EQ(names.size(), 16u);
}

TEST(CellProperty, ForwardOnAllInGamePicksInPath) {
  std::mt19937_64 rng(9);
  const LaFeeDims d;
  const auto p = LaFeeParams::init(d, 1);
  EncodedSequence seq{"u", {}};
  for (int j = 0; j < 5; ++j) seq.steps.push_back(lafee::testing::random_step(rng, d.d_state, d.d_action, IntervalKind::InGame));
  for (const auto& t : forward_sequence(p, seq)) EXPECT_EQ(t.path, Path::In);
  EXPECT_TRUE(forward_sequence(p, EncodedSequence{"e", {}}).empty());
}

TEST(GlorotInit, BiasesZeroWeightsBounded) {
  const LaFeeDims d;
  const auto p = LaFeeParams::init(d, 7);
  p.visit([](std::string_view name, ConstTensorMap t) {
    if (name.ends_with("_b")) {
      EXPECT_TRUE(t.isZero(0.0)) << name;
    } else {
      const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
      EXPECT_LE(t.cwiseAbs().maxCoeff(), limit) << name;
      EXPECT_GT(t.cwiseAbs().maxCoeff(), 0.0) << name;
    }
  });
}

}  // namespace
}  // namespace lafee
