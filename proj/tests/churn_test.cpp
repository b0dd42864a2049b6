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
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "lafee/churn.hpp"

namespace lafee {
namespace {

// Agreement rate written out term by term: both at or above tau, or both below.
double brute_force_accuracy(const std::vector<double>& actual, const std::vector<double>& pred, double tau) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if ((actual[i] >= tau && pred[i] >= tau) || (actual[i] < tau && pred[i] < tau)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(actual.size());
}

TEST(Classify, Boundaries) {
  const ChurnCriterion day = ChurnCriterion::from_days(1);
  EXPECT_EQ(classify(86400.0, day), ChurnLabel::Churn);
  EXPECT_EQ(classify(86399.0, day), ChurnLabel::Stay);
  EXPECT_EQ(classify(0.0, day), ChurnLabel::Stay);
  EXPECT_EQ(classify(604801.0, ChurnCriterion(604800.0)), ChurnLabel::Churn);
  EXPECT_THROW(classify(-1.0, day), DataError);
  EXPECT_THROW(classify(NAN, day), DataError);
}

TEST(ChurnAccuracy, Examples) {
  const std::vector<double> actual{2, 5, 10};
  EXPECT_EQ(churn_accuracy(actual, actual, ChurnCriterion(4)), 1.0);
  EXPECT_DOUBLE_EQ(churn_accuracy(actual, std::vector<double>{5, 3, 9}, ChurnCriterion(4)), 1.0 / 3.0);
  EXPECT_EQ(churn_accuracy(actual, std::vector<double>{3, 6, 11}, ChurnCriterion(4)), 1.0);
  EXPECT_THROW(churn_accuracy(std::vector<double>{}, std::vector<double>{}, ChurnCriterion(4)), DataError);
  EXPECT_THROW(churn_accuracy(actual, std::vector<double>{1}, ChurnCriterion(4)), DataError);
}

TEST(ChurnAccuracy, MatchesBruteForceOnRandomTriples) {
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<int> len(1, 40);
  std::uniform_int_distribution<int> secs(0, 20);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    std::vector<double> a(n), p(n);
    // Small integer grid so ties with tau are frequent.
    for (int i = 0; i < n; ++i) {
      a[i] = secs(rng) * 3600.0;
      p[i] = secs(rng) * 3600.0;
    }
    const double tau = (1 + secs(rng)) * 3600.0;
    EXPECT_EQ(churn_accuracy(a, p, ChurnCriterion(tau)), brute_force_accuracy(a, p, tau));
  }
}

TEST(Confusion, CountsSumAndAccuracyDefinition) {
  std::mt19937_64 rng(8);
  std::exponential_distribution<double> e(1.0 / 86400.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(50), p(50);
    for (int i = 0; i < 50; ++i) {
      a[i] = e(rng);
      p[i] = e(rng);
    }
    const auto c = confusion(a, p, ChurnCriterion::from_days(1));
    EXPECT_EQ(c.total(), 50u);
    EXPECT_DOUBLE_EQ(c.accuracy(), static_cast<double>(c.churn_churn + c.stay_stay) / 50.0);
    EXPECT_GE(c.accuracy(), 0.0);
    EXPECT_LE(c.accuracy(), 1.0);
  }
}

TEST(ChurnProperty, ThresholdCommutesWithLn1p) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> y(-1.0, 16.0);
  for (double days : {1.0, 3.0, 7.0, 0.5}) {
    const ChurnCriterion tau = ChurnCriterion::from_days(days);
    for (int i = 0; i < 10000; ++i) {
      const double v = y(rng);
      const bool churn =
          classify(inverse_transform_interval(v, TargetTransform::Ln1p), tau) == ChurnLabel::Churn;
      EXPECT_EQ(churn, v >= std::log1p(tau.tau_seconds)) << v;
    }
    // Exactly at the threshold the transformed-space rule decides churn;
    // mapping back to seconds may round below tau by an ulp.
    const double at = std::log1p(tau.tau_seconds);
    EXPECT_EQ(classify_transformed(at, tau, TargetTransform::Ln1p), ChurnLabel::Churn);
    EXPECT_EQ(classify_transformed(std::nextafter(at, 0.0), tau, TargetTransform::Ln1p), ChurnLabel::Stay);
    for (int i = 0; i < 10000; ++i) {
      const double v = y(rng);
      EXPECT_EQ(classify_transformed(v, tau, TargetTransform::Ln1p),
                classify(inverse_transform_interval(v, TargetTransform::Ln1p), tau));
    }
  }
}

TEST(ChurnProperty, InvariantUnderJointIncreasingTransform) {
  std::mt19937_64 rng(5);
  std::exponential_distribution<double> e(1.0 / 50000.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(30), p(30), fa(30), fp(30);
    const auto f = [](double x) { return std::sqrt(x) * 3.0 + x / 7.0; };
    for (int i = 0; i < 30; ++i) {
      a[i] = e(rng);
      p[i] = e(rng);
      fa[i] = f(a[i]);
      fp[i] = f(p[i]);
    }
    const double tau = 86400.0;
    EXPECT_EQ(churn_accuracy(a, p, ChurnCriterion(tau)), churn_accuracy(fa, fp, ChurnCriterion(f(tau))));
  }
}

TEST(MajorityAccuracy, LargerClassShare) {
  const std::vector<double> a{1, 2, 100, 200, 300};
  EXPECT_DOUBLE_EQ(majority_accuracy(a, ChurnCriterion(50)), 0.6);
  EXPECT_DOUBLE_EQ(majority_accuracy(a, ChurnCriterion(1000)), 1.0);
}

EncodedDataset logout_dataset(const std::vector<double>& seconds) {
  EncodedDataset ds;
  EncodedSequence s{"u", {}};
  for (double x : seconds) {
    EncodedStep st;
    st.kind = IntervalKind::OffGame;
    st.label = Action::LogoutRole;
    st.interval_seconds = x;
    st.target = std::log1p(x);
    s.steps.push_back(st);
    EncodedStep in;
    in.target = 1.0;
    s.steps.push_back(in);
  }
  ds.sequences.push_back(s);
  return ds;
}

TEST(Evaluate, ThreeTausAndAllChurnPredictor) {
  const std::vector<double> actual{100, 90000, 300000, 700000};
  const auto ds = logout_dataset(actual);
  const auto huge = [](const EncodedSequence& s) { return std::vector<double>(s.steps.size(), 40.0); };
  std::vector<ChurnCriterion> taus;
  for (double d : {1.0, 3.0, 7.0}) taus.push_back(ChurnCriterion::from_days(d));
  const auto ev = evaluate(huge, ds, taus);
  ASSERT_EQ(ev.reports.size(), 3u);
  // All-churn predictor scores the true churn rate.
  EXPECT_DOUBLE_EQ(ev.reports[0].accuracy(), 0.75);
  EXPECT_DOUBLE_EQ(ev.reports[1].accuracy(), 0.50);
  EXPECT_DOUBLE_EQ(ev.reports[2].accuracy(), 0.25);
  EXPECT_EQ(ev.actual_out, actual);
  for (const auto& r : ev.reports) EXPECT_EQ(r.n_out(), 4u);

  const auto exact = [](const EncodedSequence& s) {
    std::vector<double> out;
    for (const auto& st : s.steps) out.push_back(st.target);
    return out;
  };
  const auto perfect = evaluate(exact, ds, taus);
  EXPECT_NEAR(perfect.rmse_transformed, 0.0, 1e-12);
  for (const auto& r : perfect.reports) EXPECT_EQ(r.accuracy(), 1.0);

  EXPECT_THROW(evaluate(exact, EncodedDataset{}, taus), DataError);
  // Negative transformed predictions clamp to zero seconds.
  const auto negative = [](const EncodedSequence& s) { return std::vector<double>(s.steps.size(), -3.0); };
  EXPECT_EQ(evaluate(negative, ds, taus).predicted_out, std::vector<double>(4, 0.0));
  // A prediction exactly at the transformed threshold counts as churn.
  const auto at_tau = [](const EncodedSequence& s) {
    return std::vector<double>(s.steps.size(), std::log1p(86400.0));
  };
  EXPECT_EQ(evaluate(at_tau, ds, taus).reports[0].counts.churn_churn, 3u);
}

TEST(ChurnCsv, Layout) {
  std::ostringstream os;
  write_churn_csv_header(os);
  write_churn_csv_row(os, {"All", 7.0, {1, 2, 3, 4}});
  EXPECT_EQ(os.str(), "cohort,tau_days,accuracy,TT,TS,ST,SS,n_out\nAll,7,0.5,1,2,3,4,10\n");
}

}  // namespace
}  // namespace lafee
