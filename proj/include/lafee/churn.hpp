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

// Churn from interval regression: a predicted logout interval at or above
// tau means churn. Accuracy is the agreement rate between thresholded
// actual and predicted logout intervals.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lafee/domain.hpp"
#include "lafee/errors.hpp"

namespace lafee {

enum class ChurnLabel : std::uint8_t { Stay, Churn };

inline ChurnLabel classify(double t_pred_seconds, const ChurnCriterion& tau) {
  if (std::isnan(t_pred_seconds)) throw DataError("classify: prediction is NaN");
  if (t_pred_seconds < 0.0) throw DataError("classify: negative interval");
  return t_pred_seconds >= tau.tau_seconds ? ChurnLabel::Churn : ChurnLabel::Stay;
}

// Same decision taken on a transformed prediction, compared against the
// transformed threshold. Exact at the boundary, where mapping back to seconds
// first can round across tau.
inline ChurnLabel classify_transformed(double y_pred, const ChurnCriterion& tau, TargetTransform t) {
  if (std::isnan(y_pred)) throw DataError("classify: prediction is NaN");
  return y_pred >= transform_interval(tau.tau_seconds, t) ? ChurnLabel::Churn : ChurnLabel::Stay;
}

struct ConfusionCounts {
  std::size_t churn_churn = 0;  // actual churn, predicted churn
  std::size_t churn_stay = 0;   // actual churn, predicted stay
  std::size_t stay_churn = 0;   // actual stay, predicted churn
  std::size_t stay_stay = 0;    // actual stay, predicted stay

  std::size_t total() const { return churn_churn + churn_stay + stay_churn + stay_stay; }
  void add(bool actual_churn, bool predicted_churn) {
    if (actual_churn && predicted_churn) ++churn_churn;
    else if (actual_churn) ++churn_stay;
    else if (predicted_churn) ++stay_churn;
    else ++stay_stay;
  }
  double accuracy() const {
    return total() == 0 ? 0.0
                        : static_cast<double>(churn_churn + stay_stay) / static_cast<double>(total());
  }
};

inline ConfusionCounts confusion(std::span<const double> actual_out,
                                 std::span<const double> predicted_out, const ChurnCriterion& tau) {
  if (actual_out.size() != predicted_out.size()) throw DataError("churn: length mismatch");
  if (actual_out.empty()) throw DataError("churn: no logout intervals");
  ConfusionCounts c;
  for (std::size_t i = 0; i < actual_out.size(); ++i) {
    c.add(classify(actual_out[i], tau) == ChurnLabel::Churn, classify(predicted_out[i], tau) == ChurnLabel::Churn);
  }
  return c;
}

inline double churn_accuracy(std::span<const double> actual_out, std::span<const double> predicted_out,
                             const ChurnCriterion& tau) {
  return confusion(actual_out, predicted_out, tau).accuracy();
}

// Accuracy of always predicting the more frequent actual label.
inline double majority_accuracy(std::span<const double> actual_out, const ChurnCriterion& tau) {
  if (actual_out.empty()) throw DataError("churn: no logout intervals");
  std::size_t churn = 0;
  for (double a : actual_out) churn += classify(a, tau) == ChurnLabel::Churn;
  const double rate = static_cast<double>(churn) / static_cast<double>(actual_out.size());
  return std::max(rate, 1.0 - rate);
}

struct ChurnReport {
  std::string cohort;
  double tau_days = 0.0;
  ConfusionCounts counts;

  double accuracy() const { return counts.accuracy(); }
  std::size_t n_out() const { return counts.total(); }
};

struct Evaluation {
  std::vector<ChurnReport> reports;  // one per tau
  double rmse_transformed = 0.0;     // over logout steps
  std::vector<double> actual_out;    // seconds
  std::vector<double> predicted_out; // seconds
};

// Per-sequence predictions in transformed space, one per step.
using SequencePredictor = std::function<std::vector<double>(const EncodedSequence&)>;

inline Evaluation evaluate(const SequencePredictor& predict, const EncodedDataset& test,
                           const std::vector<ChurnCriterion>& taus, const std::string& cohort = "All") {
  Evaluation ev;
  std::vector<double> transformed;
  double sq = 0.0;
  for (const auto& seq : test.sequences) {
    const auto preds = predict(seq);
    if (preds.size() != seq.steps.size()) throw DataError("predictor returned wrong length");
    for (std::size_t j = 0; j < preds.size(); ++j) {
      const auto& s = seq.steps[j];
      if (s.kind != IntervalKind::OffGame) continue;
      const double r = preds[j] - s.target;
      sq += r * r;
      ev.actual_out.push_back(s.interval_seconds);
      ev.predicted_out.push_back(std::max(0.0, inverse_transform_interval(preds[j], test.transform)));
      transformed.push_back(preds[j]);
    }
  }
  if (ev.actual_out.empty()) throw DataError("evaluation set has no logout steps");
  ev.rmse_transformed = std::sqrt(sq / static_cast<double>(ev.actual_out.size()));
  // Predicted labels are decided in transformed space.
  for (const auto& tau : taus) {
    ConfusionCounts c;
    for (std::size_t i = 0; i < transformed.size(); ++i) {
      c.add(classify(ev.actual_out[i], tau) == ChurnLabel::Churn,
            classify_transformed(transformed[i], tau, test.transform) == ChurnLabel::Churn);
    }
    ev.reports.push_back({cohort, tau.days(), c});
  }
  return ev;
}

inline void write_churn_csv_header(std::ostream& os) {
  os << "cohort,tau_days,accuracy,TT,TS,ST,SS,n_out\n";
}

inline void write_churn_csv_row(std::ostream& os, const ChurnReport& r) {
  os << r.cohort << ',' << format_double(r.tau_days) << ',' << format_double(r.accuracy()) << ','
     << r.counts.churn_churn << ',' << r.counts.churn_stay << ',' << r.counts.stay_churn << ','
     << r.counts.stay_stay << ',' << r.n_out() << '\n';
}

}  // namespace lafee
