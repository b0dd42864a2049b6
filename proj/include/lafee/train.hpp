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

// Interval regression loss, truncated backpropagation through time, a
// central-difference gradient checker and the SGD training loop. Everything
// here is generic over a model-traits type (LaFeeModel, LstmModel).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lafee/domain.hpp"
#include "lafee/errors.hpp"
#include "lafee/tensor.hpp"

namespace lafee {

struct TrainConfig {
  double learning_rate = 1e-2;
  int epochs = 20;
  int bptt_window = 16;
  double grad_clip_norm = 5.0;
  std::uint64_t seed = 0;
  double lambda_in = 1.0;
  double lambda_out = 1.0;
  TargetTransform target_transform = TargetTransform::Ln1p;
  // Only the interval readouts are updated; everything else stays frozen.
  bool readout_only = false;
  // Before the first epoch, set readout biases to the mean training target.
  bool warm_start_readout = true;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (epochs < 0) throw ConfigError("epochs must be nonnegative");
    if (bptt_window < 1) throw ConfigError("bptt_window must be at least 1");
    if (!(grad_clip_norm > 0.0)) throw ConfigError("grad_clip_norm must be positive");
    if (lambda_in < 0.0 || lambda_out < 0.0) throw ConfigError("loss weights must be nonnegative");
  }
};

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"epochs", c.epochs},
          {"bptt_window", c.bptt_window},
          {"grad_clip_norm", c.grad_clip_norm},
          {"seed", c.seed},
          {"lambda_in", c.lambda_in},
          {"lambda_out", c.lambda_out},
          {"target_transform", std::string(transform_name(c.target_transform))},
          {"readout_only", c.readout_only},
          {"warm_start_readout", c.warm_start_readout}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.bptt_window = j.value("bptt_window", c.bptt_window);
  c.grad_clip_norm = j.value("grad_clip_norm", c.grad_clip_norm);
  c.seed = j.value("seed", c.seed);
  c.lambda_in = j.value("lambda_in", c.lambda_in);
  c.lambda_out = j.value("lambda_out", c.lambda_out);
  if (j.contains("target_transform")) {
    c.target_transform = parse_transform(j.at("target_transform").get<std::string>());
  }
  c.readout_only = j.value("readout_only", c.readout_only);
  c.warm_start_readout = j.value("warm_start_readout", c.warm_start_readout);
  return c;
}

// Mean squared residual.
inline double loss(std::span<const double> predictions, std::span<const double> targets) {
  if (predictions.size() != targets.size()) throw ConfigError("loss: length mismatch");
  if (predictions.empty()) throw ConfigError("loss: empty input");
  double s = 0.0;
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    const double r = predictions[j] - targets[j];
    s += r * r;
  }
  return s / static_cast<double>(predictions.size());
}

namespace detail {

struct KindCounts {
  std::size_t in = 0;
  std::size_t out = 0;
};

inline KindCounts count_kinds(const EncodedSequence& seq) {
  KindCounts c;
  for (const auto& s : seq.steps) (s.kind == IntervalKind::OffGame ? c.out : c.in)++;
  return c;
}

// Per-residual weight so that the total is lambda_in * MSE_in + lambda_out * MSE_out.
inline double residual_weight(const EncodedStep& s, const KindCounts& c, const TrainConfig& cfg) {
  return s.kind == IntervalKind::OffGame ? cfg.lambda_out / static_cast<double>(c.out)
                                         : cfg.lambda_in / static_cast<double>(c.in);
}

}  // namespace detail

template <typename Model>
std::vector<double> predict(const typename Model::Params& p, const EncodedSequence& seq) {
  const auto traces = Model::forward(p, seq);
  std::vector<double> out;
  out.reserve(traces.size());
  for (const auto& t : traces) out.push_back(Model::prediction(t));
  return out;
}

// lambda_in * MSE(in-game steps) + lambda_out * MSE(logout steps); a kind
// with no steps contributes nothing.
template <typename Model>
double sequence_loss(const typename Model::Params& p, const EncodedSequence& seq,
                     const TrainConfig& cfg) {
  if (seq.steps.empty()) throw ConfigError("sequence_loss: empty sequence");
  const auto preds = predict<Model>(p, seq);
  const auto counts = detail::count_kinds(seq);
  double total = 0.0;
  for (std::size_t t = 0; t < preds.size(); ++t) {
    const double r = preds[t] - seq.steps[t].target;
    total += detail::residual_weight(seq.steps[t], counts, cfg) * r * r;
  }
  return total;
}

template <typename Model>
double mean_loss(const typename Model::Params& p, const EncodedDataset& ds, const TrainConfig& cfg) {
  if (ds.sequences.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (const auto& seq : ds.sequences) s += sequence_loss<Model>(p, seq, cfg);
  return s / static_cast<double>(ds.sequences.size());
}

template <typename P>
struct LossAndGradient {
  double loss = 0.0;
  P gradients;
};

// Exact gradients of sequence_loss through the unrolled recurrence, with
// each loss term's backward flow truncated to cfg.bptt_window steps (the
// step that emits the term counts as the first). With a window at least as
// long as the sequence this is the full gradient.
template <typename Model>
LossAndGradient<typename Model::Params> backward(const typename Model::Params& p,
                                                 const EncodedSequence& seq,
                                                 const TrainConfig& cfg) {
  using Adjoint = typename Model::Adjoint;
  if (seq.steps.empty()) throw ConfigError("backward: empty sequence");
  if (cfg.bptt_window < 1) throw ConfigError("bptt_window must be at least 1");

  const auto traces = Model::forward(p, seq);
  const auto counts = detail::count_kinds(seq);
  const std::size_t n = traces.size();
  const auto window = static_cast<std::size_t>(cfg.bptt_window);

  LossAndGradient<typename Model::Params> out{0.0, zeros_like(p)};
  std::vector<Adjoint> post(n, Model::zero_adjoint(p));
  std::vector<bool> touched(n, false);

  for (std::size_t t = 0; t < n; ++t) {
    const double w = detail::residual_weight(seq.steps[t], counts, cfg);
    const double r = Model::prediction(traces[t]) - seq.steps[t].target;
    out.loss += w * r * r;
    const double dy = 2.0 * w * r;
    if (dy == 0.0) continue;
    Adjoint adj = Model::readout_backward(p, traces[t], dy, &out.gradients);
    const std::size_t lo = t + 1 >= window ? t + 1 - window : 0;
    for (std::size_t k = t;; --k) {
      Model::accumulate(post[k], adj);
      touched[k] = true;
      if (k == lo) break;
      adj = Model::cell_backward(p, traces[k], seq.steps[k], adj, nullptr);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (touched[k]) Model::cell_backward(p, traces[k], seq.steps[k], post[k], &out.gradients);
  }
  if (!std::isfinite(out.loss)) throw NumericError("non-finite loss for '" + seq.user_id + "'");
  require_finite(out.gradients, "gradient");
  return out;
}

// ---------------------------------------------------------------------------
// Gradient check

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-12});
}

struct TensorCheck {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<std::size_t> flagged;  // flat column-major indices over tolerance
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0.0;
  double tolerance = 0.0;

  bool passed() const { return max_rel_error < tolerance; }
};

// Compares analytic gradients (from `backward`, or `analytic` when given)
// against (L(theta + h) - L(theta - h)) / 2h. samples_per_tensor == 0 checks
// every coordinate.
template <typename Model>
GradCheckReport grad_check(const typename Model::Params& p, const EncodedSequence& seq,
                           const TrainConfig& cfg, double h, double tolerance,
                           std::size_t samples_per_tensor = 0, std::uint64_t seed = 0,
                           const typename Model::Params* analytic = nullptr) {
  using Params = typename Model::Params;
  if (!(h >= 1e-7 && h <= 1e-4)) throw ConfigError("grad_check: h must lie in [1e-7, 1e-4]");
  Params grads = analytic ? *analytic : backward<Model>(p, seq, cfg).gradients;

  Params work = p;
  auto work_t = named_tensors(work);
  const auto grad_t = named_tensors(grads);
  std::mt19937_64 rng(seed);

  GradCheckReport report;
  report.tolerance = tolerance;
  for (std::size_t ti = 0; ti < work_t.size(); ++ti) {
    auto& tensor = work_t[ti].values;
    const auto size = static_cast<std::size_t>(tensor.size());
    std::vector<std::size_t> coords(size);
    std::iota(coords.begin(), coords.end(), 0);
    if (samples_per_tensor > 0 && samples_per_tensor < size) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(samples_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    TensorCheck tc;
    tc.name = std::string(work_t[ti].name);
    for (std::size_t idx : coords) {
      double& x = tensor.data()[idx];
      const double saved = x;
      x = saved + h;
      const double up = sequence_loss<Model>(work, seq, cfg);
      x = saved - h;
      const double down = sequence_loss<Model>(work, seq, cfg);
      x = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(grad_t[ti].values.data()[idx], numeric);
      ++tc.checked;
      if (err > tc.max_rel_error) {
        tc.max_rel_error = err;
        tc.worst_index = idx;
      }
      if (err >= tolerance) tc.flagged.push_back(idx);
    }
    report.max_rel_error = std::max(report.max_rel_error, tc.max_rel_error);
    report.tensors.push_back(std::move(tc));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Training loop

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = std::numeric_limits<double>::quiet_NaN();
};

inline void write_training_log(std::ostream& os, const std::vector<EpochLog>& log) {
  os << "epoch,train_loss,validation_loss\n";
  for (const auto& e : log) {
    os << e.epoch << ',' << format_double(e.train_loss) << ',';
    if (!std::isnan(e.validation_loss)) os << format_double(e.validation_loss);
    os << '\n';
  }
}

template <typename Model>
struct FitResult {
  typename Model::Params params;
  std::vector<EpochLog> log;
};

// Per-sequence SGD with global-norm clipping, sequences shuffled each epoch
// by a generator seeded from cfg.seed. Starts from `init`.
template <typename Model>
FitResult<Model> fit_from(typename Model::Params init, const EncodedDataset& train,
                          const TrainConfig& cfg, const EncodedDataset* validation = nullptr) {
  cfg.validate();
  if (train.sequences.empty()) throw DataError("training split is empty");
  FitResult<Model> result{std::move(init), {}};
  auto& params = result.params;

  std::vector<std::size_t> order(train.sequences.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const auto& seq = train.sequences[order[pos]];
      LossAndGradient<typename Model::Params> lg;
      try {
        lg = backward<Model>(params, seq, cfg);
      } catch (const NumericError& e) {
        throw NumericError("diverged at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(pos) + ": " + e.what());
      }
      if (cfg.readout_only) {
        lg.gradients.visit([](std::string_view name, TensorMap t) {
          if (!Model::is_readout(name)) t.setZero();
        });
      }
      clip_global_norm(lg.gradients, cfg.grad_clip_norm);
      axpy(params, -cfg.learning_rate, lg.gradients);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = mean_loss<Model>(params, train, cfg);
    if (validation && !validation->sequences.empty()) {
      entry.validation_loss = mean_loss<Model>(params, *validation, cfg);
    }
    if (!std::isfinite(entry.train_loss)) {
      throw NumericError("diverged at epoch " + std::to_string(epoch) + ": training loss is not finite");
    }
    result.log.push_back(entry);
  }
  return result;
}

// Mean transformed target over in-game and logout steps.
inline std::pair<double, double> mean_targets(const EncodedDataset& ds) {
  double sum_in = 0.0, sum_out = 0.0;
  std::size_t n_in = 0, n_out = 0;
  for (const auto& seq : ds.sequences) {
    for (const auto& s : seq.steps) {
      if (s.kind == IntervalKind::OffGame) {
        sum_out += s.target;
        ++n_out;
      } else {
        sum_in += s.target;
        ++n_in;
      }
    }
  }
  return {n_in ? sum_in / static_cast<double>(n_in) : 0.0,
          n_out ? sum_out / static_cast<double>(n_out) : 0.0};
}

template <typename Model>
FitResult<Model> fit(const typename Model::Dims& dims, const EncodedDataset& train,
                     const TrainConfig& cfg, const EncodedDataset* validation = nullptr) {
  auto params = Model::init(dims, cfg.seed);
  if (cfg.warm_start_readout && cfg.epochs > 0) {
    const auto [in_mean, out_mean] = mean_targets(train);
    Model::warm_start_readout(params, in_mean, out_mean, cfg);
  }
  return fit_from<Model>(std::move(params), train, cfg, validation);
}

}  // namespace lafee
