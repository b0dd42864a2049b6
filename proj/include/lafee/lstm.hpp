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

// Baseline: a standard LSTM cell with a linear interval readout, trained
// with the same loss as LaFee. The input is the encoded state and action
// only; the step's own interval is the target and never an input.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lafee/domain.hpp"
#include "lafee/errors.hpp"
#include "lafee/tensor.hpp"

namespace lafee {

struct LstmDims {
  Eigen::Index d_input = static_cast<Eigen::Index>(kStateDims + kActionCount);
  Eigen::Index d_hidden = 27;

  void validate() const {
    if (d_input <= 0 || d_hidden <= 0) throw ConfigError("LSTM dimensions must be positive");
  }
  friend bool operator==(const LstmDims&, const LstmDims&) = default;
};

struct LstmParams {
  LstmDims dims;
  Eigen::MatrixXd forget_w;  // d_h x (d_h + d_x)
  Eigen::VectorXd forget_b;
  Eigen::MatrixXd input_w;
  Eigen::VectorXd input_b;
  Eigen::MatrixXd cand_w;
  Eigen::VectorXd cand_b;
  Eigen::MatrixXd output_w;
  Eigen::VectorXd output_b;
  Eigen::MatrixXd readout_w;  // 1 x d_h
  double readout_b = 0.0;

  static LstmParams zeros(const LstmDims& d) {
    d.validate();
    LstmParams p;
    p.dims = d;
    const auto cols = d.d_hidden + d.d_input;
    for (auto* w : {&p.forget_w, &p.input_w, &p.cand_w, &p.output_w}) {
      *w = Eigen::MatrixXd::Zero(d.d_hidden, cols);
    }
    for (auto* b : {&p.forget_b, &p.input_b, &p.cand_b, &p.output_b}) {
      *b = Eigen::VectorXd::Zero(d.d_hidden);
    }
    p.readout_w = Eigen::MatrixXd::Zero(1, d.d_hidden);
    return p;
  }

  static LstmParams init(const LstmDims& d, std::uint64_t seed) {
    LstmParams p = zeros(d);
    glorot_init(p, seed);
    return p;
  }

  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    f("forget_w", as_tensor(s.forget_w));
    f("forget_b", as_tensor(s.forget_b));
    f("input_w", as_tensor(s.input_w));
    f("input_b", as_tensor(s.input_b));
    f("cand_w", as_tensor(s.cand_w));
    f("cand_b", as_tensor(s.cand_b));
    f("output_w", as_tensor(s.output_w));
    f("output_b", as_tensor(s.output_b));
    f("readout_w", as_tensor(s.readout_w));
    f("readout_b", as_tensor(s.readout_b));
  }
};

struct LstmCarry {
  Eigen::VectorXd h;
  Eigen::VectorXd c;

  static LstmCarry zeros(const LstmDims& d) {
    return {Eigen::VectorXd::Zero(d.d_hidden), Eigen::VectorXd::Zero(d.d_hidden)};
  }
};

struct LstmTrace {
  LstmCarry before;
  LstmCarry after;
  Eigen::VectorXd forget;
  Eigen::VectorXd input;
  Eigen::VectorXd cand;
  Eigen::VectorXd output;
  double prediction = 0.0;
};

inline Eigen::VectorXd lstm_input(const EncodedStep& s) { return concat(s.state, s.action); }

inline LstmTrace lstm_step(const LstmParams& p, const LstmCarry& prev, const Eigen::VectorXd& x) {
  if (prev.h.size() != p.dims.d_hidden || prev.c.size() != p.dims.d_hidden ||
      x.size() != p.dims.d_input) {
    throw ConfigError("LSTM step inputs do not match parameter dimensions");
  }
  LstmTrace t;
  t.before = prev;
  const Eigen::VectorXd z = concat(prev.h, x);
  t.forget = sigmoid(p.forget_w * z + p.forget_b);
  t.input = sigmoid(p.input_w * z + p.input_b);
  t.cand = lafee::tanh(p.cand_w * z + p.cand_b);
  t.output = sigmoid(p.output_w * z + p.output_b);
  t.after.c = (t.forget.array() * prev.c.array() + t.input.array() * t.cand.array()).matrix();
  t.after.h = (t.output.array() * t.after.c.array().tanh()).matrix();
  t.prediction = (p.readout_w * t.after.h)(0) + p.readout_b;
  if (!t.after.c.allFinite() || !t.after.h.allFinite() || !std::isfinite(t.prediction)) {
    throw NumericError("non-finite value in LSTM step");
  }
  return t;
}

inline std::vector<LstmTrace> lstm_forward(const LstmParams& p, const EncodedSequence& seq,
                                           const LstmCarry& init) {
  std::vector<LstmTrace> traces;
  traces.reserve(seq.steps.size());
  const LstmCarry* prev = &init;
  for (std::size_t j = 0; j < seq.steps.size(); ++j) {
    try {
      traces.push_back(lstm_step(p, *prev, lstm_input(seq.steps[j])));
    } catch (const NumericError& e) {
      throw NumericError("step " + std::to_string(j) + " of '" + seq.user_id + "': " + e.what());
    }
    prev = &traces.back().after;
  }
  return traces;
}

inline std::vector<LstmTrace> lstm_forward(const LstmParams& p, const EncodedSequence& seq) {
  return lstm_forward(p, seq, LstmCarry::zeros(p.dims));
}

struct LstmModel {
  using Params = LstmParams;
  using Dims = LstmDims;
  using Trace = LstmTrace;
  using Adjoint = LstmCarry;

  static constexpr std::string_view kind = "lstm";

  static Params init(const Dims& d, std::uint64_t seed) { return Params::init(d, seed); }

  static std::vector<Trace> forward(const Params& p, const EncodedSequence& seq) {
    return lstm_forward(p, seq);
  }

  static double prediction(const Trace& t) { return t.prediction; }

  // One readout serves both kinds; start it at the loss-weighted mean.
  template <typename Config>
  static void warm_start_readout(Params& p, double in_mean, double out_mean, const Config& cfg) {
    const double w = cfg.lambda_in + cfg.lambda_out;
    p.readout_b = w > 0.0 ? (cfg.lambda_in * in_mean + cfg.lambda_out * out_mean) / w : 0.0;
  }

  static Adjoint zero_adjoint(const Params& p) { return LstmCarry::zeros(p.dims); }

  static void accumulate(Adjoint& into, const Adjoint& a) {
    into.h += a.h;
    into.c += a.c;
  }

  static bool is_readout(std::string_view name) {
    return name == "readout_w" || name == "readout_b";
  }

  static Adjoint readout_backward(const Params& p, const Trace& t, double dy, Params* grads) {
    if (grads) {
      grads->readout_w += dy * t.after.h.transpose();
      grads->readout_b += dy;
    }
    Adjoint adj = zero_adjoint(p);
    adj.h = dy * p.readout_w.row(0).transpose();
    return adj;
  }

  static Adjoint cell_backward(const Params& p, const Trace& t, const EncodedStep& in,
                               const Adjoint& post, Params* grads) {
    const Eigen::ArrayXd f = t.forget.array(), i = t.input.array(), g = t.cand.array(),
                         o = t.output.array();
    const Eigen::ArrayXd tc = t.after.c.array().tanh();
    const Eigen::ArrayXd dh = post.h.array();
    const Eigen::ArrayXd dc = post.c.array() + dh * o * (1.0 - tc * tc);

    const Eigen::VectorXd pre_f = (dc * t.before.c.array() * f * (1.0 - f)).matrix();
    const Eigen::VectorXd pre_i = (dc * g * i * (1.0 - i)).matrix();
    const Eigen::VectorXd pre_g = (dc * i * (1.0 - g * g)).matrix();
    const Eigen::VectorXd pre_o = (dh * tc * o * (1.0 - o)).matrix();

    if (grads) {
      const Eigen::VectorXd z = concat(t.before.h, lstm_input(in));
      grads->forget_w.noalias() += pre_f * z.transpose();
      grads->forget_b += pre_f;
      grads->input_w.noalias() += pre_i * z.transpose();
      grads->input_b += pre_i;
      grads->cand_w.noalias() += pre_g * z.transpose();
      grads->cand_b += pre_g;
      grads->output_w.noalias() += pre_o * z.transpose();
      grads->output_b += pre_o;
    }
    const auto n = p.dims.d_hidden;
    Adjoint prev;
    prev.c = (dc * f).matrix();
    prev.h = p.forget_w.leftCols(n).transpose() * pre_f;
    prev.h.noalias() += p.input_w.leftCols(n).transpose() * pre_i;
    prev.h.noalias() += p.cand_w.leftCols(n).transpose() * pre_g;
    prev.h.noalias() += p.output_w.leftCols(n).transpose() * pre_o;
    return prev;
  }
};

}  // namespace lafee
