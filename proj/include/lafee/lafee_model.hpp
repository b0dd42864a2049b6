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

// Model traits binding the LaFee cell to the generic BPTT trainer:
// forward traces plus per-step vector-Jacobian products.

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lafee/cell.hpp"
#include "lafee/domain.hpp"

namespace lafee {

struct LaFeeModel {
  using Params = LaFeeParams;
  using Dims = LaFeeDims;
  using Trace = StepTrace;
  // Adjoint of the post-step latent (satisfaction, aspiration).
  using Adjoint = LatentState;

  static constexpr std::string_view kind = "lafee";

  static Params init(const Dims& d, std::uint64_t seed) { return Params::init(d, seed); }

  static std::vector<Trace> forward(const Params& p, const EncodedSequence& seq) {
    return forward_sequence(p, seq);
  }

  static double prediction(const Trace& t) { return t.prediction; }

  template <typename Config>
  static void warm_start_readout(Params& p, double in_mean, double out_mean, const Config&) {
    p.in_readout_b = in_mean;
    p.out_readout_b = out_mean;
  }

  static Adjoint zero_adjoint(const Params& p) { return LatentState::zeros(p.dims); }

  static void accumulate(Adjoint& into, const Adjoint& a) {
    into.sat += a.sat;
    into.asp += a.asp;
  }

  static bool is_readout(std::string_view name) {
    return name == "in_readout_w" || name == "in_readout_b" || name == "out_readout_w" ||
           name == "out_readout_b";
  }

  // Readout gradient for dL/dprediction = dy; returns the adjoint it sends
  // into the post-step latent.
  static Adjoint readout_backward(const Params& p, const Trace& t, double dy, Params* grads) {
    Adjoint adj = zero_adjoint(p);
    if (t.path == Path::In) {
      if (grads) {
        grads->in_readout_w += dy * t.after.asp.transpose();
        grads->in_readout_b += dy;
      }
      adj.asp = dy * p.in_readout_w.row(0).transpose();
    } else {
      if (grads) {
        grads->out_readout_w += dy * t.after.sat.transpose();
        grads->out_readout_b += dy;
      }
      adj.sat = dy * p.out_readout_w.row(0).transpose();
    }
    return adj;
  }

  // Back-propagates the adjoint of the post-step latent through one cell
  // step, returning the adjoint of the pre-step latent. Parameter gradients
  // are accumulated into `grads` when it is non-null.
  static Adjoint cell_backward(const Params& p, const Trace& t, const EncodedStep& in,
                               const Adjoint& post, Params* grads) {
    Eigen::VectorXd d_sat = post.sat;
    Eigen::VectorXd d_asp = post.asp;
    Eigen::VectorXd sat_core_adj, asp_core_adj;
    if (t.path == Path::In) {
      // asp_after = blend_a + W_sa * sat_after + b_sa
      if (grads) {
        grads->sat_to_asp_w += d_asp * t.after.sat.transpose();
        grads->sat_to_asp_b += d_asp;
      }
      sat_core_adj = d_sat + p.sat_to_asp_w.transpose() * d_asp;
      asp_core_adj = d_asp;
    } else {
      // sat_after = blend_s + W_as * asp_after + b_as
      if (grads) {
        grads->asp_to_sat_w += d_sat * t.after.asp.transpose();
        grads->asp_to_sat_b += d_sat;
      }
      asp_core_adj = d_asp + p.asp_to_sat_w.transpose() * d_sat;
      sat_core_adj = d_sat;
    }
    Adjoint prev;
    prev.sat = blend_backward(p.sat_gate_w, p.sat_cand_w, t.sat_gate, t.sat_cand, t.before.sat,
                              in.state, sat_core_adj, grads ? &grads->sat_gate_w : nullptr,
                              grads ? &grads->sat_gate_b : nullptr,
                              grads ? &grads->sat_cand_w : nullptr,
                              grads ? &grads->sat_cand_b : nullptr);
    prev.asp = blend_backward(p.asp_gate_w, p.asp_cand_w, t.asp_gate, t.asp_cand, t.before.asp,
                              in.action, asp_core_adj, grads ? &grads->asp_gate_w : nullptr,
                              grads ? &grads->asp_gate_b : nullptr,
                              grads ? &grads->asp_cand_w : nullptr,
                              grads ? &grads->asp_cand_b : nullptr);
    return prev;
  }

 private:
  // blend = (1 - g) * prev + g * c, g = sigma(Wg z + bg), c = tanh(Wc z + bc),
  // z = [prev, input]. Returns d blend / d prev applied to `adj`.
  static Eigen::VectorXd blend_backward(const Eigen::MatrixXd& gate_w, const Eigen::MatrixXd& cand_w,
                                        const Eigen::VectorXd& gate, const Eigen::VectorXd& cand,
                                        const Eigen::VectorXd& prev, const Eigen::VectorXd& input,
                                        const Eigen::VectorXd& adj, Eigen::MatrixXd* d_gate_w,
                                        Eigen::VectorXd* d_gate_b, Eigen::MatrixXd* d_cand_w,
                                        Eigen::VectorXd* d_cand_b) {
    const Eigen::ArrayXd g = gate.array();
    const Eigen::ArrayXd c = cand.array();
    const Eigen::VectorXd pre_gate = (adj.array() * (c - prev.array()) * g * (1.0 - g)).matrix();
    const Eigen::VectorXd pre_cand = (adj.array() * g * (1.0 - c * c)).matrix();
    if (d_gate_w) {
      const Eigen::VectorXd z = concat(prev, input);
      d_gate_w->noalias() += pre_gate * z.transpose();
      *d_gate_b += pre_gate;
      d_cand_w->noalias() += pre_cand * z.transpose();
      *d_cand_b += pre_cand;
    }
    const auto n = prev.size();
    Eigen::VectorXd d_prev = (adj.array() * (1.0 - g)).matrix();
    d_prev.noalias() += gate_w.leftCols(n).transpose() * pre_gate;
    d_prev.noalias() += cand_w.leftCols(n).transpose() * pre_cand;
    return d_prev;
  }
};

}  // namespace lafee
