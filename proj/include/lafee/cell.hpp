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

// The latent-feeling cell. Two latent vectors, satisfaction and aspiration,
// are updated by gated convex blends on every step. An in-game step injects
// satisfaction into aspiration and reads the in-game interval off
// aspiration; a logout step injects aspiration into satisfaction and reads
// the off-game interval off satisfaction. The four gate/candidate
// translations are shared by both paths.

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

struct LaFeeDims {
  Eigen::Index d_state = static_cast<Eigen::Index>(kStateDims);
  Eigen::Index d_action = static_cast<Eigen::Index>(kActionCount);
  Eigen::Index d_sat = 8;
  Eigen::Index d_asp = 19;

  void validate() const {
    if (d_state <= 0 || d_action <= 0 || d_sat <= 0 || d_asp <= 0) {
      throw ConfigError("all LaFee dimensions must be positive");
    }
  }
  friend bool operator==(const LaFeeDims&, const LaFeeDims&) = default;
};

struct LaFeeParams {
  LaFeeDims dims;

  // Shared between both paths.
  Eigen::MatrixXd sat_gate_w;  // d_sat x (d_sat + d_state)
  Eigen::VectorXd sat_gate_b;
  Eigen::MatrixXd sat_cand_w;
  Eigen::VectorXd sat_cand_b;
  Eigen::MatrixXd asp_gate_w;  // d_asp x (d_asp + d_action)
  Eigen::VectorXd asp_gate_b;
  Eigen::MatrixXd asp_cand_w;
  Eigen::VectorXd asp_cand_b;

  // In-game path.
  Eigen::MatrixXd sat_to_asp_w;  // d_asp x d_sat
  Eigen::VectorXd sat_to_asp_b;
  Eigen::MatrixXd in_readout_w;  // 1 x d_asp
  double in_readout_b = 0.0;

  // Logout path.
  Eigen::MatrixXd asp_to_sat_w;  // d_sat x d_asp
  Eigen::VectorXd asp_to_sat_b;
  Eigen::MatrixXd out_readout_w;  // 1 x d_sat
  double out_readout_b = 0.0;

  static LaFeeParams zeros(const LaFeeDims& d) {
    d.validate();
    LaFeeParams p;
    p.dims = d;
    p.sat_gate_w = Eigen::MatrixXd::Zero(d.d_sat, d.d_sat + d.d_state);
    p.sat_gate_b = Eigen::VectorXd::Zero(d.d_sat);
    p.sat_cand_w = Eigen::MatrixXd::Zero(d.d_sat, d.d_sat + d.d_state);
    p.sat_cand_b = Eigen::VectorXd::Zero(d.d_sat);
    p.asp_gate_w = Eigen::MatrixXd::Zero(d.d_asp, d.d_asp + d.d_action);
    p.asp_gate_b = Eigen::VectorXd::Zero(d.d_asp);
    p.asp_cand_w = Eigen::MatrixXd::Zero(d.d_asp, d.d_asp + d.d_action);
    p.asp_cand_b = Eigen::VectorXd::Zero(d.d_asp);
    p.sat_to_asp_w = Eigen::MatrixXd::Zero(d.d_asp, d.d_sat);
    p.sat_to_asp_b = Eigen::VectorXd::Zero(d.d_asp);
    p.in_readout_w = Eigen::MatrixXd::Zero(1, d.d_asp);
    p.asp_to_sat_w = Eigen::MatrixXd::Zero(d.d_sat, d.d_asp);
    p.asp_to_sat_b = Eigen::VectorXd::Zero(d.d_sat);
    p.out_readout_w = Eigen::MatrixXd::Zero(1, d.d_sat);
    return p;
  }

  static LaFeeParams init(const LaFeeDims& d, std::uint64_t seed) {
    LaFeeParams p = zeros(d);
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
    f("sat_gate_w", as_tensor(s.sat_gate_w));
    f("sat_gate_b", as_tensor(s.sat_gate_b));
    f("sat_cand_w", as_tensor(s.sat_cand_w));
    f("sat_cand_b", as_tensor(s.sat_cand_b));
    f("asp_gate_w", as_tensor(s.asp_gate_w));
    f("asp_gate_b", as_tensor(s.asp_gate_b));
    f("asp_cand_w", as_tensor(s.asp_cand_w));
    f("asp_cand_b", as_tensor(s.asp_cand_b));
    f("sat_to_asp_w", as_tensor(s.sat_to_asp_w));
    f("sat_to_asp_b", as_tensor(s.sat_to_asp_b));
    f("in_readout_w", as_tensor(s.in_readout_w));
    f("in_readout_b", as_tensor(s.in_readout_b));
    f("asp_to_sat_w", as_tensor(s.asp_to_sat_w));
    f("asp_to_sat_b", as_tensor(s.asp_to_sat_b));
    f("out_readout_w", as_tensor(s.out_readout_w));
    f("out_readout_b", as_tensor(s.out_readout_b));
  }
};

// Names of the translations used by both paths.
inline const std::vector<std::string>& shared_tensor_names() {
  static const std::vector<std::string> names = {"sat_gate_w", "sat_gate_b", "sat_cand_w",
                                                 "sat_cand_b", "asp_gate_w", "asp_gate_b",
                                                 "asp_cand_w", "asp_cand_b"};
  return names;
}

struct LatentState {
  Eigen::VectorXd sat;
  Eigen::VectorXd asp;

  static LatentState zeros(const LaFeeDims& d) {
    return {Eigen::VectorXd::Zero(d.d_sat), Eigen::VectorXd::Zero(d.d_asp)};
  }
  friend bool operator==(const LatentState& a, const LatentState& b) {
    return a.sat.size() == b.sat.size() && a.asp.size() == b.asp.size() && a.sat == b.sat &&
           a.asp == b.asp;
  }
};

enum class Path : std::uint8_t { In, Out };

inline Path path_for(IntervalKind k) { return k == IntervalKind::OffGame ? Path::Out : Path::In; }

struct StepTrace {
  LatentState before;
  LatentState after;
  Eigen::VectorXd sat_gate;
  Eigen::VectorXd sat_cand;
  Eigen::VectorXd asp_gate;
  Eigen::VectorXd asp_cand;
  double prediction = 0.0;  // transformed interval
  Path path = Path::In;
};

namespace detail {

inline void check_finite(const Eigen::VectorXd& v, std::string_view tensor) {
  if (!v.allFinite()) throw NumericError("non-finite value in " + std::string(tensor));
}

inline void check_inputs(const LaFeeParams& p, const LatentState& prev, const Eigen::VectorXd& state,
                         const Eigen::VectorXd& action) {
  const auto& d = p.dims;
  if (prev.sat.size() != d.d_sat || prev.asp.size() != d.d_asp || state.size() != d.d_state ||
      action.size() != d.d_action) {
    throw ConfigError("LaFee step inputs do not match parameter dimensions");
  }
}

// Gated convex blend shared by both latents: returns (gate, candidate, blend).
inline void gated_update(const Eigen::MatrixXd& gate_w, const Eigen::VectorXd& gate_b,
                         const Eigen::MatrixXd& cand_w, const Eigen::VectorXd& cand_b,
                         const Eigen::VectorXd& prev, const Eigen::VectorXd& input,
                         Eigen::VectorXd& gate, Eigen::VectorXd& cand, Eigen::VectorXd& blend) {
  const Eigen::VectorXd z = concat(prev, input);
  gate = sigmoid(gate_w * z + gate_b);
  cand = lafee::tanh(cand_w * z + cand_b);
  blend = (1.0 - gate.array()) * prev.array() + gate.array() * cand.array();
}

}  // namespace detail

// In-game step: satisfaction first, then aspiration with satisfaction
// injected, then the interval read off aspiration.
inline StepTrace step_in(const LaFeeParams& p, const LatentState& prev, const Eigen::VectorXd& state,
                         const Eigen::VectorXd& action) {
  detail::check_inputs(p, prev, state, action);
  StepTrace tr;
  tr.path = Path::In;
  tr.before = prev;
  detail::gated_update(p.sat_gate_w, p.sat_gate_b, p.sat_cand_w, p.sat_cand_b, prev.sat, state,
                       tr.sat_gate, tr.sat_cand, tr.after.sat);
  detail::check_finite(tr.after.sat, "satisfaction");
  detail::gated_update(p.asp_gate_w, p.asp_gate_b, p.asp_cand_w, p.asp_cand_b, prev.asp, action,
                       tr.asp_gate, tr.asp_cand, tr.after.asp);
  tr.after.asp += p.sat_to_asp_w * tr.after.sat + p.sat_to_asp_b;
  detail::check_finite(tr.after.asp, "aspiration");
  tr.prediction = (p.in_readout_w * tr.after.asp)(0) + p.in_readout_b;
  if (!std::isfinite(tr.prediction)) throw NumericError("non-finite value in in-game prediction");
  return tr;
}

// Logout step: aspiration first, then satisfaction with aspiration
// injected, then the interval read off satisfaction.
inline StepTrace step_out(const LaFeeParams& p, const LatentState& prev, const Eigen::VectorXd& state,
                          const Eigen::VectorXd& action) {
  detail::check_inputs(p, prev, state, action);
  StepTrace tr;
  tr.path = Path::Out;
  tr.before = prev;
  detail::gated_update(p.asp_gate_w, p.asp_gate_b, p.asp_cand_w, p.asp_cand_b, prev.asp, action,
                       tr.asp_gate, tr.asp_cand, tr.after.asp);
  detail::check_finite(tr.after.asp, "aspiration");
  detail::gated_update(p.sat_gate_w, p.sat_gate_b, p.sat_cand_w, p.sat_cand_b, prev.sat, state,
                       tr.sat_gate, tr.sat_cand, tr.after.sat);
  tr.after.sat += p.asp_to_sat_w * tr.after.asp + p.asp_to_sat_b;
  detail::check_finite(tr.after.sat, "satisfaction");
  tr.prediction = (p.out_readout_w * tr.after.sat)(0) + p.out_readout_b;
  if (!std::isfinite(tr.prediction)) throw NumericError("non-finite value in logout prediction");
  return tr;
}

inline StepTrace step(const LaFeeParams& p, const LatentState& prev, const EncodedStep& s) {
  return path_for(s.kind) == Path::Out ? step_out(p, prev, s.state, s.action)
                                       : step_in(p, prev, s.state, s.action);
}

// Left-to-right pass; the latent threads through every step, sessions included.
inline std::vector<StepTrace> forward_sequence(const LaFeeParams& p, const EncodedSequence& seq,
                                               const LatentState& init) {
  std::vector<StepTrace> traces;
  traces.reserve(seq.steps.size());
  const LatentState* prev = &init;
  for (std::size_t j = 0; j < seq.steps.size(); ++j) {
    try {
      traces.push_back(step(p, *prev, seq.steps[j]));
    } catch (const NumericError& e) {
      throw NumericError("step " + std::to_string(j) + " of '" + seq.user_id + "': " + e.what());
    }
    prev = &traces.back().after;
  }
  return traces;
}

inline std::vector<StepTrace> forward_sequence(const LaFeeParams& p, const EncodedSequence& seq) {
  return forward_sequence(p, seq, LatentState::zeros(p.dims));
}

}  // namespace lafee
