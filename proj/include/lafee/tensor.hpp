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

// Generic operations over named parameter tensors. A parameter set is any
// type exposing `visit(f)` that calls f(name, Eigen::Map<MatrixXd>) once per
// tensor in a fixed declared order.

#pragma once

#include <cmath>
#include <concepts>
#include <cstring>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lafee/errors.hpp"

namespace lafee {

using TensorMap = Eigen::Map<Eigen::MatrixXd>;
using ConstTensorMap = Eigen::Map<const Eigen::MatrixXd>;

inline TensorMap as_tensor(Eigen::MatrixXd& m) { return {m.data(), m.rows(), m.cols()}; }
inline TensorMap as_tensor(Eigen::VectorXd& v) { return {v.data(), v.size(), 1}; }
inline TensorMap as_tensor(double& x) { return {&x, 1, 1}; }
inline ConstTensorMap as_tensor(const Eigen::MatrixXd& m) { return {m.data(), m.rows(), m.cols()}; }
inline ConstTensorMap as_tensor(const Eigen::VectorXd& v) { return {v.data(), v.size(), 1}; }
inline ConstTensorMap as_tensor(const double& x) { return {&x, 1, 1}; }

template <typename P>
concept ParameterSet = requires(P& p, const P& cp) {
  p.visit([](std::string_view, TensorMap) {});
  cp.visit([](std::string_view, ConstTensorMap) {});
};

struct NamedTensor {
  std::string_view name;
  TensorMap values;
};

template <ParameterSet P>
std::vector<NamedTensor> named_tensors(P& p) {
  std::vector<NamedTensor> out;
  p.visit([&](std::string_view name, TensorMap t) { out.push_back({name, t}); });
  return out;
}

template <ParameterSet P>
std::vector<std::string> tensor_names(const P& p) {
  std::vector<std::string> out;
  p.visit([&](std::string_view name, ConstTensorMap) { out.emplace_back(name); });
  return out;
}

template <ParameterSet P>
std::size_t parameter_count(const P& p) {
  std::size_t n = 0;
  p.visit([&](std::string_view, ConstTensorMap t) { n += static_cast<std::size_t>(t.size()); });
  return n;
}

template <ParameterSet P>
void set_zero(P& p) {
  p.visit([](std::string_view, TensorMap t) { t.setZero(); });
}

template <ParameterSet P>
P zeros_like(const P& p) {
  P out = p;
  set_zero(out);
  return out;
}

template <ParameterSet P>
double squared_norm(const P& p) {
  double s = 0.0;
  p.visit([&](std::string_view, ConstTensorMap t) { s += t.squaredNorm(); });
  return s;
}

template <ParameterSet P>
double global_norm(const P& p) {
  return std::sqrt(squared_norm(p));
}

template <ParameterSet P>
void scale(P& p, double factor) {
  p.visit([&](std::string_view, TensorMap t) { t *= factor; });
}

// y += a * x, tensor by tensor.
template <ParameterSet P>
void axpy(P& y, double a, const P& x) {
  auto ys = named_tensors(y);
  std::size_t i = 0;
  x.visit([&](std::string_view, ConstTensorMap t) { ys[i++].values += a * t; });
}

// Throws NumericError naming the first tensor holding a non-finite entry.
template <ParameterSet P>
void require_finite(const P& p, std::string_view what) {
  p.visit([&](std::string_view name, ConstTensorMap t) {
    if (!t.allFinite()) {
      throw NumericError("non-finite " + std::string(what) + " in tensor " + std::string(name));
    }
  });
}

// Rescales so that the global norm is at most max_norm. Returns the norm
// before clipping.
template <ParameterSet P>
double clip_global_norm(P& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) scale(grads, max_norm / norm);
  return norm;
}

template <ParameterSet P>
bool bit_identical(const P& a, const P& b) {
  std::vector<Eigen::MatrixXd> av;
  a.visit([&](std::string_view, ConstTensorMap t) { av.emplace_back(t); });
  std::size_t i = 0;
  bool same = true;
  b.visit([&](std::string_view, ConstTensorMap t) {
    if (i >= av.size() || av[i].rows() != t.rows() || av[i].cols() != t.cols() ||
        std::memcmp(av[i].data(), t.data(), sizeof(double) * static_cast<std::size_t>(t.size())) != 0) {
      same = false;
    }
    ++i;
  });
  return same && i == av.size();
}

// Glorot-uniform weights, zero biases. Bias tensors are the ones whose
// name ends in "_b".
template <ParameterSet P>
void glorot_init(P& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  p.visit([&](std::string_view name, TensorMap t) {
    if (name.ends_with("_b")) {
      t.setZero();
      return;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, j) = dist(rng);
    }
  });
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

inline Eigen::VectorXd tanh(const Eigen::VectorXd& x) { return x.array().tanh().matrix(); }

inline Eigen::VectorXd concat(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd z(a.size() + b.size());
  z << a, b;
  return z;
}

}  // namespace lafee
