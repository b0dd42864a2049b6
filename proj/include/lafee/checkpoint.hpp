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

// Checkpoint file: one line of JSON metadata (model kind, dims, scaler,
// tensor layout, training config), then every tensor as little-endian
// float64 in declared order, row-major.

#pragma once

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lafee/cell.hpp"
#include "lafee/domain.hpp"
#include "lafee/errors.hpp"
#include "lafee/lstm.hpp"
#include "lafee/tensor.hpp"
#include "lafee/train.hpp"

namespace lafee {

inline constexpr std::string_view kCheckpointFormat = "lafee-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json dims_to_json(const LaFeeDims& d) {
  return {{"d_state", d.d_state}, {"d_action", d.d_action}, {"d_sat", d.d_sat}, {"d_asp", d.d_asp}};
}

inline nlohmann::json dims_to_json(const LstmDims& d) {
  return {{"d_input", d.d_input}, {"d_hidden", d.d_hidden}};
}

inline void dims_from_json(const nlohmann::json& j, LaFeeDims& d) {
  d.d_state = j.value("d_state", d.d_state);
  d.d_action = j.value("d_action", d.d_action);
  d.d_sat = j.value("d_sat", d.d_sat);
  d.d_asp = j.value("d_asp", d.d_asp);
  d.validate();
}

inline void dims_from_json(const nlohmann::json& j, LstmDims& d) {
  d.d_input = j.value("d_input", d.d_input);
  d.d_hidden = j.value("d_hidden", d.d_hidden);
  d.validate();
}

template <typename Model>
struct Checkpoint {
  typename Model::Params params;
  StateScaler scaler;
  TrainConfig train;
};

namespace detail {

inline void put_f64(std::ostream& os, double x) {
  unsigned char b[8];
  std::memcpy(b, &x, 8);
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + 8);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw DataError("checkpoint: truncated tensor payload");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + 8);
  double x;
  std::memcpy(&x, b, 8);
  return x;
}

}  // namespace detail

template <typename Model>
void save_checkpoint(std::ostream& os, const Checkpoint<Model>& ck) {
  nlohmann::json tensors = nlohmann::json::array();
  ck.params.visit([&](std::string_view name, ConstTensorMap t) {
    tensors.push_back({{"name", std::string(name)}, {"rows", t.rows()}, {"cols", t.cols()}});
  });
  const nlohmann::json header = {
      {"format", std::string(kCheckpointFormat)},
      {"version", kCheckpointVersion},
      {"model", std::string(Model::kind)},
      {"dims", dims_to_json(ck.params.dims)},
      {"scaler", {{"mean", ck.scaler.mean}, {"stddev", ck.scaler.stddev}}},
      {"train", to_json(ck.train)},
      {"tensors", tensors},
  };
  os << header.dump() << '\n';
  ck.params.visit([&](std::string_view, ConstTensorMap t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) detail::put_f64(os, t(r, c));
    }
  });
  if (!os) throw DataError("checkpoint: write failed");
}

// Reads only the metadata line, e.g. to dispatch on the model kind.
inline nlohmann::json read_checkpoint_header(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("checkpoint: empty file");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw DataError("checkpoint: malformed header");
  }
  if (!header.is_object() || header.value("format", "") != kCheckpointFormat) {
    throw DataError("checkpoint: not a checkpoint file");
  }
  if (header.value("version", 0) != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + header.value("version", nlohmann::json()).dump());
  }
  return header;
}

template <typename Model>
Checkpoint<Model> load_checkpoint(std::istream& is) {
  const auto header = read_checkpoint_header(is);
  const auto kind = header.value("model", "");
  if (kind != Model::kind) {
    throw DataError("checkpoint holds a '" + kind + "' model, expected '" + std::string(Model::kind) + "'");
  }
  Checkpoint<Model> ck;
  try {
    typename Model::Dims dims;
    dims_from_json(header.at("dims"), dims);
    ck.params = Model::Params::zeros(dims);
    const auto& sc = header.at("scaler");
    ck.scaler.mean = sc.at("mean").get<StateVector>();
    ck.scaler.stddev = sc.at("stddev").get<StateVector>();
    ck.train = train_config_from_json(header.at("train"));
    const auto& tensors = header.at("tensors");
    std::size_t i = 0;
    ck.params.visit([&](std::string_view name, TensorMap t) {
      if (i >= tensors.size() || tensors[i].at("name").get<std::string>() != name ||
          tensors[i].at("rows").get<Eigen::Index>() != t.rows() ||
          tensors[i].at("cols").get<Eigen::Index>() != t.cols()) {
        throw DataError("checkpoint: tensor layout mismatch at '" + std::string(name) + "'");
      }
      ++i;
    });
    if (i != tensors.size()) throw DataError("checkpoint: unexpected extra tensors");
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("checkpoint: bad header: ") + e.what());
  }
  ck.params.visit([&](std::string_view, TensorMap t) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = detail::get_f64(is);
    }
  });
  if (is.peek() != std::char_traits<char>::eof()) throw DataError("checkpoint: trailing bytes");
  require_finite(ck.params, "checkpoint");
  return ck;
}

}  // namespace lafee
