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

#include <sstream>

#include <gtest/gtest.h>

#include "lafee/checkpoint.hpp"
#include "lafee/lafee_model.hpp"

namespace lafee {
namespace {

template <typename Model>
Checkpoint<Model> sample(const typename Model::Dims& d) {
  Checkpoint<Model> ck{Model::init(d, 3), {}, {}};
  ck.scaler.mean = {1, 2, 3, 4, 5, 6, 7, 8};
  ck.scaler.stddev = {0.5, 1, 1, 1, 1, 1, 1, 2};
  ck.train.seed = 77;
  ck.train.lambda_in = 0.5;
  return ck;
}

template <typename Model>
std::string saved(const Checkpoint<Model>& ck) {
  std::ostringstream os(std::ios::binary);
  save_checkpoint<Model>(os, ck);
  return os.str();
}

TEST(Checkpoint, LaFeeRoundTripBitIdentical) {
  LaFeeDims d;
  d.d_sat = 5;
  auto ck = sample<LaFeeModel>(d);
  ck.params.out_readout_b = -1.25;
  const auto bytes = saved(ck);
  std::istringstream is(bytes, std::ios::binary);
  const auto back = load_checkpoint<LaFeeModel>(is);
  EXPECT_TRUE(bit_identical(back.params, ck.params));
  EXPECT_EQ(back.params.dims, d);
  EXPECT_EQ(back.scaler, ck.scaler);
  EXPECT_EQ(to_json(back.train), to_json(ck.train));
  EXPECT_EQ(saved(back), bytes);
}

TEST(Checkpoint, LstmRoundTripAndHeader) {
  auto ck = sample<LstmModel>(LstmDims{27, 6});
  const auto bytes = saved(ck);
  std::istringstream head(bytes, std::ios::binary);
  const auto h = read_checkpoint_header(head);
  EXPECT_EQ(h["model"], "lstm");
  EXPECT_EQ(h["dims"]["d_hidden"], 6);
  EXPECT_EQ(h["tensors"].size(), 10u);
  // Payload size is exactly the parameter count in float64.
  const auto newline = bytes.find('\n');
  EXPECT_EQ(bytes.size() - newline - 1, parameter_count(ck.params) * 8);
  std::istringstream is(bytes, std::ios::binary);
  EXPECT_TRUE(bit_identical(load_checkpoint<LstmModel>(is).params, ck.params));
}

TEST(Checkpoint, PayloadIsRowMajorLittleEndian) {
  LstmDims d{1, 1};
  auto ck = sample<LstmModel>(d);
  set_zero(ck.params);
  ck.params.forget_w << 1.0, 2.0;  // 1 x 2
  const auto bytes = saved(ck);
  const auto payload = bytes.substr(bytes.find('\n') + 1);
  double first = 0, second = 0;
  std::memcpy(&first, payload.data(), 8);
  std::memcpy(&second, payload.data() + 8, 8);
  if constexpr (std::endian::native == std::endian::little) {
    EXPECT_EQ(first, 1.0);
    EXPECT_EQ(second, 2.0);
  }
}

TEST(Checkpoint, RejectsWrongKindTruncationAndTrailingBytes) {
  const auto bytes = saved(sample<LaFeeModel>(LaFeeDims{}));
  {
    std::istringstream is(bytes, std::ios::binary);
    EXPECT_THROW(load_checkpoint<LstmModel>(is), DataError);
  }
  {
    std::istringstream is(bytes.substr(0, bytes.size() - 3), std::ios::binary);
    EXPECT_THROW(load_checkpoint<LaFeeModel>(is), DataError);
  }
  {
    std::istringstream is(bytes + "x", std::ios::binary);
    EXPECT_THROW(load_checkpoint<LaFeeModel>(is), DataError);
  }
  {
    std::istringstream is("not a checkpoint\n", std::ios::binary);
    EXPECT_THROW(read_checkpoint_header(is), DataError);
  }
}

TEST(Checkpoint, RejectsNonFinitePayload) {
  auto ck = sample<LaFeeModel>(LaFeeDims{});
  ck.params.in_readout_b = std::numeric_limits<double>::quiet_NaN();
  std::istringstream is(saved(ck), std::ios::binary);
  EXPECT_THROW(load_checkpoint<LaFeeModel>(is), NumericError);
}

}  // namespace
}  // namespace lafee
