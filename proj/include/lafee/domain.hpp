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

// Core data model: actions, states, play sequences and their 29-dim
// encoding, plus the line-delimited step interchange format.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <random>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lafee/errors.hpp"

namespace lafee {

inline constexpr std::size_t kStateDims = 8;
inline constexpr std::size_t kActionCount = 19;
inline constexpr std::size_t kStepVectorDims = kStateDims + kActionCount + 1;

// Stable enumeration; the numeric value is the one-hot index.
enum class Action : std::uint8_t {
  LoginRole = 0,
  LogoutRole,
  ReplaceRole,
  PrivateGame,
  QuickMatch1V1,
  QuickMatch2V2,
  DailyTaskFinish,
  DailyTaskReward,
  DailySign,
  DailySignReward,
  RewardAchievement,
  InviteLog,
  ShareLog,
  FollowLog,
  PraisePlayRound,
  RoomModeCreate,
  ConsumeItem,
  GuideInfo,
  AdsLog,
};

inline constexpr std::array<std::string_view, kActionCount> kActionNames = {
    "LoginRole",       "LogoutRole",        "ReplaceRole",     "PrivateGame",
    "QuickMatch1V1",   "QuickMatch2V2",     "DailyTaskFinish", "DailyTaskReward",
    "DailySign",       "DailySignReward",   "RewardAchievement", "InviteLog",
    "ShareLog",        "FollowLog",         "PraisePlayRound", "RoomModeCreate",
    "ConsumeItem",     "GuideInfo",         "AdsLog",
};

inline constexpr std::array<std::string_view, kStateDims> kStateNames = {
    "Gold",           "Experience", "EmojisSent", "GiftsSent",
    "AchievementGot", "ItemNum",    "GradeUp",    "OnlineDuration",
};

enum StateIndex : std::size_t {
  kGold = 0,
  kExperience,
  kEmojisSent,
  kGiftsSent,
  kAchievementGot,
  kItemNum,
  kGradeUp,
  kOnlineDuration,
};

inline constexpr std::size_t action_index(Action a) { return static_cast<std::size_t>(a); }

inline constexpr Action action_from_index(std::size_t i) { return static_cast<Action>(i); }

inline std::string_view action_name(Action a) { return kActionNames[action_index(a)]; }

inline std::optional<Action> find_action(std::string_view name) {
  for (std::size_t i = 0; i < kActionCount; ++i) {
    if (kActionNames[i] == name) return action_from_index(i);
  }
  return std::nullopt;
}

inline Action parse_action(std::string_view name) {
  if (auto a = find_action(name)) return *a;
  throw DataError("unknown action label '" + std::string(name) + "'");
}

// Actions whose steps carry a win flag and count as match games.
inline std::set<Action> default_match_actions() {
  return {Action::QuickMatch1V1, Action::QuickMatch2V2};
}

using StateVector = std::array<double, kStateDims>;

enum class IntervalKind : std::uint8_t { InGame, OffGame };

inline IntervalKind kind_for(Action a) {
  return a == Action::LogoutRole ? IntervalKind::OffGame : IntervalKind::InGame;
}

struct Step {
  StateVector state{};
  Action action = Action::LoginRole;
  double interval_seconds = 0.0;
  IntervalKind kind = IntervalKind::InGame;
  std::optional<bool> win;

  friend bool operator==(const Step&, const Step&) = default;
};

struct PlaySequence {
  std::string user_id;
  std::vector<Step> steps;

  friend bool operator==(const PlaySequence&, const PlaySequence&) = default;
};

struct Dataset {
  std::vector<PlaySequence> sequences;

  std::size_t step_count() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.steps.size();
    return n;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

inline void validate_step(const Step& step) {
  if ((step.kind == IntervalKind::OffGame) != (step.action == Action::LogoutRole)) {
    throw DataError("step kind disagrees with action " + std::string(action_name(step.action)));
  }
  if (!std::isfinite(step.interval_seconds) || step.interval_seconds < 0.0) {
    throw DataError("interval must be finite and nonnegative");
  }
  for (std::size_t d = 0; d < kStateDims; ++d) {
    if (!std::isfinite(step.state[d])) {
      throw DataError("non-finite state component " + std::string(kStateNames[d]));
    }
    // Gold and ItemNum are balances and may dip below zero; the rest are counts.
    if (d != kGold && d != kItemNum && step.state[d] < 0.0) {
      throw DataError("negative count in state component " + std::string(kStateNames[d]));
    }
  }
}

inline void validate(const PlaySequence& seq) {
  if (seq.steps.empty()) throw DataError("sequence '" + seq.user_id + "' is empty");
  for (const auto& st : seq.steps) validate_step(st);
}

inline void validate(const Dataset& ds) {
  std::set<std::string> seen;
  for (const auto& seq : ds.sequences) {
    if (!seen.insert(seq.user_id).second) {
      throw DataError("duplicate user_id '" + seq.user_id + "'");
    }
    validate(seq);
  }
}

struct ChurnCriterion {
  double tau_seconds;

  explicit ChurnCriterion(double seconds) : tau_seconds(seconds) {
    if (!(seconds > 0.0) || !std::isfinite(seconds)) {
      throw ConfigError("churn criterion must be a positive number of seconds");
    }
  }

  static ChurnCriterion from_days(double days) { return ChurnCriterion(86400.0 * days); }
  double days() const { return tau_seconds / 86400.0; }
};

// ---------------------------------------------------------------------------
// Interval transform

enum class TargetTransform : std::uint8_t { Ln1p, Identity };

inline double transform_interval(double seconds, TargetTransform t) {
  return t == TargetTransform::Ln1p ? std::log1p(seconds) : seconds;
}

inline double inverse_transform_interval(double y, TargetTransform t) {
  if (t == TargetTransform::Identity) return y;
  // Predictions below ln(1) map to zero seconds.
  return y <= 0.0 ? 0.0 : std::expm1(y);
}

inline std::string_view transform_name(TargetTransform t) {
  return t == TargetTransform::Ln1p ? "ln1p" : "identity";
}

inline TargetTransform parse_transform(std::string_view s) {
  if (s == "ln1p") return TargetTransform::Ln1p;
  if (s == "identity") return TargetTransform::Identity;
  throw ConfigError("unknown target transform '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Encoding

inline constexpr double kStdFloor = 1e-8;

struct StateScaler {
  StateVector mean{};
  StateVector stddev{1, 1, 1, 1, 1, 1, 1, 1};

  static StateScaler fit(const Dataset& train) {
    StateScaler sc;
    std::array<double, kStateDims> sum{}, sumsq{};
    std::size_t n = 0;
    for (const auto& seq : train.sequences) {
      for (const auto& st : seq.steps) {
        for (std::size_t d = 0; d < kStateDims; ++d) sum[d] += st.state[d];
        ++n;
      }
    }
    if (n == 0) throw DataError("cannot fit state scaler on an empty split");
    for (std::size_t d = 0; d < kStateDims; ++d) sc.mean[d] = sum[d] / static_cast<double>(n);
    for (const auto& seq : train.sequences) {
      for (const auto& st : seq.steps) {
        for (std::size_t d = 0; d < kStateDims; ++d) {
          const double c = st.state[d] - sc.mean[d];
          sumsq[d] += c * c;
        }
      }
    }
    for (std::size_t d = 0; d < kStateDims; ++d) {
      sc.stddev[d] = std::max(std::sqrt(sumsq[d] / static_cast<double>(n)), kStdFloor);
    }
    return sc;
  }

  double apply(std::size_t d, double x) const { return (x - mean[d]) / stddev[d]; }

  friend bool operator==(const StateScaler&, const StateScaler&) = default;
};

// 8 standardized state values, 19 one-hot action entries, 1 transformed interval.
using StepVector = std::array<double, kStepVectorDims>;

inline StepVector encode_step(const Step& step, const StateScaler& scaler,
                              TargetTransform transform = TargetTransform::Ln1p) {
  const auto a = action_index(step.action);
  if (a >= kActionCount) throw DataError("unknown action label index " + std::to_string(a));
  StepVector v{};
  for (std::size_t d = 0; d < kStateDims; ++d) v[d] = scaler.apply(d, step.state[d]);
  v[kStateDims + a] = 1.0;
  v[kStateDims + kActionCount] = transform_interval(step.interval_seconds, transform);
  return v;
}

// Encoded step in the form the recurrent models consume.
struct EncodedStep {
  Eigen::VectorXd state;   // standardized, kStateDims
  Eigen::VectorXd action;  // one-hot, kActionCount
  double target = 0.0;     // transformed interval
  double interval_seconds = 0.0;
  IntervalKind kind = IntervalKind::InGame;
  Action label = Action::LoginRole;
};

struct EncodedSequence {
  std::string user_id;
  std::vector<EncodedStep> steps;
};

struct EncodedDataset {
  std::vector<EncodedSequence> sequences;
  TargetTransform transform = TargetTransform::Ln1p;
};

inline EncodedStep to_encoded(const Step& step, const StateScaler& scaler, TargetTransform t) {
  const StepVector v = encode_step(step, scaler, t);
  EncodedStep e;
  e.state = Eigen::Map<const Eigen::VectorXd>(v.data(), kStateDims);
  e.action = Eigen::Map<const Eigen::VectorXd>(v.data() + kStateDims, kActionCount);
  e.target = v[kStepVectorDims - 1];
  e.interval_seconds = step.interval_seconds;
  e.kind = step.kind;
  e.label = step.action;
  return e;
}

inline EncodedSequence encode_sequence(const PlaySequence& seq, const StateScaler& scaler,
                                       TargetTransform t = TargetTransform::Ln1p) {
  EncodedSequence out{seq.user_id, {}};
  out.steps.reserve(seq.steps.size());
  for (const auto& st : seq.steps) out.steps.push_back(to_encoded(st, scaler, t));
  return out;
}

inline EncodedDataset encode_dataset(const Dataset& ds, const StateScaler& scaler,
                                     TargetTransform t = TargetTransform::Ln1p) {
  EncodedDataset out;
  out.transform = t;
  out.sequences.reserve(ds.sequences.size());
  for (const auto& seq : ds.sequences) out.sequences.push_back(encode_sequence(seq, scaler, t));
  return out;
}

inline std::pair<std::vector<Step>, std::vector<Step>> split_by_kind(const PlaySequence& seq) {
  std::vector<Step> in, out;
  for (const auto& st : seq.steps) {
    (st.action == Action::LogoutRole ? out : in).push_back(st);
  }
  return {std::move(in), std::move(out)};
}

// Restricts a dataset to the given user ids, preserving dataset order.
inline Dataset subset(const Dataset& ds, const std::set<std::string>& users) {
  Dataset out;
  for (const auto& seq : ds.sequences) {
    if (users.contains(seq.user_id)) out.sequences.push_back(seq);
  }
  return out;
}

struct UserSplit {
  std::set<std::string> train;
  std::set<std::string> test;
};

// Seeded user-level split: users are shuffled in dataset order and the first
// floor(train_fraction * n) go to the training side.
inline UserSplit split_users(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie strictly between 0 and 1");
  }
  std::vector<std::string> ids;
  ids.reserve(ds.sequences.size());
  for (const auto& seq : ds.sequences) ids.push_back(seq.user_id);
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  // The epsilon keeps e.g. 0.7 * 500 from flooring to 349.
  const auto n_train =
      static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(ids.size()) + 1e-9));
  UserSplit split;
  split.train.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.test.insert(ids.begin() + static_cast<std::ptrdiff_t>(n_train), ids.end());
  return split;
}

// ---------------------------------------------------------------------------
// Step interchange format: one tab-separated record per step,
//   user_id  action  <8 state values>  interval_seconds  kind  win_flag
// kind is "in" or "out"; win_flag is "1", "0" or empty.

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string step_file_header() {
  std::string h = "#user_id\taction";
  for (auto n : kStateNames) {
    h += '\t';
    h += n;
  }
  h += "\tinterval_seconds\tkind\twin_flag";
  return h;
}

inline void write_steps(std::ostream& os, const Dataset& ds) {
  os << step_file_header() << '\n';
  for (const auto& seq : ds.sequences) {
    if (seq.user_id.find_first_of("\t\n") != std::string::npos) {
      throw DataError("user_id contains a tab or newline: '" + seq.user_id + "'");
    }
    for (const auto& st : seq.steps) {
      os << seq.user_id << '\t' << action_name(st.action);
      for (double v : st.state) os << '\t' << format_double(v);
      os << '\t' << format_double(st.interval_seconds) << '\t'
         << (st.kind == IntervalKind::OffGame ? "out" : "in") << '\t';
      if (st.win) os << (*st.win ? '1' : '0');
      os << '\n';
    }
  }
}

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_number(const std::string& s, std::size_t line_no, std::string_view field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": bad number '" + s + "' in field " +
                    std::string(field));
  }
}

}  // namespace detail

inline Dataset read_steps(std::istream& is) {
  Dataset ds;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto f = detail::split_tabs(line);
    if (f.size() != kStateDims + 5) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(kStateDims + 5) + " fields, got " + std::to_string(f.size()));
    }
    Step st;
    try {
      st.action = parse_action(f[1]);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    for (std::size_t d = 0; d < kStateDims; ++d) {
      st.state[d] = detail::parse_number(f[2 + d], line_no, kStateNames[d]);
    }
    st.interval_seconds = detail::parse_number(f[2 + kStateDims], line_no, "interval_seconds");
    const auto& kind = f[3 + kStateDims];
    if (kind == "in") {
      st.kind = IntervalKind::InGame;
    } else if (kind == "out") {
      st.kind = IntervalKind::OffGame;
    } else {
      throw DataError("line " + std::to_string(line_no) + ": bad kind '" + kind + "'");
    }
    const auto& win = f[4 + kStateDims];
    if (win == "1") {
      st.win = true;
    } else if (win == "0") {
      st.win = false;
    } else if (!win.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": bad win_flag '" + win + "'");
    }
    try {
      validate_step(st);
    } catch (const DataError& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    auto [it, inserted] = index.try_emplace(f[0], ds.sequences.size());
    if (inserted) {
      ds.sequences.push_back({f[0], {}});
    } else if (it->second + 1 != ds.sequences.size()) {
      throw DataError("line " + std::to_string(line_no) + ": records of user '" + f[0] +
                      "' are not contiguous");
    }
    ds.sequences[it->second].steps.push_back(st);
  }
  return ds;
}

}  // namespace lafee
