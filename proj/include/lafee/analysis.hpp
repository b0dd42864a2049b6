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

// Post-hoc analyses over extracted latent feelings: player cohorts,
// satisfaction against recent win rate and against logout time, and the
// per-action average aspiration matrix.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lafee/cell.hpp"
#include "lafee/domain.hpp"
#include "lafee/errors.hpp"

namespace lafee::analysis {

// Ranks starting at 1; tied values share their average rank.
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("correlation needs two equal-length samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

// ---------------------------------------------------------------- cohorts

inline constexpr double kCohortFraction = 0.2;

struct UserActivity {
  std::string user_id;
  std::size_t steps = 0;
  std::size_t matches = 0;         // steps whose action is a match action
  std::size_t flagged_matches = 0; // matches with a win flag
  std::size_t wins = 0;

  double win_rate() const {
    return flagged_matches == 0 ? 0.0 : static_cast<double>(wins) / static_cast<double>(flagged_matches);
  }
  double match_share() const {
    return steps == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(steps);
  }
};

inline std::vector<UserActivity> user_activity(const Dataset& ds,
                                               const std::set<Action>& match_actions = default_match_actions()) {
  std::vector<UserActivity> out;
  out.reserve(ds.sequences.size());
  for (const auto& seq : ds.sequences) {
    UserActivity u;
    u.user_id = seq.user_id;
    u.steps = seq.steps.size();
    for (const auto& s : seq.steps) {
      if (!match_actions.contains(s.action)) continue;
      ++u.matches;
      if (s.win) {
        ++u.flagged_matches;
        u.wins += *s.win;
      }
    }
    out.push_back(std::move(u));
  }
  return out;
}

struct CohortFlags {
  bool high_win_rate = false;
  bool low_win_rate = false;
  bool battle = false;
  bool social = false;
};

struct CohortAssignment {
  std::map<std::string, CohortFlags> flags;     // every user
  std::vector<std::string> no_match_users;      // excluded from win-rate cohorts

  std::set<std::string> members(std::string_view cohort) const {
    std::set<std::string> out;
    for (const auto& [user, f] : flags) {
      if (cohort == "All" || (cohort == "HighWinRate" && f.high_win_rate) ||
          (cohort == "LowWinRate" && f.low_win_rate) || (cohort == "BattlePlayer" && f.battle) ||
          (cohort == "SocialPlayer" && f.social)) {
        out.insert(user);
      }
    }
    return out;
  }
};

inline constexpr std::array<std::string_view, 5> kCohortNames = {"All", "HighWinRate", "LowWinRate",
                                                                 "BattlePlayer", "SocialPlayer"};

namespace detail {

// Sorts by (value, user_id) and returns the first and last k user ids.
inline std::pair<std::vector<std::string>, std::vector<std::string>> extremes(
    std::vector<std::pair<double, std::string>> keyed) {
  std::sort(keyed.begin(), keyed.end());
  const auto k = static_cast<std::size_t>(std::floor(kCohortFraction * static_cast<double>(keyed.size())));
  std::vector<std::string> low, high;
  for (std::size_t i = 0; i < k; ++i) {
    low.push_back(keyed[i].second);
    high.push_back(keyed[keyed.size() - 1 - i].second);
  }
  return {low, high};
}

}  // namespace detail

// Top and bottom 20% (floor) by overall win rate among users with at least
// one flagged match, and by match-action share among all users. Ties are
// ordered by user_id.
inline CohortAssignment assign_cohorts(const Dataset& ds,
                                       const std::set<Action>& match_actions = default_match_actions()) {
  CohortAssignment out;
  std::vector<std::pair<double, std::string>> by_rate, by_share;
  for (const auto& u : user_activity(ds, match_actions)) {
    out.flags[u.user_id] = {};
    by_share.emplace_back(u.match_share(), u.user_id);
    if (u.flagged_matches == 0) {
      out.no_match_users.push_back(u.user_id);
    } else {
      by_rate.emplace_back(u.win_rate(), u.user_id);
    }
  }
  const auto [low_rate, high_rate] = detail::extremes(std::move(by_rate));
  for (const auto& u : low_rate) out.flags[u].low_win_rate = true;
  for (const auto& u : high_rate) out.flags[u].high_win_rate = true;
  const auto [social, battle] = detail::extremes(std::move(by_share));
  for (const auto& u : social) out.flags[u].social = true;
  for (const auto& u : battle) out.flags[u].battle = true;
  return out;
}

inline void write_cohorts(std::ostream& os, const CohortAssignment& c) {
  os << "user_id,HighWinRate,LowWinRate,BattlePlayer,SocialPlayer\n";
  for (const auto& [user, f] : c.flags) {
    os << user << ',' << f.high_win_rate << ',' << f.low_win_rate << ',' << f.battle << ','
       << f.social << '\n';
  }
}

// ---------------------------------------------------------------- latents

// Readout: the interval readout projection of each latent, negated so that
// larger values mean a shorter predicted interval. Mean: the plain average
// of the latent's components.
enum class Scalarization : std::uint8_t { Readout, Mean };

inline Scalarization parse_scalarization(std::string_view s) {
  if (s == "readout") return Scalarization::Readout;
  if (s == "mean") return Scalarization::Mean;
  throw ConfigError("unknown scalarization '" + std::string(s) + "'");
}

struct LatentRow {
  std::string user_id;
  std::size_t step_index = 0;
  Action action = Action::LoginRole;
  IntervalKind kind = IntervalKind::InGame;
  double interval_seconds = 0.0;
  double satisfaction = 0.0;
  double aspiration = 0.0;
  Eigen::VectorXd sat;
  Eigen::VectorXd asp;
};

struct LatentTable {
  std::vector<LatentRow> rows;  // sequence-major, step order within a sequence
};

inline double satisfaction_scalar(const LaFeeParams& p, const Eigen::VectorXd& sat, Scalarization mode) {
  if (mode == Scalarization::Mean) return sat.size() == 0 ? 0.0 : sat.mean();
  return -((p.out_readout_w * sat)(0) + p.out_readout_b);
}

inline double aspiration_scalar(const LaFeeParams& p, const Eigen::VectorXd& asp, Scalarization mode) {
  if (mode == Scalarization::Mean) return asp.size() == 0 ? 0.0 : asp.mean();
  return -((p.in_readout_w * asp)(0) + p.in_readout_b);
}

inline LatentTable extract_latents(const LaFeeParams& p, const EncodedDataset& ds,
                                   Scalarization mode = Scalarization::Readout) {
  LatentTable table;
  for (const auto& seq : ds.sequences) {
    const auto traces = forward_sequence(p, seq);
    for (std::size_t j = 0; j < traces.size(); ++j) {
      const auto& t = traces[j];
      const auto& s = seq.steps[j];
      table.rows.push_back({seq.user_id, j, s.label, s.kind, s.interval_seconds,
                            satisfaction_scalar(p, t.after.sat, mode),
                            aspiration_scalar(p, t.after.asp, mode), t.after.sat, t.after.asp});
    }
  }
  return table;
}

inline void write_latents(std::ostream& os, const LatentTable& t) {
  const auto d_sat = t.rows.empty() ? 0 : t.rows.front().sat.size();
  const auto d_asp = t.rows.empty() ? 0 : t.rows.front().asp.size();
  os << "user_id,step_index,action,kind,interval_seconds,satisfaction,aspiration";
  for (Eigen::Index i = 0; i < d_sat; ++i) os << ",sat_" << i;
  for (Eigen::Index i = 0; i < d_asp; ++i) os << ",asp_" << i;
  os << '\n';
  for (const auto& r : t.rows) {
    os << r.user_id << ',' << r.step_index << ',' << action_name(r.action) << ','
       << (r.kind == IntervalKind::OffGame ? "out" : "in") << ',' << format_double(r.interval_seconds)
       << ',' << format_double(r.satisfaction) << ',' << format_double(r.aspiration);
    for (Eigen::Index i = 0; i < r.sat.size(); ++i) os << ',' << format_double(r.sat(i));
    for (Eigen::Index i = 0; i < r.asp.size(); ++i) os << ',' << format_double(r.asp(i));
    os << '\n';
  }
}

// Per-user mean aspiration vectors (for radar-style comparisons).
inline std::map<std::string, Eigen::VectorXd> mean_aspiration_by_user(const LatentTable& t) {
  std::map<std::string, Eigen::VectorXd> sums;
  std::map<std::string, std::size_t> counts;
  for (const auto& r : t.rows) {
    auto [it, fresh] = sums.try_emplace(r.user_id, Eigen::VectorXd::Zero(r.asp.size()));
    it->second += r.asp;
    ++counts[r.user_id];
  }
  for (auto& [user, v] : sums) v /= static_cast<double>(counts[user]);
  return sums;
}

// ---------------------------------------------------------------- binning

struct Bin {
  std::string label;
  double lower = 0.0;
  double upper = 0.0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
};

struct BinnedTable {
  std::vector<Bin> bins;
  std::size_t samples = 0;

  std::vector<double> populated_means() const {
    std::vector<double> out;
    for (const auto& b : bins) {
      if (b.count > 0) out.push_back(b.mean);
    }
    return out;
  }
};

inline void write_binned(std::ostream& os, const BinnedTable& t) {
  os << "bin,lower,upper,mean,count\n";
  for (const auto& b : t.bins) {
    os << b.label << ',' << format_double(b.lower) << ',' << format_double(b.upper) << ','
       << (b.count ? format_double(b.mean) : std::string()) << ',' << b.count << '\n';
  }
}

// Number of adjacent pairs (a, b) in `values` with b > a.
inline std::size_t increases(std::span<const double> values) {
  std::size_t n = 0;
  for (std::size_t i = 1; i < values.size(); ++i) n += values[i] > values[i - 1];
  return n;
}

namespace detail {

inline void finish(BinnedTable& t, const std::vector<double>& sums) {
  for (std::size_t i = 0; i < t.bins.size(); ++i) {
    if (t.bins[i].count) t.bins[i].mean = sums[i] / static_cast<double>(t.bins[i].count);
    t.samples += t.bins[i].count;
  }
}

}  // namespace detail

inline constexpr std::size_t kWinRateWindow = 10;

// At each flagged match step preceded by at least `window` flagged matches
// of the same user, pairs the trailing win rate over those matches with the
// step's scalar satisfaction. Bins sit at multiples of 1/window.
inline BinnedTable sat_vs_winrate(const LatentTable& latents, const Dataset& ds,
                                  std::size_t window = kWinRateWindow,
                                  const std::set<Action>& match_actions = default_match_actions()) {
  if (window == 0) throw ConfigError("win-rate window must be positive");
  BinnedTable t;
  for (std::size_t k = 0; k <= window; ++k) {
    const double v = static_cast<double>(k) / static_cast<double>(window);
    t.bins.push_back({format_double(v), v, v});
  }
  std::vector<double> sums(t.bins.size(), 0.0);
  std::size_t row = 0;
  for (const auto& seq : ds.sequences) {
    std::vector<bool> history;
    for (std::size_t j = 0; j < seq.steps.size(); ++j, ++row) {
      if (row >= latents.rows.size() || latents.rows[row].user_id != seq.user_id ||
          latents.rows[row].step_index != j) {
        throw DataError("latent table does not align with dataset");
      }
      const auto& s = seq.steps[j];
      if (!match_actions.contains(s.action) || !s.win) continue;
      if (history.size() >= window) {
        const auto wins = std::count(history.end() - static_cast<std::ptrdiff_t>(window), history.end(), true);
        const auto k = static_cast<std::size_t>(wins);
        sums[k] += latents.rows[row].satisfaction;
        ++t.bins[k].count;
      }
      history.push_back(*s.win);
    }
  }
  if (row != latents.rows.size()) throw DataError("latent table does not align with dataset");
  detail::finish(t, sums);
  return t;
}

struct LogoutBinning {
  double bin_seconds = 3.0 * 3600.0;
  double max_seconds = 86400.0;
};

// Mean scalar satisfaction at logout steps per actual-interval bin over
// [0, max] (the last regular bin is closed), plus an overflow bin.
inline BinnedTable sat_vs_logout(const LatentTable& latents, const LogoutBinning& b = {}) {
  if (!(b.bin_seconds > 0.0) || !(b.max_seconds > 0.0)) throw ConfigError("bad logout binning");
  BinnedTable t;
  const auto n = static_cast<std::size_t>(std::ceil(b.max_seconds / b.bin_seconds));
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = static_cast<double>(i) * b.bin_seconds;
    const double hi = std::min(b.max_seconds, lo + b.bin_seconds);
    t.bins.push_back({format_double(lo) + "-" + format_double(hi), lo, hi});
  }
  t.bins.push_back({"overflow", b.max_seconds, std::numeric_limits<double>::infinity()});
  std::vector<double> sums(t.bins.size(), 0.0);
  for (const auto& r : latents.rows) {
    if (r.kind != IntervalKind::OffGame) continue;
    std::size_t i = n;
    if (r.interval_seconds <= b.max_seconds) {
      i = std::min(n - 1, static_cast<std::size_t>(r.interval_seconds / b.bin_seconds));
    }
    sums[i] += r.satisfaction;
    ++t.bins[i].count;
  }
  detail::finish(t, sums);
  return t;
}

struct AspirationMatrix {
  Eigen::MatrixXd values;                   // kActionCount x d_asp
  std::array<bool, kActionCount> present{};
};

// Min-max normalization over the present rows; a constant input maps to zeros.
inline void min_max_normalize(AspirationMatrix& m) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t a = 0; a < kActionCount; ++a) {
    if (!m.present[a]) continue;
    lo = std::min(lo, m.values.row(static_cast<Eigen::Index>(a)).minCoeff());
    hi = std::max(hi, m.values.row(static_cast<Eigen::Index>(a)).maxCoeff());
  }
  for (std::size_t a = 0; a < kActionCount; ++a) {
    auto row = m.values.row(static_cast<Eigen::Index>(a));
    if (!m.present[a]) {
      row.setZero();
    } else if (hi > lo) {
      row = (row.array() - lo) / (hi - lo);
    } else {
      row.setZero();
    }
  }
}

inline AspirationMatrix aspiration_matrix(const LatentTable& latents) {
  AspirationMatrix m;
  const auto d = latents.rows.empty() ? 0 : latents.rows.front().asp.size();
  m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kActionCount), d);
  std::array<std::size_t, kActionCount> counts{};
  for (const auto& r : latents.rows) {
    const auto a = action_index(r.action);
    m.values.row(static_cast<Eigen::Index>(a)) += r.asp.transpose();
    ++counts[a];
  }
  for (std::size_t a = 0; a < kActionCount; ++a) {
    m.present[a] = counts[a] > 0;
    if (counts[a]) m.values.row(static_cast<Eigen::Index>(a)) /= static_cast<double>(counts[a]);
  }
  min_max_normalize(m);
  return m;
}

inline void write_aspiration_matrix(std::ostream& os, const AspirationMatrix& m) {
  os << "action,component,value,present\n";
  for (std::size_t a = 0; a < kActionCount; ++a) {
    for (Eigen::Index c = 0; c < m.values.cols(); ++c) {
      os << kActionNames[a] << ',' << c << ',' << format_double(m.values(static_cast<Eigen::Index>(a), c))
         << ',' << m.present[a] << '\n';
    }
  }
}

}  // namespace lafee::analysis
