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

// Synthetic player simulator with known latent dynamics.
//
// Each user carries a scalar satisfaction s and aspiration a in [0, 1].
//  * s reverts toward a per-user baseline that starts at a trait and drops
//    after every session by novelty_decay * exp(disengagement * (mu - s)),
//    mu being the trait mean, so dissatisfied users drift away faster; every
//    ranked match moves s by +drift on a win and -drift on a loss.
//  * Social actions are chosen with propensity scaled by exp(beta (s - s_ref)).
//  * a decays with every match (fatigue) and recovers during logout; the
//    per-step session-end probability grows as a falls.
//  * The logout interval is g(s) = T_max * sigmoid(-k s) times lognormal
//    noise; in-game intervals grow as aspiration falls.
// A user whose satisfaction at logout is below quit_satisfaction never returns;
// otherwise users play until their next login would fall past the horizon.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lafee/domain.hpp"
#include "lafee/errors.hpp"
#include "lafee/ingest.hpp"

namespace lafee::synth {

using ActionWeights = std::array<double, kActionCount>;

inline ActionWeights battle_profile() {
  ActionWeights w{};
  auto set = [&](Action a, double v) { w[action_index(a)] = v; };
  set(Action::QuickMatch1V1, 6.0);
  set(Action::QuickMatch2V2, 4.0);
  set(Action::PrivateGame, 1.0);
  set(Action::RoomModeCreate, 0.5);
  set(Action::DailySign, 0.5);
  set(Action::DailySignReward, 0.5);
  set(Action::DailyTaskFinish, 1.0);
  set(Action::DailyTaskReward, 1.0);
  set(Action::RewardAchievement, 0.5);
  set(Action::ConsumeItem, 0.5);
  set(Action::InviteLog, 0.3);
  set(Action::ShareLog, 0.3);
  set(Action::FollowLog, 0.3);
  set(Action::PraisePlayRound, 0.5);
  set(Action::ReplaceRole, 0.2);
  set(Action::GuideInfo, 0.1);
  set(Action::AdsLog, 0.2);
  return w;
}

inline ActionWeights social_profile() {
  ActionWeights w{};
  auto set = [&](Action a, double v) { w[action_index(a)] = v; };
  set(Action::QuickMatch1V1, 1.5);
  set(Action::QuickMatch2V2, 1.5);
  set(Action::PrivateGame, 1.0);
  set(Action::RoomModeCreate, 1.0);
  set(Action::DailySign, 1.0);
  set(Action::DailySignReward, 1.0);
  set(Action::DailyTaskFinish, 1.0);
  set(Action::DailyTaskReward, 1.0);
  set(Action::RewardAchievement, 0.5);
  set(Action::ConsumeItem, 1.0);
  set(Action::InviteLog, 2.0);
  set(Action::ShareLog, 2.0);
  set(Action::FollowLog, 2.0);
  set(Action::PraisePlayRound, 3.0);
  set(Action::ReplaceRole, 0.5);
  set(Action::GuideInfo, 0.3);
  set(Action::AdsLog, 1.0);
  return w;
}

inline bool is_social(Action a) {
  return a == Action::InviteLog || a == Action::ShareLog || a == Action::FollowLog ||
         a == Action::PraisePlayRound;
}

inline bool is_ranked_match(Action a) {
  return a == Action::QuickMatch1V1 || a == Action::QuickMatch2V2;
}

inline bool is_any_match(Action a) {
  return is_ranked_match(a) || a == Action::PrivateGame || a == Action::RoomModeCreate;
}

struct SynthConfig {
  std::size_t n_users = 500;
  std::uint64_t seed = 1;
  std::string start_time = "2018-01-01 00:00:00";
  double start_spread_days = 10.0;
  double horizon_days = 60.0;
  std::size_t max_sessions = 200;

  double battle_fraction = 0.5;
  ActionWeights battle = battle_profile();
  ActionWeights social = social_profile();

  // Satisfaction.
  double trait_mean = 3.9;
  double trait_sd = 0.6;
  double skill_min = 0.2;
  double skill_max = 0.8;
  double win_drift = 0.05;
  double sat_reversion = 0.3;
  double novelty_decay = 0.2;
  double disengagement = 0.8;
  // Disabled by default.
  double quit_satisfaction = std::numeric_limits<double>::lowest();
  double social_sensitivity = 2.5;
  double social_reference = 1.8;

  // Aspiration.
  double fatigue_rate = 0.15;
  double action_fatigue_rate = 0.03;
  double recovery_rate = 0.8;
  double base_end_prob = 0.12;
  double fatigue_end_weight = 0.5;

  // Intervals.
  double logout_max_seconds = 365.0 * 86400.0;
  double logout_slope = 3.0;
  double logout_noise = 0.3;
  double in_game_noise = 0.3;
  double relax_seconds = 240.0;

  void validate() const {
    auto unit = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
    };
    unit(battle_fraction, "battle_fraction");
    unit(skill_min, "skill_min");
    unit(skill_max, "skill_max");
    unit(sat_reversion, "sat_reversion");
    unit(fatigue_rate, "fatigue_rate");
    unit(action_fatigue_rate, "action_fatigue_rate");
    unit(recovery_rate, "recovery_rate");
    unit(base_end_prob, "base_end_prob");
    unit(fatigue_end_weight, "fatigue_end_weight");
    if (base_end_prob + fatigue_end_weight > 1.0) {
      throw ConfigError("base_end_prob + fatigue_end_weight must not exceed 1");
    }
    if (skill_min > skill_max) throw ConfigError("skill_min must not exceed skill_max");
    for (const auto* profile : {&battle, &social}) {
      double total = 0.0;
      for (std::size_t i = 0; i < kActionCount; ++i) {
        const auto a = action_from_index(i);
        if ((*profile)[i] < 0.0) throw ConfigError("action propensities must be nonnegative");
        if (a != Action::LoginRole && a != Action::LogoutRole) total += (*profile)[i];
      }
      if (!(total > 0.0)) throw ConfigError("action propensities are all zero");
    }
    if (!(horizon_days > 0.0) || start_spread_days < 0.0) throw ConfigError("bad time window");
    if (max_sessions == 0) throw ConfigError("max_sessions must be positive");
    if (trait_sd < 0.0 || win_drift < 0.0 || novelty_decay < 0.0 || disengagement < 0.0 || logout_noise < 0.0 || in_game_noise < 0.0 ||
        !(logout_max_seconds > 0.0) || !(logout_slope > 0.0) || relax_seconds < 0.0) {
      throw ConfigError("bad synthetic dynamics coefficients");
    }
  }

  // Satisfaction-to-logout link, decreasing in s.
  double logout_link(double s) const { return logout_max_seconds / (1.0 + std::exp(logout_slope * s)); }

  double logout_link_inverse(double seconds) const {
    return std::log(logout_max_seconds / seconds - 1.0) / logout_slope;
  }
};

inline nlohmann::json to_json(const SynthConfig& c) {
  auto weights = [](const ActionWeights& w) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t i = 0; i < kActionCount; ++i) j[std::string(kActionNames[i])] = w[i];
    return j;
  };
  return {{"n_users", c.n_users},
          {"seed", c.seed},
          {"start_time", c.start_time},
          {"start_spread_days", c.start_spread_days},
          {"horizon_days", c.horizon_days},
          {"max_sessions", c.max_sessions},
          {"battle_fraction", c.battle_fraction},
          {"battle_profile", weights(c.battle)},
          {"social_profile", weights(c.social)},
          {"trait_mean", c.trait_mean},
          {"trait_sd", c.trait_sd},
          {"skill_min", c.skill_min},
          {"skill_max", c.skill_max},
          {"win_drift", c.win_drift},
          {"sat_reversion", c.sat_reversion},
          {"novelty_decay", c.novelty_decay},
          {"disengagement", c.disengagement},
          {"quit_satisfaction", c.quit_satisfaction},
          {"social_sensitivity", c.social_sensitivity},
          {"social_reference", c.social_reference},
          {"fatigue_rate", c.fatigue_rate},
          {"action_fatigue_rate", c.action_fatigue_rate},
          {"recovery_rate", c.recovery_rate},
          {"base_end_prob", c.base_end_prob},
          {"fatigue_end_weight", c.fatigue_end_weight},
          {"logout_max_seconds", c.logout_max_seconds},
          {"logout_slope", c.logout_slope},
          {"logout_noise", c.logout_noise},
          {"in_game_noise", c.in_game_noise},
          {"relax_seconds", c.relax_seconds}};
}

inline SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig c = {}) {
  auto weights = [](const nlohmann::json& w, ActionWeights base) {
    for (const auto& [name, v] : w.items()) base[action_index(parse_action(name))] = v.get<double>();
    return base;
  };
  c.n_users = j.value("n_users", c.n_users);
  c.seed = j.value("seed", c.seed);
  c.start_time = j.value("start_time", c.start_time);
  c.start_spread_days = j.value("start_spread_days", c.start_spread_days);
  c.horizon_days = j.value("horizon_days", c.horizon_days);
  c.max_sessions = j.value("max_sessions", c.max_sessions);
  c.battle_fraction = j.value("battle_fraction", c.battle_fraction);
  if (j.contains("battle_profile")) c.battle = weights(j.at("battle_profile"), c.battle);
  if (j.contains("social_profile")) c.social = weights(j.at("social_profile"), c.social);
  c.trait_mean = j.value("trait_mean", c.trait_mean);
  c.trait_sd = j.value("trait_sd", c.trait_sd);
  c.skill_min = j.value("skill_min", c.skill_min);
  c.skill_max = j.value("skill_max", c.skill_max);
  c.win_drift = j.value("win_drift", c.win_drift);
  c.sat_reversion = j.value("sat_reversion", c.sat_reversion);
  c.novelty_decay = j.value("novelty_decay", c.novelty_decay);
  c.disengagement = j.value("disengagement", c.disengagement);
  c.quit_satisfaction = j.value("quit_satisfaction", c.quit_satisfaction);
  c.social_sensitivity = j.value("social_sensitivity", c.social_sensitivity);
  c.social_reference = j.value("social_reference", c.social_reference);
  c.fatigue_rate = j.value("fatigue_rate", c.fatigue_rate);
  c.action_fatigue_rate = j.value("action_fatigue_rate", c.action_fatigue_rate);
  c.recovery_rate = j.value("recovery_rate", c.recovery_rate);
  c.base_end_prob = j.value("base_end_prob", c.base_end_prob);
  c.fatigue_end_weight = j.value("fatigue_end_weight", c.fatigue_end_weight);
  c.logout_max_seconds = j.value("logout_max_seconds", c.logout_max_seconds);
  c.logout_slope = j.value("logout_slope", c.logout_slope);
  c.logout_noise = j.value("logout_noise", c.logout_noise);
  c.in_game_noise = j.value("in_game_noise", c.in_game_noise);
  c.relax_seconds = j.value("relax_seconds", c.relax_seconds);
  return c;
}

struct TruthRow {
  double sat = 0.0;
  double asp = 0.0;
  double interval = 0.0;  // seconds, before noise and rounding

  friend bool operator==(const TruthRow&, const TruthRow&) = default;
};

struct GroundTruth {
  // Aligned with Dataset::sequences and their steps.
  std::vector<std::string> user_ids;
  std::vector<std::vector<TruthRow>> rows;
  std::vector<bool> battle_profile;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

struct SynthOutput {
  Dataset dataset;
  GroundTruth truth;
  std::map<std::string, std::vector<ingest::RawLog>> logs;
  ingest::Timestamp end_of_observation = 0;
};

inline void write_ground_truth(std::ostream& os, const GroundTruth& gt) {
  os << "user_id,step_index,true_sat,true_asp,true_interval\n";
  for (std::size_t u = 0; u < gt.user_ids.size(); ++u) {
    for (std::size_t j = 0; j < gt.rows[u].size(); ++j) {
      const auto& r = gt.rows[u][j];
      os << gt.user_ids[u] << ',' << j << ',' << format_double(r.sat) << ',' << format_double(r.asp)
         << ',' << format_double(r.interval) << '\n';
    }
  }
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline double play_seconds(Action a) {
  switch (a) {
    case Action::QuickMatch1V1: return 300.0;
    case Action::QuickMatch2V2: return 420.0;
    case Action::PrivateGame: return 480.0;
    case Action::RoomModeCreate: return 60.0;
    case Action::LoginRole: return 20.0;
    default: return 15.0;
  }
}

struct UserTimeline {
  PlaySequence seq;
  std::vector<TruthRow> truth;
  std::vector<ingest::RawLog> logs;
  bool battle = false;
};

// Mirrors ingest::derive_sequence: counters include the event's own deltas,
// OnlineDuration counts in-session seconds so far.
class UserSimulator {
 public:
  UserSimulator(const SynthConfig& cfg, std::string user_id, std::uint64_t seed)
      : cfg_(cfg), rng_(seed) {
    out_.seq.user_id = std::move(user_id);
  }

  UserTimeline run(ingest::Timestamp start, ingest::Timestamp horizon_end) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    out_.battle = unit(rng_) < cfg_.battle_fraction;
    const ActionWeights& profile = out_.battle ? cfg_.battle : cfg_.social;
    skill_ = cfg_.skill_min + (cfg_.skill_max - cfg_.skill_min) * unit(rng_);
    std::normal_distribution<double> trait_dist(cfg_.trait_mean, cfg_.trait_sd);
    baseline_ = trait_dist(rng_);
    sat_ = baseline_;
    asp_ = 1.0;

    ingest::Timestamp now = start + static_cast<ingest::Timestamp>(
                                        std::floor(unit(rng_) * cfg_.start_spread_days * 86400.0));
    for (std::size_t session = 0; session < cfg_.max_sessions; ++session) {
      session_start_ = now;
      emit(Action::LoginRole, now, nlohmann::ordered_json{{"account_id", out_.seq.user_id}}, {});
      now += in_game_interval(Action::LoginRole);
      for (;;) {
        const double p_end = cfg_.base_end_prob + cfg_.fatigue_end_weight * (1.0 - asp_);
        if (unit(rng_) < p_end) break;
        const Action a = sample_action(profile);
        act(a, now);
        now += in_game_interval(a);
      }
      // Logout.
      online_closed_ += static_cast<double>(now - session_start_);
      asp_ += cfg_.recovery_rate * (1.0 - asp_);
      const double decay =
          cfg_.novelty_decay * std::exp(cfg_.disengagement * (cfg_.trait_mean - sat_));
      baseline_ -= decay;
      sat_ -= decay;
      const double true_out = cfg_.logout_link(sat_);
      emit(Action::LogoutRole, now, nlohmann::ordered_json{{"account_id", out_.seq.user_id}}, {});
      out_.truth.back().interval = true_out;
      const ingest::Timestamp gap = noisy_seconds(true_out, cfg_.logout_noise);
      if (sat_ < cfg_.quit_satisfaction || now + gap > horizon_end) break;
      now += gap;
    }
    return std::move(out_);
  }

 private:
  Action sample_action(const ActionWeights& profile) {
    std::array<double, kActionCount> w{};
    for (std::size_t i = 0; i < kActionCount; ++i) {
      const auto a = action_from_index(i);
      if (a == Action::LoginRole || a == Action::LogoutRole) continue;
      w[i] = profile[i];
      if (is_social(a)) w[i] *= std::exp(cfg_.social_sensitivity * (sat_ - cfg_.social_reference));
    }
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    return action_from_index(pick(rng_));
  }

  ingest::Timestamp noisy_seconds(double mean_seconds, double noise) {
    double v = mean_seconds;
    if (noise > 0.0) {
      std::normal_distribution<double> z(0.0, noise);
      v *= std::exp(z(rng_));
    }
    return std::max<ingest::Timestamp>(1, static_cast<ingest::Timestamp>(std::llround(v)));
  }

  ingest::Timestamp in_game_interval(Action a) {
    const double true_in = play_seconds(a) + cfg_.relax_seconds * (1.0 - asp_);
    out_.truth.back().interval = true_in;
    return noisy_seconds(true_in, cfg_.in_game_noise);
  }

  void act(Action a, ingest::Timestamp now) {
    nlohmann::ordered_json info = nlohmann::ordered_json::object();
    std::optional<bool> win;
    double exp_gain = 0.0;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (is_ranked_match(a)) {
      const bool won = unit(rng_) < skill_;
      win = won;
      std::uniform_int_distribution<int> margin(5, 50);
      info["score"] = won ? margin(rng_) : -margin(rng_);
      info["gold_change"] = won ? 30 : -18;
      exp_gain = 10.0;
      sat_ += cfg_.win_drift * (won ? 1.0 : -1.0) + cfg_.sat_reversion * (baseline_ - sat_);
    } else if (a == Action::PrivateGame || a == Action::RoomModeCreate) {
      std::uniform_int_distribution<int> room(1000, 9999);
      info["room_id"] = room(rng_);
      exp_gain = 5.0;
    } else if (a == Action::DailySignReward) {
      info["gold_change"] = 20;
    } else if (a == Action::DailyTaskReward) {
      info["gold_change"] = 30;
      info["item_change"] = 1;
      exp_gain = 20.0;
    } else if (a == Action::RewardAchievement) {
      info["achievements"] = 1;
      info["gold_change"] = 10;
    } else if (a == Action::ConsumeItem) {
      info["item_change"] = counters_[kItemNum] > 0.0 ? -1 : 0;
    } else if (a == Action::PraisePlayRound) {
      info["emojis_sent"] = 1;
    } else if (a == Action::ShareLog || a == Action::InviteLog) {
      info["gifts_sent"] = 1;
    }
    if (exp_gain > 0.0) {
      info["exp_change"] = exp_gain;
      const double before = counters_[kExperience];
      if (std::floor((before + exp_gain) / 100.0) > std::floor(before / 100.0)) info["grade_up"] = 1;
    }
    asp_ *= 1.0 - (is_any_match(a) ? cfg_.fatigue_rate : cfg_.action_fatigue_rate);
    emit(a, now, std::move(info), win);
  }

  void emit(Action a, ingest::Timestamp now, nlohmann::ordered_json info, std::optional<bool> win) {
    static const std::array<std::pair<const char*, std::size_t>, 7> keys = {{
        {"gold_change", kGold},
        {"exp_change", kExperience},
        {"emojis_sent", kEmojisSent},
        {"gifts_sent", kGiftsSent},
        {"achievements", kAchievementGot},
        {"item_change", kItemNum},
        {"grade_up", kGradeUp},
    }};
    for (const auto& [key, dim] : keys) {
      if (info.contains(key)) counters_[dim] += info[key].get<double>();
    }
    counters_[kOnlineDuration] = online_closed_ + (a == Action::LogoutRole
                                                       ? 0.0
                                                       : static_cast<double>(now - session_start_));
    Step st;
    st.state = counters_;
    st.action = a;
    st.kind = kind_for(a);
    st.win = win;
    out_.seq.steps.push_back(st);
    out_.truth.push_back({sat_, asp_, 0.0});
    out_.logs.push_back({std::string(action_name(a)), std::move(info), now});
  }

  const SynthConfig& cfg_;
  std::mt19937_64 rng_;
  UserTimeline out_;
  StateVector counters_{};
  double online_closed_ = 0.0;
  ingest::Timestamp session_start_ = 0;
  double skill_ = 0.5;
  double baseline_ = 0.0;
  double sat_ = 0.0;
  double asp_ = 1.0;
};

}  // namespace detail

inline std::string synthetic_user_id(std::size_t index, std::size_t n_users) {
  std::size_t width = 4;
  for (std::size_t n = n_users; n >= 10000; n /= 10) ++width;
  std::string digits = std::to_string(index);
  return "u" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

inline SynthOutput generate(const SynthConfig& cfg) {
  cfg.validate();
  SynthOutput out;
  const auto start = ingest::parse_timestamp(cfg.start_time);
  const auto horizon_end =
      start + static_cast<ingest::Timestamp>(std::llround(cfg.horizon_days * 86400.0));
  std::vector<detail::UserTimeline> users;
  users.reserve(cfg.n_users);
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    detail::UserSimulator sim(cfg, synthetic_user_id(u, cfg.n_users),
                              detail::splitmix64(cfg.seed ^ detail::splitmix64(u)));
    users.push_back(sim.run(start, horizon_end));
  }
  bool any = false;
  for (const auto& u : users) {
    for (const auto& l : u.logs) {
      out.end_of_observation = any ? std::max(out.end_of_observation, l.timestamp) : l.timestamp;
      any = true;
    }
  }
  for (auto& u : users) {
    for (std::size_t j = 0; j < u.seq.steps.size(); ++j) {
      const auto next = j + 1 < u.logs.size() ? u.logs[j + 1].timestamp : out.end_of_observation;
      u.seq.steps[j].interval_seconds = static_cast<double>(next - u.logs[j].timestamp);
    }
    out.truth.user_ids.push_back(u.seq.user_id);
    out.truth.rows.push_back(std::move(u.truth));
    out.truth.battle_profile.push_back(u.battle);
    out.logs[u.seq.user_id] = std::move(u.logs);
    out.dataset.sequences.push_back(std::move(u.seq));
  }
  return out;
}

}  // namespace lafee::synth
