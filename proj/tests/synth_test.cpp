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

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "lafee/analysis.hpp"
#include "lafee/ingest.hpp"
#include "lafee/synth.hpp"

namespace lafee::synth {
namespace {

SynthConfig small(std::size_t users = 40, std::uint64_t seed = 3) {
  SynthConfig c;
  c.n_users = users;
  c.seed = seed;
  return c;
}

TEST(Generate, ZeroUsersGivesEmptyDataset) {
  const auto out = generate(small(0));
  EXPECT_TRUE(out.dataset.sequences.empty());
  EXPECT_TRUE(out.truth.rows.empty());
}

TEST(Generate, DegenerateConfigRejected) {
  auto c = small();
  c.battle.fill(0.0);
  EXPECT_THROW(generate(c), ConfigError);
  c = small();
  c.fatigue_rate = 1.5;
  EXPECT_THROW(generate(c), ConfigError);
  c = small();
  c.base_end_prob = 0.8;
  c.fatigue_end_weight = 0.5;
  EXPECT_THROW(generate(c), ConfigError);
}

TEST(Generate, SameSeedByteIdentical) {
  const auto a = generate(small());
  const auto b = generate(small());
  std::ostringstream sa, sb, ta, tb;
  write_steps(sa, a.dataset);
  write_steps(sb, b.dataset);
  write_ground_truth(ta, a.truth);
  write_ground_truth(tb, b.truth);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(ta.str(), tb.str());
  for (const auto& [u, logs] : a.logs) EXPECT_EQ(ingest::logs_to_json(logs), ingest::logs_to_json(b.logs.at(u)));
  EXPECT_NE(sa.str(), [] {
    std::ostringstream s;
    write_steps(s, generate(small(40, 4)).dataset);
    return s.str();
  }());
}

TEST(Generate, TruthAlignedAndDatasetValid) {
  const auto out = generate(small());
  validate(out.dataset);
  ASSERT_EQ(out.truth.rows.size(), out.dataset.sequences.size());
  for (std::size_t u = 0; u < out.truth.rows.size(); ++u) {
    EXPECT_EQ(out.truth.user_ids[u], out.dataset.sequences[u].user_id);
    EXPECT_EQ(out.truth.rows[u].size(), out.dataset.sequences[u].steps.size());
    for (const auto& r : out.truth.rows[u]) EXPECT_GT(r.interval, 0.0);
  }
}

TEST(Generate, RoundTripsThroughIngestWithoutRepairs) {
  const auto out = generate(small(60, 9));
  std::map<std::string, std::string> docs;
  for (const auto& [u, logs] : out.logs) docs[u] = ingest::logs_to_json(logs);
  const auto result = ingest::ingest_documents(docs, ingest::IngestRules::defaults());
  for (const auto& [u, r] : result.reports) EXPECT_EQ(r, ingest::CleaningReport{}) << u;
  EXPECT_EQ(result.end_of_observation, out.end_of_observation);
  EXPECT_EQ(result.dataset, out.dataset);
}

// With every noise source off and the win drift removed, emitted logout
// gaps are the rounded link of true satisfaction.
TEST(Generate, NoiselessLogoutGapsFollowLink) {
  auto c = small(30, 5);
  c.logout_noise = 0.0;
  c.in_game_noise = 0.0;
  const auto out = generate(c);
  std::vector<double> sat, gap, truth_interval;
  for (std::size_t u = 0; u < out.dataset.sequences.size(); ++u) {
    const auto& steps = out.dataset.sequences[u].steps;
    for (std::size_t j = 0; j + 1 < steps.size(); ++j) {
      if (steps[j].kind != IntervalKind::OffGame) continue;
      const auto& r = out.truth.rows[u][j];
      EXPECT_DOUBLE_EQ(r.interval, c.logout_link(r.sat));
      EXPECT_NEAR(c.logout_link_inverse(r.interval), r.sat, 1e-9);
      EXPECT_EQ(steps[j].interval_seconds, std::max(1.0, std::round(r.interval)));
      sat.push_back(r.sat);
      gap.push_back(steps[j].interval_seconds);
      truth_interval.push_back(r.interval);
    }
  }
  ASSERT_GT(sat.size(), 50u);
  EXPECT_NEAR(analysis::spearman(sat, truth_interval), -1.0, 1e-12);
  // Rounding can tie neighbours but never reverses order.
  std::vector<std::size_t> order(sat.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return sat[a] < sat[b]; });
  for (std::size_t i = 1; i < order.size(); ++i) EXPECT_LE(gap[order[i]], gap[order[i - 1]]);
}

TEST(Generate, BattleUsersPlayMoreMatches) {
  const auto out = generate(small(300, 11));
  const auto activity = analysis::user_activity(out.dataset);
  double battle = 0.0, social = 0.0;
  std::size_t nb = 0, ns = 0;
  for (std::size_t u = 0; u < activity.size(); ++u) {
    if (out.truth.battle_profile[u]) {
      battle += activity[u].match_share();
      ++nb;
    } else {
      social += activity[u].match_share();
      ++ns;
    }
  }
  ASSERT_GT(nb, 0u);
  ASSERT_GT(ns, 0u);
  EXPECT_GT(battle / nb, social / ns);
}

TEST(Generate, WinsRaiseTrueSatisfaction) {
  // Trailing win rate over ten ranked matches against true satisfaction,
  // bin means nondecreasing from 0.1 to 1.0 for a generator without decay.
  auto c = small(300, 12);
  c.novelty_decay = 0.0;
  c.sat_reversion = 0.0;
  c.trait_sd = 0.0;
  const auto out = generate(c);
  std::vector<double> sums(11, 0.0);
  std::vector<std::size_t> counts(11, 0);
  for (std::size_t u = 0; u < out.dataset.sequences.size(); ++u) {
    std::vector<bool> history;
    const auto& steps = out.dataset.sequences[u].steps;
    for (std::size_t j = 0; j < steps.size(); ++j) {
      if (!steps[j].win) continue;
      if (history.size() >= 10) {
        const auto k = static_cast<std::size_t>(std::count(history.end() - 10, history.end(), true));
        sums[k] += out.truth.rows[u][j].sat;
        ++counts[k];
      }
      history.push_back(*steps[j].win);
    }
  }
  double prev = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k <= 10; ++k) {
    if (counts[k] < 20) continue;
    const double mean = sums[k] / static_cast<double>(counts[k]);
    EXPECT_GE(mean, prev) << "bin " << k;
    prev = mean;
  }
}

TEST(Generate, MatchesDrainAspiration) {
  const auto out = generate(small(20, 2));
  for (std::size_t u = 0; u < out.dataset.sequences.size(); ++u) {
    const auto& steps = out.dataset.sequences[u].steps;
    for (std::size_t j = 1; j < steps.size(); ++j) {
      if (is_any_match(steps[j].action)) {
        EXPECT_LT(out.truth.rows[u][j].asp, out.truth.rows[u][j - 1].asp);
      }
      if (steps[j].action == Action::LogoutRole) {
        EXPECT_GE(out.truth.rows[u][j].asp, out.truth.rows[u][j - 1].asp);
      }
    }
  }
}

TEST(SynthConfig, JsonRoundTrip) {
  auto c = small(17, 99);
  c.social[action_index(Action::ShareLog)] = 7.5;
  c.logout_slope = 2.25;
  EXPECT_EQ(to_json(synth_config_from_json(to_json(c))), to_json(c));
}

TEST(SynthUserId, ZeroPadded) {
  EXPECT_EQ(synthetic_user_id(7, 500), "u0007");
  EXPECT_EQ(synthetic_user_id(12345, 20000), "u12345");
}

TEST(GroundTruthCsv, Layout) {
  GroundTruth gt{{"u0"}, {{{0.5, 1.0, 30.0}}}, {true}};
  std::ostringstream os;
  write_ground_truth(os, gt);
  EXPECT_EQ(os.str(), "user_id,step_index,true_sat,true_asp,true_interval\nu0,0,0.5,1,30\n");
}

}  // namespace
}  // namespace lafee::synth
