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

// JSON game-log ingestion: parsing, the four repair passes, and derivation
// of (state, action, interval) sequences.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lafee/domain.hpp"
#include "lafee/errors.hpp"

namespace lafee::ingest {

using Json = nlohmann::ordered_json;

// Seconds since 1970-01-01 00:00:00, wall clock taken as UTC.
using Timestamp = std::int64_t;

inline Timestamp parse_timestamp(std::string_view s) {
  // YYYY-MM-DD HH:MM:SS
  auto digits = [&](std::size_t pos, std::size_t n) -> int {
    int v = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
      if (s[i] < '0' || s[i] > '9') throw DataError("bad timestamp '" + std::string(s) + "'");
      v = v * 10 + (s[i] - '0');
    }
    return v;
  };
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || s[10] != ' ' || s[13] != ':' ||
      s[16] != ':') {
    throw DataError("bad timestamp '" + std::string(s) + "', expected YYYY-MM-DD HH:MM:SS");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{digits(0, 4)}, month{static_cast<unsigned>(digits(5, 2))},
                           day{static_cast<unsigned>(digits(8, 2))}};
  const int hh = digits(11, 2), mm = digits(14, 2), ss = digits(17, 2);
  if (!ymd.ok() || hh > 23 || mm > 59 || ss > 59) {
    throw DataError("timestamp out of range '" + std::string(s) + "'");
  }
  const auto days = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * 86400 + hh * 3600 + mm * 60 + ss;
}

inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  Timestamp day = t >= 0 ? t / 86400 : -((-t + 86399) / 86400);
  const Timestamp sec = t - day * 86400;
  const year_month_day ymd{sys_days{days{day}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(sec / 3600), static_cast<int>((sec / 60) % 60),
                static_cast<int>(sec % 60));
  return buf;
}

struct RawLog {
  std::string log_id;
  Json raw_info = Json::object();
  Timestamp timestamp = 0;

  friend bool operator==(const RawLog&, const RawLog&) = default;
};

struct CleaningReport {
  std::size_t relabelled = 0;
  std::size_t merged = 0;
  std::size_t reordered = 0;
  std::size_t pair_repaired = 0;

  std::size_t total() const { return relabelled + merged + reordered + pair_repaired; }
  friend bool operator==(const CleaningReport&, const CleaningReport&) = default;
};

inline Json to_json(const CleaningReport& r) {
  return Json{{"relabelled", r.relabelled},
              {"merged", r.merged},
              {"reordered", r.reordered},
              {"pair_repaired", r.pair_repaired}};
}

// log_id `from` is rewritten to `to`; with a non-empty `when_key` only
// records whose raw_info carries that key are rewritten.
struct RelabelRule {
  std::string from;
  std::string to;
  std::string when_key;
};

// A record `absorbed` sharing its timestamp with a record `into` that lacks
// `key` is folded into it (state deltas added) and dropped. With `value`
// set, only absorbed records whose raw_info[key] equals it qualify.
struct MergeRule {
  std::string absorbed;
  std::string into;
  std::string key;
  std::optional<double> value;
};

struct IngestRules {
  std::vector<RelabelRule> relabels;
  std::vector<MergeRule> merges;
  // Same-second ordering; lower sorts first.
  std::map<std::string, int> priority;
  int default_priority = 10;
  std::set<Action> match_actions = default_match_actions();
  // raw_info numeric fields accumulated into state components.
  std::vector<std::pair<std::string, std::size_t>> state_keys;

  static IngestRules defaults() {
    IngestRules r;
    r.relabels = {{"LoginRole", "PrivateGame", "room_id"}};
    r.merges = {{"Trade", "MatchInfo", "gold_change", -18.0}};
    r.priority = {{"LoginRole", 0}, {"LogoutRole", 100}};
    r.state_keys = {{"gold_change", kGold},         {"exp_change", kExperience},
                    {"emojis_sent", kEmojisSent},   {"gifts_sent", kGiftsSent},
                    {"achievements", kAchievementGot}, {"item_change", kItemNum},
                    {"grade_up", kGradeUp}};
    return r;
  }

  int priority_of(const std::string& log_id) const {
    auto it = priority.find(log_id);
    return it == priority.end() ? default_priority : it->second;
  }
};

inline Json to_json(const IngestRules& r) {
  Json j;
  j["relabels"] = Json::array();
  for (const auto& x : r.relabels) {
    j["relabels"].push_back({{"from", x.from}, {"to", x.to}, {"when_key", x.when_key}});
  }
  j["merges"] = Json::array();
  for (const auto& m : r.merges) {
    Json e{{"absorbed", m.absorbed}, {"into", m.into}, {"key", m.key}};
    e["value"] = m.value ? Json(*m.value) : Json(nullptr);
    j["merges"].push_back(e);
  }
  j["priority"] = Json::object();
  for (const auto& [k, v] : r.priority) j["priority"][k] = v;
  j["default_priority"] = r.default_priority;
  j["match_actions"] = Json::array();
  for (auto a : r.match_actions) j["match_actions"].push_back(std::string(action_name(a)));
  j["state_keys"] = Json::object();
  for (const auto& [k, d] : r.state_keys) j["state_keys"][k] = std::string(kStateNames[d]);
  return j;
}

inline IngestRules rules_from_json(const Json& j) {
  IngestRules r = IngestRules::defaults();
  if (j.contains("relabels")) {
    r.relabels.clear();
    for (const auto& e : j.at("relabels")) {
      r.relabels.push_back(
          {e.at("from").get<std::string>(), e.at("to").get<std::string>(), e.value("when_key", "")});
    }
  }
  if (j.contains("merges")) {
    r.merges.clear();
    for (const auto& e : j.at("merges")) {
      MergeRule m{e.at("absorbed").get<std::string>(), e.at("into").get<std::string>(),
                  e.value("key", ""), std::nullopt};
      if (e.contains("value") && !e.at("value").is_null()) m.value = e.at("value").get<double>();
      r.merges.push_back(m);
    }
  }
  if (j.contains("priority")) {
    r.priority.clear();
    for (const auto& [k, v] : j.at("priority").items()) r.priority[k] = v.get<int>();
  }
  r.default_priority = j.value("default_priority", r.default_priority);
  if (j.contains("match_actions")) {
    r.match_actions.clear();
    for (const auto& a : j.at("match_actions")) r.match_actions.insert(parse_action(a.get<std::string>()));
  }
  if (j.contains("state_keys")) {
    r.state_keys.clear();
    for (const auto& [k, v] : j.at("state_keys").items()) {
      const auto name = v.get<std::string>();
      auto it = std::find(kStateNames.begin(), kStateNames.end(), name);
      if (it == kStateNames.end()) throw ConfigError("unknown state component '" + name + "'");
      r.state_keys.emplace_back(k, static_cast<std::size_t>(it - kStateNames.begin()));
    }
  }
  return r;
}

// ---------------------------------------------------------------------------

inline std::vector<RawLog> parse_logs(std::string_view document) {
  Json doc;
  try {
    doc = Json::parse(document);
  } catch (const Json::parse_error& e) {
    throw DataError("malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_array()) throw DataError("log document must be a JSON array");
  std::vector<RawLog> logs;
  logs.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    const std::string where = "record " + std::to_string(i);
    if (!rec.is_object()) throw DataError(where + ": not an object");
    for (const char* field : {"log_id", "raw_info", "timestamp"}) {
      if (!rec.contains(field)) throw DataError(where + ": missing field '" + field + "'");
    }
    if (!rec["log_id"].is_string()) throw DataError(where + ": 'log_id' must be a string");
    if (!rec["raw_info"].is_object()) throw DataError(where + ": 'raw_info' must be an object");
    if (!rec["timestamp"].is_string()) throw DataError(where + ": 'timestamp' must be a string");
    RawLog log;
    log.log_id = rec["log_id"].get<std::string>();
    log.raw_info = rec["raw_info"];
    try {
      log.timestamp = parse_timestamp(rec["timestamp"].get<std::string>());
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    logs.push_back(std::move(log));
  }
  return logs;
}

inline std::string logs_to_json(const std::vector<RawLog>& logs, int indent = 2) {
  Json doc = Json::array();
  for (const auto& l : logs) {
    doc.push_back(
        {{"log_id", l.log_id}, {"raw_info", l.raw_info}, {"timestamp", format_timestamp(l.timestamp)}});
  }
  return doc.dump(indent);
}

namespace detail {

inline RawLog synthetic(std::string log_id, Timestamp t) {
  return RawLog{std::move(log_id), Json{{"synthetic", true}}, t};
}

inline void fold_state_keys(Json& into, const Json& from, const IngestRules& rules) {
  for (const auto& [key, dim] : rules.state_keys) {
    (void)dim;
    auto it = from.find(key);
    if (it == from.end() || !it->is_number()) continue;
    const double add = it->get<double>();
    auto dst = into.find(key);
    if (dst != into.end() && dst->is_number()) {
      *dst = dst->get<double>() + add;
    } else {
      into[key] = *it;
    }
  }
}

}  // namespace detail

// Applies, in order: log_id relabelling, duplicate merging, same-second
// reordering by priority, and Login/Logout pair repair. Total and idempotent.
inline std::pair<std::vector<RawLog>, CleaningReport> clean_logs(std::vector<RawLog> logs,
                                                                 const IngestRules& rules) {
  CleaningReport report;

  for (auto& l : logs) {
    for (const auto& rule : rules.relabels) {
      if (l.log_id == rule.from && (rule.when_key.empty() || l.raw_info.contains(rule.when_key))) {
        l.log_id = rule.to;
        ++report.relabelled;
        break;
      }
    }
  }

  {
    std::unordered_set<std::string> seen;
    std::vector<RawLog> kept;
    kept.reserve(logs.size());
    for (auto& l : logs) {
      std::string key = l.log_id + '\x1f' + std::to_string(l.timestamp) + '\x1f' + l.raw_info.dump();
      if (seen.insert(std::move(key)).second) {
        kept.push_back(std::move(l));
      } else {
        ++report.merged;
      }
    }
    logs = std::move(kept);
  }

  for (const auto& rule : rules.merges) {
    std::vector<bool> drop(logs.size(), false);
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const auto& a = logs[i];
      if (a.log_id != rule.absorbed) continue;
      if (rule.value) {
        auto v = a.raw_info.find(rule.key);
        if (v == a.raw_info.end() || !v->is_number() || v->get<double>() != *rule.value) continue;
      }
      for (std::size_t k = 0; k < logs.size(); ++k) {
        auto& target = logs[k];
        if (drop[k] || target.log_id != rule.into || target.timestamp != a.timestamp) continue;
        if (!rule.key.empty() && target.raw_info.contains(rule.key)) continue;
        detail::fold_state_keys(target.raw_info, a.raw_info, rules);
        if (!rule.key.empty() && !target.raw_info.contains(rule.key)) {
          target.raw_info[rule.key] = a.raw_info.value(rule.key, Json(0));
        }
        drop[i] = true;
        ++report.merged;
        break;
      }
    }
    std::vector<RawLog> kept;
    for (std::size_t i = 0; i < logs.size(); ++i) {
      if (!drop[i]) kept.push_back(std::move(logs[i]));
    }
    logs = std::move(kept);
  }

  {
    std::vector<std::size_t> order(logs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (logs[a].timestamp != logs[b].timestamp) return logs[a].timestamp < logs[b].timestamp;
      return rules.priority_of(logs[a].log_id) < rules.priority_of(logs[b].log_id);
    });
    std::vector<RawLog> sorted;
    sorted.reserve(logs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (order[i] != i) ++report.reordered;
      sorted.push_back(std::move(logs[order[i]]));
    }
    logs = std::move(sorted);
  }

  {
    const std::string login = "LoginRole", logout = "LogoutRole";
    std::vector<RawLog> out;
    out.reserve(logs.size() + 2);
    bool in_session = false;
    for (auto& l : logs) {
      if (l.log_id == login) {
        if (in_session) {
          // A repeated login in the same second as its predecessor is a duplicate.
          if (out.back().timestamp == l.timestamp) {
            ++report.pair_repaired;
            continue;
          }
          out.push_back(detail::synthetic(logout, out.back().timestamp));
          ++report.pair_repaired;
        }
        in_session = true;
      } else if (l.log_id == logout) {
        if (!in_session) {
          if (!out.empty() && out.back().log_id == logout && out.back().timestamp == l.timestamp) {
            ++report.pair_repaired;
            continue;
          }
          out.push_back(detail::synthetic(login, l.timestamp));
          ++report.pair_repaired;
        }
        in_session = false;
      } else if (!in_session) {
        out.push_back(detail::synthetic(login, l.timestamp));
        ++report.pair_repaired;
        in_session = true;
      }
      out.push_back(std::move(l));
    }
    if (in_session) {
      out.push_back(detail::synthetic(logout, out.back().timestamp));
      ++report.pair_repaired;
    }
    logs = std::move(out);
  }

  return {std::move(logs), report};
}

// Own score: raw_info "score", else "total<seat>", else "total1".
inline std::optional<bool> detect_win(const Json& raw_info) {
  auto number = [&](const std::string& key) -> std::optional<double> {
    auto it = raw_info.find(key);
    if (it == raw_info.end() || !it->is_number()) return std::nullopt;
    return it->get<double>();
  };
  if (auto s = number("score")) return *s > 0.0;
  if (auto seat = number("seat")) {
    if (auto s = number("total" + std::to_string(static_cast<long long>(*seat)))) return *s > 0.0;
    return std::nullopt;
  }
  if (auto s = number("total1")) return *s > 0.0;
  return std::nullopt;
}

// One Step per action event. States accumulate raw_info deltas of every
// record up to and including the step's own record; OnlineDuration is the
// in-session time elapsed so far. The final interval runs to
// `end_of_observation`.
inline PlaySequence derive_sequence(const std::string& user_id, const std::vector<RawLog>& logs,
                                    Timestamp end_of_observation, const IngestRules& rules) {
  PlaySequence seq{user_id, {}};
  std::vector<Timestamp> times;
  StateVector counters{};
  double closed_online = 0.0;
  bool in_session = false;
  Timestamp session_start = 0;

  for (const auto& l : logs) {
    for (const auto& [key, dim] : rules.state_keys) {
      auto it = l.raw_info.find(key);
      if (it != l.raw_info.end() && it->is_number()) counters[dim] += it->get<double>();
    }
    if (l.log_id == "LoginRole") {
      in_session = true;
      session_start = l.timestamp;
    }
    const double open = in_session ? static_cast<double>(l.timestamp - session_start) : 0.0;
    if (l.log_id == "LogoutRole") {
      closed_online += open;
      in_session = false;
      counters[kOnlineDuration] = closed_online;
    } else {
      counters[kOnlineDuration] = closed_online + open;
    }
    const auto action = find_action(l.log_id);
    if (!action) continue;
    Step st;
    st.state = counters;
    st.action = *action;
    st.kind = kind_for(*action);
    if (rules.match_actions.contains(*action)) st.win = detect_win(l.raw_info);
    seq.steps.push_back(st);
    times.push_back(l.timestamp);
  }
  if (seq.steps.empty()) throw DataError("user '" + user_id + "' has no action events");
  for (std::size_t j = 0; j < seq.steps.size(); ++j) {
    const Timestamp next = j + 1 < times.size() ? times[j + 1] : end_of_observation;
    const Timestamp dt = next - times[j];
    if (dt < 0) {
      throw DataError("user '" + user_id + "': negative interval at step " + std::to_string(j) +
                      " (logs not cleaned)");
    }
    seq.steps[j].interval_seconds = static_cast<double>(dt);
  }
  return seq;
}

struct IngestResult {
  Dataset dataset;
  std::map<std::string, CleaningReport> reports;
  Timestamp end_of_observation = 0;
};

// Per-user documents keyed by user_id. The end of observation is the
// latest timestamp across all users; sequences come out in user_id order.
inline IngestResult ingest_documents(const std::map<std::string, std::string>& documents,
                                     const IngestRules& rules) {
  IngestResult result;
  std::map<std::string, std::vector<RawLog>> cleaned;
  bool any = false;
  for (const auto& [user, doc] : documents) {
    std::vector<RawLog> logs;
    try {
      logs = parse_logs(doc);
    } catch (const DataError& e) {
      throw DataError("user '" + user + "': " + e.what());
    }
    auto [clean, report] = clean_logs(std::move(logs), rules);
    for (const auto& l : clean) {
      result.end_of_observation = any ? std::max(result.end_of_observation, l.timestamp) : l.timestamp;
      any = true;
    }
    result.reports[user] = report;
    cleaned[user] = std::move(clean);
  }
  for (const auto& [user, logs] : cleaned) {
    result.dataset.sequences.push_back(derive_sequence(user, logs, result.end_of_observation, rules));
  }
  return result;
}

}  // namespace lafee::ingest
