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

// lafee: preprocess | synth | train | eval | extract | analyze
//
// Settings resolve as defaults <- --config file <- flags. Every subcommand
// writes the resolved settings to <out>/run_config.json; passing that file
// back with --config reproduces the run.
//
// Exit codes: 0 ok, 2 usage or configuration, 3 data, 4 numeric.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "lafee/lafee.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Paths {
  std::string input;       // preprocess: log file or directory of per-user logs
  std::string data;        // step file
  std::string checkpoint;
  std::string split;
  std::string out = "out";
};

struct RunConfig {
  std::string command;
  std::uint64_t seed = 1;
  std::string model = "lafee";
  lafee::LaFeeDims lafee_dims;
  lafee::LstmDims lstm_dims;
  lafee::TrainConfig train;
  double train_fraction = 0.7;
  std::vector<double> tau_days{1.0, 3.0, 7.0};
  lafee::synth::SynthConfig synth;
  lafee::ingest::IngestRules ingest = lafee::ingest::IngestRules::defaults();
  std::string scalarization = "readout";
  std::size_t win_rate_window = lafee::analysis::kWinRateWindow;
  lafee::analysis::LogoutBinning logout_bins;
  Paths paths;
};

json to_json(const RunConfig& c) {
  return {{"command", c.command},
          {"seed", c.seed},
          {"model", c.model},
          {"lafee_dims", lafee::dims_to_json(c.lafee_dims)},
          {"lstm_dims", lafee::dims_to_json(c.lstm_dims)},
          {"train", lafee::to_json(c.train)},
          {"train_fraction", c.train_fraction},
          {"tau_days", c.tau_days},
          {"synth", lafee::synth::to_json(c.synth)},
          {"ingest", json::parse(lafee::ingest::to_json(c.ingest).dump())},
          {"analysis",
           {{"scalarization", c.scalarization},
            {"win_rate_window", c.win_rate_window},
            {"logout_bin_seconds", c.logout_bins.bin_seconds},
            {"logout_max_seconds", c.logout_bins.max_seconds}}},
          {"paths",
           {{"input", c.paths.input},
            {"data", c.paths.data},
            {"checkpoint", c.paths.checkpoint},
            {"split", c.paths.split},
            {"out", c.paths.out}}}};
}

void merge_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lafee::ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw lafee::ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    c.seed = j.value("seed", c.seed);
    c.model = j.value("model", c.model);
    if (j.contains("lafee_dims")) lafee::dims_from_json(j["lafee_dims"], c.lafee_dims);
    if (j.contains("lstm_dims")) lafee::dims_from_json(j["lstm_dims"], c.lstm_dims);
    if (j.contains("train")) c.train = lafee::train_config_from_json(j["train"], c.train);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.tau_days = j.value("tau_days", c.tau_days);
    if (j.contains("synth")) c.synth = lafee::synth::synth_config_from_json(j["synth"], c.synth);
    if (j.contains("ingest")) {
      c.ingest = lafee::ingest::rules_from_json(lafee::ingest::Json::parse(j["ingest"].dump()));
    }
    if (j.contains("analysis")) {
      const auto& a = j["analysis"];
      c.scalarization = a.value("scalarization", c.scalarization);
      c.win_rate_window = a.value("win_rate_window", c.win_rate_window);
      c.logout_bins.bin_seconds = a.value("logout_bin_seconds", c.logout_bins.bin_seconds);
      c.logout_bins.max_seconds = a.value("logout_max_seconds", c.logout_bins.max_seconds);
    }
    if (j.contains("paths")) {
      const auto& p = j["paths"];
      c.paths.input = p.value("input", c.paths.input);
      c.paths.data = p.value("data", c.paths.data);
      c.paths.checkpoint = p.value("checkpoint", c.paths.checkpoint);
      c.paths.split = p.value("split", c.paths.split);
      c.paths.out = p.value("out", c.paths.out);
    }
  } catch (const json::exception& e) {
    throw lafee::ConfigError("config file '" + path + "': " + e.what());
  }
}

std::vector<double> parse_days(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw lafee::ConfigError("bad --tau-days entry '" + item + "'");
    }
  }
  if (out.empty()) throw lafee::ConfigError("--tau-days is empty");
  return out;
}

void validate(const RunConfig& c) {
  if (c.model != "lafee" && c.model != "lstm") throw lafee::ConfigError("--model must be lafee or lstm");
  c.lafee_dims.validate();
  c.lstm_dims.validate();
  c.train.validate();
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) {
    throw lafee::ConfigError("train_fraction must lie strictly between 0 and 1");
  }
  for (double d : c.tau_days) lafee::ChurnCriterion::from_days(d);
  lafee::analysis::parse_scalarization(c.scalarization);
}

std::string require_path(const std::string& p, const char* what) {
  if (p.empty()) throw lafee::ConfigError(std::string("missing ") + what);
  return p;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw lafee::DataError("cannot write '" + p.string() + "'");
  return os;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw lafee::DataError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_run_config(const RunConfig& c) {
  auto os = open_out(fs::path(c.paths.out) / "run_config.json");
  os << to_json(c).dump(2) << '\n';
}

lafee::Dataset load_steps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lafee::DataError("cannot read step file '" + path + "'");
  auto ds = lafee::read_steps(in);
  lafee::validate(ds);
  return ds;
}

lafee::UserSplit load_split(const RunConfig& c, const lafee::Dataset& ds) {
  if (c.paths.split.empty()) return lafee::split_users(ds, c.train_fraction, c.seed);
  const auto j = json::parse(read_file(c.paths.split), nullptr, false);
  if (j.is_discarded() || !j.contains("train") || !j.contains("test")) {
    throw lafee::DataError("split file '" + c.paths.split + "' is malformed");
  }
  lafee::UserSplit s;
  for (const auto& u : j["train"]) s.train.insert(u.get<std::string>());
  for (const auto& u : j["test"]) s.test.insert(u.get<std::string>());
  return s;
}

// ------------------------------------------------------------ subcommands

void run_preprocess(const RunConfig& c) {
  const fs::path input = require_path(c.paths.input, "--input");
  std::map<std::string, std::string> docs;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_regular_file() && e.path().extension() == ".json") {
        docs[e.path().stem().string()] = read_file(e.path());
      }
    }
  } else {
    docs[input.stem().string()] = read_file(input);
  }
  if (docs.empty()) throw lafee::DataError("no .json log files under '" + input.string() + "'");
  const auto result = lafee::ingest::ingest_documents(docs, c.ingest);
  lafee::validate(result.dataset);
  {
    auto os = open_out(fs::path(c.paths.out) / "steps.tsv");
    lafee::write_steps(os, result.dataset);
  }
  lafee::ingest::Json report = lafee::ingest::Json::object();
  for (const auto& [user, r] : result.reports) report[user] = lafee::ingest::to_json(r);
  auto os = open_out(fs::path(c.paths.out) / "cleaning_report.json");
  os << report.dump(2) << '\n';
  std::cerr << "preprocess: " << result.dataset.sequences.size() << " users, "
            << result.dataset.step_count() << " steps\n";
}

void run_synth(const RunConfig& c) {
  const auto out = lafee::synth::generate(c.synth);
  const fs::path dir(c.paths.out);
  fs::create_directories(dir / "logs");
  for (const auto& [user, logs] : out.logs) {
    auto os = open_out(dir / "logs" / (user + ".json"));
    os << lafee::ingest::logs_to_json(logs) << '\n';
  }
  {
    auto os = open_out(dir / "steps.tsv");
    lafee::write_steps(os, out.dataset);
  }
  auto os = open_out(dir / "ground_truth.csv");
  lafee::synth::write_ground_truth(os, out.truth);
  std::cerr << "synth: " << out.dataset.sequences.size() << " users, " << out.dataset.step_count()
            << " steps\n";
}

template <typename Model>
void train_model(const RunConfig& c, const typename Model::Dims& dims) {
  const auto ds = load_steps(require_path(c.paths.data, "--data"));
  const auto split = load_split(c, ds);
  const auto train_ds = lafee::subset(ds, split.train);
  const auto test_ds = lafee::subset(ds, split.test);
  const auto scaler = lafee::StateScaler::fit(train_ds);
  const auto enc_train = lafee::encode_dataset(train_ds, scaler, c.train.target_transform);
  const auto enc_test = lafee::encode_dataset(test_ds, scaler, c.train.target_transform);
  const auto fit = lafee::fit<Model>(dims, enc_train, c.train, &enc_test);

  const fs::path dir(c.paths.out);
  {
    auto os = open_out(dir / "checkpoint.bin");
    lafee::save_checkpoint<Model>(os, {fit.params, scaler, c.train});
  }
  {
    auto os = open_out(dir / "train_log.csv");
    lafee::write_training_log(os, fit.log);
  }
  auto os = open_out(dir / "split.json");
  os << json{{"seed", c.seed}, {"train", split.train}, {"test", split.test}}.dump(2) << '\n';
  if (!fit.log.empty()) {
    std::cerr << "train: final train loss " << fit.log.back().train_loss << ", validation loss "
              << fit.log.back().validation_loss << '\n';
  }
}

void run_train(const RunConfig& c) {
  if (c.model == "lafee") {
    train_model<lafee::LaFeeModel>(c, c.lafee_dims);
  } else {
    train_model<lafee::LstmModel>(c, c.lstm_dims);
  }
}

std::string checkpoint_kind(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw lafee::DataError("cannot read checkpoint '" + path + "'");
  return lafee::read_checkpoint_header(in).value("model", "");
}

template <typename Model>
lafee::Checkpoint<Model> load_ck(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw lafee::DataError("cannot read checkpoint '" + path + "'");
  return lafee::load_checkpoint<Model>(in);
}

template <typename Model>
void eval_model(const RunConfig& c) {
  const auto ck = load_ck<Model>(c.paths.checkpoint);
  const auto ds = load_steps(require_path(c.paths.data, "--data"));
  const auto split = load_split(c, ds);
  const auto cohorts = lafee::analysis::assign_cohorts(ds, c.ingest.match_actions);
  std::vector<lafee::ChurnCriterion> taus;
  for (double d : c.tau_days) taus.push_back(lafee::ChurnCriterion::from_days(d));
  const auto predictor = [&](const lafee::EncodedSequence& s) {
    return lafee::predict<Model>(ck.params, s);
  };

  auto os = open_out(fs::path(c.paths.out) / "churn_report.csv");
  lafee::write_churn_csv_header(os);
  for (const auto cohort : lafee::analysis::kCohortNames) {
    std::set<std::string> users;
    const auto members = cohorts.members(cohort);
    for (const auto& u : split.test) {
      if (members.contains(u)) users.insert(u);
    }
    const auto test = lafee::encode_dataset(lafee::subset(ds, users), ck.scaler, ck.train.target_transform);
    std::size_t n_out = 0;
    for (const auto& s : test.sequences) {
      for (const auto& st : s.steps) n_out += st.kind == lafee::IntervalKind::OffGame;
    }
    if (n_out == 0) {
      std::cerr << "eval: cohort " << cohort << " has no logout steps in the test split, skipped\n";
      continue;
    }
    const auto ev = lafee::evaluate(predictor, test, taus, std::string(cohort));
    for (const auto& r : ev.reports) lafee::write_churn_csv_row(os, r);
  }
}

void run_eval(const RunConfig& c) {
  const auto kind = checkpoint_kind(require_path(c.paths.checkpoint, "--checkpoint"));
  if (kind == "lafee") {
    eval_model<lafee::LaFeeModel>(c);
  } else if (kind == "lstm") {
    eval_model<lafee::LstmModel>(c);
  } else {
    throw lafee::DataError("checkpoint holds an unknown model kind '" + kind + "'");
  }
}

struct Latents {
  lafee::Dataset dataset;
  lafee::analysis::LatentTable table;
};

Latents latents_for(const RunConfig& c) {
  const auto path = require_path(c.paths.checkpoint, "--checkpoint");
  if (checkpoint_kind(path) != "lafee") {
    throw lafee::ConfigError("latent feelings exist only for lafee checkpoints");
  }
  const auto ck = load_ck<lafee::LaFeeModel>(path);
  Latents l;
  l.dataset = load_steps(require_path(c.paths.data, "--data"));
  const auto enc = lafee::encode_dataset(l.dataset, ck.scaler, ck.train.target_transform);
  l.table = lafee::analysis::extract_latents(ck.params, enc,
                                             lafee::analysis::parse_scalarization(c.scalarization));
  return l;
}

void run_extract(const RunConfig& c) {
  const auto l = latents_for(c);
  auto os = open_out(fs::path(c.paths.out) / "latents.csv");
  lafee::analysis::write_latents(os, l.table);
}

void run_analyze(const RunConfig& c) {
  namespace an = lafee::analysis;
  const auto l = latents_for(c);
  const fs::path dir(c.paths.out);
  {
    auto os = open_out(dir / "cohorts.csv");
    const auto cohorts = an::assign_cohorts(l.dataset, c.ingest.match_actions);
    an::write_cohorts(os, cohorts);
    if (!cohorts.no_match_users.empty()) {
      std::cerr << "analyze: " << cohorts.no_match_users.size()
                << " users without flagged matches left out of win-rate cohorts\n";
    }
  }
  {
    const auto t = an::sat_vs_winrate(l.table, l.dataset, c.win_rate_window, c.ingest.match_actions);
    if (t.samples == 0) std::cerr << "analyze: no match step has enough preceding matches\n";
    auto os = open_out(dir / "sat_vs_winrate.csv");
    an::write_binned(os, t);
  }
  {
    auto os = open_out(dir / "sat_vs_logout.csv");
    an::write_binned(os, an::sat_vs_logout(l.table, c.logout_bins));
  }
  {
    auto os = open_out(dir / "aspiration_matrix.csv");
    an::write_aspiration_matrix(os, an::aspiration_matrix(l.table));
  }
  auto os = open_out(dir / "user_aspiration.csv");
  os << "user_id,component,value\n";
  for (const auto& [user, v] : an::mean_aspiration_by_user(l.table)) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      os << user << ',' << i << ',' << lafee::format_double(v(i)) << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-feeling churn modelling"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> model, out, input, data, checkpoint, split, tau_days;
  std::optional<double> lambda_in, lambda_out, learning_rate;
  std::optional<int> epochs;
  std::optional<std::size_t> n_users;

  app.add_option("--config", config_path, "JSON settings file");
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out, "Output directory");

  auto* pre = app.add_subcommand("preprocess", "Clean raw JSON logs into a step file");
  pre->add_option("--input", input, "Log file or directory of <user_id>.json files");
  auto* syn = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
  syn->add_option("--users", n_users, "Number of users");
  auto* tr = app.add_subcommand("train", "Fit LaFee or the LSTM baseline");
  auto* ev = app.add_subcommand("eval", "Churn accuracy per cohort and tau");
  auto* ex = app.add_subcommand("extract", "Per-step latent feelings");
  auto* an = app.add_subcommand("analyze", "Cohort, win-rate, logout and aspiration tables");
  for (auto* sub : {tr, ev, ex, an}) {
    sub->add_option("--data", data, "Step file");
    sub->add_option("--split", split, "Split file written by train");
  }
  for (auto* sub : {ev, ex, an}) sub->add_option("--checkpoint", checkpoint, "Checkpoint file");
  tr->add_option("--model", model, "lafee or lstm");
  tr->add_option("--lambda-in", lambda_in, "Weight of the in-game loss term");
  tr->add_option("--lambda-out", lambda_out, "Weight of the logout loss term");
  tr->add_option("--learning-rate", learning_rate, "SGD step size");
  tr->add_option("--epochs", epochs, "Training epochs");
  ev->add_option("--tau-days", tau_days, "Comma-separated churn thresholds in days");
  for (auto* sub : {pre, syn, tr, ev, ex, an}) {
    sub->add_option("--config", config_path, "JSON settings file");
    sub->add_option("--seed", seed, "Master seed");
    sub->add_option("--out", out, "Output directory");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig c;
    if (!config_path.empty()) merge_file(c, config_path);
    c.command = app.get_subcommands().front()->get_name();
    if (seed) c.seed = *seed;
    if (model) c.model = *model;
    if (out) c.paths.out = *out;
    if (input) c.paths.input = *input;
    if (data) c.paths.data = *data;
    if (checkpoint) c.paths.checkpoint = *checkpoint;
    if (split) c.paths.split = *split;
    if (tau_days) c.tau_days = parse_days(*tau_days);
    if (lambda_in) c.train.lambda_in = *lambda_in;
    if (lambda_out) c.train.lambda_out = *lambda_out;
    if (learning_rate) c.train.learning_rate = *learning_rate;
    if (epochs) c.train.epochs = *epochs;
    if (n_users) c.synth.n_users = *n_users;
    c.train.seed = c.seed;
    c.synth.seed = c.seed;
    validate(c);

    fs::create_directories(c.paths.out);
    write_run_config(c);
    if (c.command == "preprocess") run_preprocess(c);
    else if (c.command == "synth") run_synth(c);
    else if (c.command == "train") run_train(c);
    else if (c.command == "eval") run_eval(c);
    else if (c.command == "extract") run_extract(c);
    else run_analyze(c);
  } catch (const lafee::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const lafee::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const lafee::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
