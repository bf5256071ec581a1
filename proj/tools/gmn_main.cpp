/*
 * Copyright 2026 The GroupMixNorm Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// gmn: train, evaluate and compare GroupMixNorm models on UCI Adult.
//
// Exit codes: 0 success, 1 internal error, 2 usage or configuration error,
// 3 data or checkpoint error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gmn/adult.hpp"
#include "gmn/checkpoint.hpp"
#include "gmn/errors.hpp"
#include "gmn/experiments.hpp"
#include "gmn/fair_metrics.hpp"
#include "gmn/run_config.hpp"
#include "gmn/training.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

// Flags shared by `train` and `experiment`; unset flags leave the config
// file's value alone.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool no_groupmixnorm = false;
  std::optional<double> alpha;
  std::optional<std::size_t> runs;
  std::optional<std::string> protected_attr;
  std::optional<double> threshold;
  std::vector<std::string> data;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Config file (section.key = value)");
  cmd->add_option("--seed", o.seed, "Base seed for every random stream");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_flag("--no-groupmixnorm", o.no_groupmixnorm, "Train the plain classifier");
  cmd->add_option("--alpha", o.alpha, "Beta/Dirichlet concentration");
  cmd->add_option("--runs", o.runs, "Independent runs");
  cmd->add_option("--protected-attr", o.protected_attr, "gender or race")
      ->check(CLI::IsMember({"gender", "race"}));
  cmd->add_option("--threshold", o.threshold, "Decision threshold");
  cmd->add_option("--data", o.data, "Adult files (overrides data.paths)");
  cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
}

gmn::RunConfig resolve(const Overrides& o) {
  gmn::RunConfig cfg;
  if (!o.config.empty()) gmn::apply_config_file(cfg, o.config);
  if (!o.data.empty()) cfg.data_paths.assign(o.data.begin(), o.data.end());
  if (o.seed) cfg.train.seed = *o.seed;
  if (o.out) cfg.output_dir = *o.out;
  if (o.no_groupmixnorm) cfg.model.use_groupmixnorm = false;
  if (o.alpha) cfg.model.mixnorm.alpha = *o.alpha;
  if (o.runs) cfg.train.runs = *o.runs;
  if (o.protected_attr) cfg.protected_attr = gmn::protected_attribute_from_string(*o.protected_attr);
  if (o.threshold) cfg.train.threshold = *o.threshold;
  if (o.threads) cfg.train.threads = *o.threads;
  cfg.validate();
  return cfg;
}

// Write-then-rename so readers never see a partial file.
void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw gmn::Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw gmn::Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::shared_ptr<const gmn::RawTable> load_table(const std::vector<fs::path>& paths) {
  auto raw = std::make_shared<const gmn::RawTable>(gmn::parse_adult(paths));
  std::cerr << "read " << raw->records_read << " records, dropped " << raw->dropped_missing
            << " with missing values\n";
  if (raw->rows.empty()) throw gmn::SchemaError("no usable rows in the data files");
  return raw;
}

std::vector<std::size_t> all_rows(const gmn::RawTable& raw) {
  std::vector<std::size_t> rows(raw.rows.size());
  std::iota(rows.begin(), rows.end(), 0);
  return rows;
}

void write_config(const gmn::RunConfig& cfg) {
  write_file(cfg.output_dir / "config.txt", gmn::to_config_text(cfg));
}

int cmd_train(const Overrides& o) {
  const auto cfg = resolve(o);
  const auto raw = load_table(cfg.data_paths);
  const auto full = gmn::encode(raw, cfg.protected_attr, all_rows(*raw));
  write_config(cfg);
  if (cfg.dump_encoded) {
    std::ostringstream dump;
    gmn::write_dataset_csv(full, dump);
    write_file(cfg.output_dir / "encoded.csv", dump.str());
  }

  const auto report = gmn::run_protocol(full, cfg.model, cfg.train);
  const auto snapshot = gmn::to_json(cfg);
  for (const auto& r : report.runs) {
    const std::string k = std::to_string(r.run);
    write_file(cfg.output_dir / ("trainlog_run" + k + ".csv"), gmn::train_log_csv(r.model));
    write_file(cfg.output_dir / ("report_run" + k + ".json"), json_text(gmn::to_json(r.test)));
    std::ostringstream ckpt;
    gmn::write_checkpoint(ckpt, r.model, snapshot);
    write_file(cfg.output_dir / ("checkpoint_run" + k + ".txt"), ckpt.str());
  }
  write_file(cfg.output_dir / "per_run.csv", gmn::per_run_csv(report));
  write_file(cfg.output_dir / "aggregate.json", json_text(gmn::to_json(report)));
  std::cout << "ap " << report.ap.mean << " dp " << report.dp.mean << " eop " << report.eop.mean
            << " eod " << report.eod.mean << " (" << report.runs.size() << " runs)\n";
  return 0;
}

struct EvalOptions {
  std::string checkpoint;
  std::string predictions;
  std::vector<std::string> data;
  std::string split = "test";
  bool withhold_groups = false;
  std::optional<double> threshold;
  std::optional<std::string> protected_attr;
  std::string out;
};

int write_report(const EvalOptions& e, const gmn::FairnessReport& report) {
  const std::string text = json_text(gmn::to_json(report));
  if (e.out.empty()) {
    std::cout << text;
  } else {
    write_file(e.out, text);
  }
  return 0;
}

int cmd_evaluate(const EvalOptions& e) {
  if (e.checkpoint.empty() == e.predictions.empty()) {
    throw gmn::ConfigError("evaluate needs exactly one of --checkpoint or --predictions");
  }
  if (!e.predictions.empty()) {
    const auto p = gmn::read_prediction_csv(e.predictions, e.threshold.value_or(0.5));
    if (e.withhold_groups) {
      std::cerr << "warning: group labels withheld; fairness metrics skipped\n";
      return write_report(e, gmn::report_without_groups(p.scores, p.y_true, p.threshold));
    }
    return write_report(e, gmn::full_report(p));
  }

  auto loaded = gmn::read_checkpoint(fs::path(e.checkpoint));
  auto& model = loaded.model;
  gmn::RunConfig cfg;
  for (const auto& [key, value] : loaded.run_config.items()) {
    try {
      gmn::apply_config_value(cfg, key, value.get<std::string>());
    } catch (const std::exception& ex) {
      throw gmn::SchemaError(std::string("checkpoint run config: ") + ex.what());
    }
  }
  if (!e.data.empty()) cfg.data_paths.assign(e.data.begin(), e.data.end());
  if (cfg.data_paths.empty()) throw gmn::ConfigError("no data: pass --data or set data.paths");
  if (e.protected_attr &&
      gmn::protected_attribute_from_string(*e.protected_attr) != model.encoder.attribute()) {
    throw gmn::SchemaError("checkpoint was trained with protected attribute '" +
                           std::string(gmn::to_string(model.encoder.attribute())) + "'");
  }
  const double threshold = e.threshold.value_or(model.train.threshold);

  const auto raw = load_table(cfg.data_paths);
  std::vector<std::size_t> rows;
  if (e.split == "all") {
    rows = all_rows(*raw);
  } else {
    const auto full = gmn::encode(raw, model.encoder.attribute(), all_rows(*raw));
    gmn::SplitSpec spec = model.train.split;
    spec.seed = gmn::derive_seed(model.train.seed, gmn::Stream::kSplit, model.run);
    const auto parts = gmn::split_positions(full.size(), spec);
    const auto& pos = e.split == "train" ? parts.train : e.split == "val" ? parts.val : parts.test;
    rows.assign(pos.begin(), pos.end());
  }
  const auto ds = gmn::encode_rows(raw, model.encoder, rows);
  const auto scores = gmn::predict(model.stack, ds.x);
  if (e.withhold_groups) {
    std::cerr << "warning: group labels withheld; fairness metrics skipped\n";
    return write_report(e, gmn::report_without_groups(scores, ds.y, threshold));
  }
  return write_report(
      e, gmn::full_report(gmn::PredictionSet{scores, ds.y, ds.s, threshold},
                          model.train.reference_group));
}

void write_comparison(const gmn::RunConfig& cfg, const std::vector<gmn::ComparisonRow>& rows) {
  write_file(cfg.output_dir / "comparison.csv", gmn::comparison_csv(rows));
  write_file(cfg.output_dir / "comparison.json", json_text(gmn::comparison_json(rows)));
  for (const auto& row : rows) {
    write_file(cfg.output_dir / ("per_run_" + row.model + ".csv"), gmn::per_run_csv(row.report));
  }
  std::cout << gmn::comparison_csv(rows);
}

int cmd_experiment(const std::string& name, const Overrides& o) {
  auto cfg = resolve(o);
  if (name == "newgroups") cfg.protected_attr = gmn::ProtectedAttribute::kRace;
  const auto raw = load_table(cfg.data_paths);
  write_config(cfg);
  if (name == "tradeoff") {
    write_comparison(cfg, gmn::run_tradeoff(raw, cfg));
  } else if (name == "newgroups") {
    write_comparison(cfg, gmn::run_newgroups(raw, cfg));
  } else if (name == "debias") {
    write_comparison(cfg, gmn::run_debias(raw, cfg));
  } else {
    const auto result = gmn::run_representation(raw, cfg);
    write_comparison(cfg, result.rows);
    std::ostringstream proj;
    proj << "model,run,pc1,pc2,y,s\n";
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& a : result.analyses) {
      for (std::size_t i = 0; i < a.projection.rows(); ++i) {
        proj << a.model << ',' << a.run << ',' << nlohmann::json(a.projection(i, 0)).dump()
             << ',' << nlohmann::json(a.projection(i, 1)).dump() << ',' << a.y[i] << ','
             << a.s[i] << '\n';
      }
      auto j = gmn::to_json(a.probes);
      j["model"] = a.model;
      j["run"] = a.run;
      probes.push_back(std::move(j));
    }
    write_file(cfg.output_dir / "projections.csv", proj.str());
    write_file(cfg.output_dir / "probes.json", json_text(probes));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GroupMixNorm fair classification on UCI Adult"};
  app.require_subcommand(1);

  Overrides train_opts;
  auto* train = app.add_subcommand("train", "Run the multi-run training protocol");
  add_common(train, train_opts);

  EvalOptions eval_opts;
  auto* evaluate = app.add_subcommand("evaluate", "Fairness report for a checkpoint or CSV");
  evaluate->add_option("--checkpoint", eval_opts.checkpoint, "checkpoint_run<k>.txt");
  evaluate->add_option("--predictions", eval_opts.predictions, "CSV with score,y_true,group");
  evaluate->add_option("--data", eval_opts.data, "Adult files (default: from the checkpoint)");
  evaluate->add_option("--split", eval_opts.split, "Rows to evaluate")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));
  evaluate->add_flag("--withhold-groups", eval_opts.withhold_groups,
                     "Do not use protected-attribute labels");
  evaluate->add_option("--threshold", eval_opts.threshold, "Decision threshold");
  evaluate->add_option("--protected-attr", eval_opts.protected_attr, "Expected attribute")
      ->check(CLI::IsMember({"gender", "race"}));
  evaluate->add_option("--out", eval_opts.out, "Report file (default: stdout)");

  Overrides exp_opts;
  std::string exp_name;
  auto* experiment = app.add_subcommand("experiment", "Paired plain vs GroupMixNorm studies");
  experiment->add_option("name", exp_name, "tradeoff, newgroups, debias or representation")
      ->required()
      ->check(CLI::IsMember({"tradeoff", "newgroups", "debias", "representation"}));
  add_common(experiment, exp_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_opts);
    if (*evaluate) return cmd_evaluate(eval_opts);
    return cmd_experiment(exp_name, exp_opts);
  } catch (const gmn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const gmn::ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const gmn::SchemaError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
}
