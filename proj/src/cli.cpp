// Copyright 2026 The hypogsr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hypogsr/cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <iostream>

#include "CLI11.hpp"
#include "hypogsr/config.hpp"
#include "hypogsr/error.hpp"
#include "hypogsr/experiment.hpp"
#include "hypogsr/seed.hpp"
#include "hypogsr/text.hpp"

namespace hypogsr {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  ConfigOverrides overrides;
  std::uint64_t seed = 0;
  std::string log_level = "info";
  std::string report_from;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "YAML config file")->check(CLI::ExistingFile);
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&o](const std::uint64_t& s) { o.overrides.seed = s; }, "master seed");
  cmd->add_option_function<std::string>(
      "--out", [&o](const std::string& s) { o.overrides.out = s; }, "output directory");
  cmd->add_option_function<std::string>(
      "--models", [&o](const std::string& s) { o.overrides.models = s; },
      "comma-separated families: cnn,gbdt,knn,logreg,lstm,mlp,rf");
  cmd->add_option_function<std::string>(
         "--feature-mode", [&o](const std::string& s) { o.overrides.feature_mode = s; },
         "sequence, static or both")
      ->check(CLI::IsMember({"sequence", "static", "both"}));
  cmd->add_flag_function(
      "--synthetic", [&o](std::int64_t) { o.overrides.synthetic = true; },
      "use the synthetic cohort");
  cmd->add_option("--input", o.overrides.inputs, "subject file or directory (repeatable)");
  cmd->add_option_function<std::string>(
      "--split", [&o](const std::string& s) { o.overrides.split = s; }, "train,val,test fractions");
  cmd->add_option("--set", o.overrides.sets, "dotted.key=value override (repeatable)");
  cmd->add_flag("--force", o.overrides.force, "ignore cached artifacts");
  cmd->add_option("--log-level", o.log_level, "trace, debug, info, warn, error or off");
}

void setup_logging(const std::string& level, const std::string& seed) {
  auto logger = spdlog::get("hypogsr");
  if (!logger) {
    logger = spdlog::stderr_color_mt("hypogsr");
    spdlog::set_default_logger(logger);
  }
  spdlog::set_pattern("[%T] [seed=" + seed + "] [%l] %v");
  spdlog::set_level(spdlog::level::from_str(level));
}

RunConfig resolve(const Options& o) {
  RunConfig cfg = load_config(o.config_path, o.overrides);
  setup_logging(o.log_level, std::to_string(cfg.seed));
  fs::create_directories(cfg.out_dir);
  write_file(cfg.out_dir / "resolved_config.yaml", resolved_config_text(cfg));
  return cfg;
}

void cmd_synth(const RunConfig& base) {
  RunConfig cfg = base;
  cfg.synthetic = true;
  const auto loaded = load_cohort(cfg);
  const fs::path dir = cfg.out_dir / "cohort";
  fs::create_directories(dir);
  for (const auto& s : loaded.cohort.subjects)
    write_file(dir / (s.subject_id + ".csv"), write_subject_csv(s));
  spdlog::info("wrote {} synthetic subjects to {}", loaded.cohort.subjects.size(), dir.string());
}

void cmd_ingest(const RunConfig& cfg) {
  const auto loaded = load_cohort(cfg);
  const fs::path dir = cfg.out_dir / "ingested";
  fs::create_directories(dir);
  for (std::size_t i = 0; i < loaded.cohort.subjects.size(); ++i) {
    const auto& s = loaded.cohort.subjects[i];
    write_file(dir / (s.subject_id + ".csv"), write_subject_csv(s));
    spdlog::info("{}: {} glucose, {} gsr samples from {}", s.subject_id, s.glucose.size(),
                 s.gsr.size(), loaded.sources[i]);
  }
}

void cmd_preprocess(const RunConfig& cfg) {
  const auto loaded = load_cohort(cfg);
  const auto series = preprocess_cohort(loaded, cfg);
  const fs::path dir = cfg.out_dir / "series";
  fs::create_directories(dir);
  std::vector<LabeledWindow> windows;
  for (const auto& s : series) {
    write_file(dir / (s.subject_id + ".csv"), write_series_csv(s));
    auto w = make_windows(s, cfg.window);
    windows.insert(windows.end(), w.begin(), w.end());
  }
  write_file(cfg.out_dir / "windows.csv", write_windows_csv(windows));
  spdlog::info("{} series, {} windows written to {}", series.size(), windows.size(),
               cfg.out_dir.string());
}

void cmd_train(const RunConfig& cfg) {
  const auto data = prepare_dataset(cfg);
  const fs::path dir = cfg.out_dir / "models";
  fs::create_directories(dir);
  const auto labels = binary_labels(data.windows);
  for (const auto& cell : experiment_cells(cfg)) {
    TrainConfig tc = cfg.train_config(cell.family);
    const std::string path =
        std::string(family_name(cell.family)) + "/" + std::string(layout_name(cell.mode));
    tc.seed = derive_seed(cfg.seed, "model/" + path);
    const auto full = FeatureMatrix::from_windows(data.windows, cell.mode);
    std::vector<int> y_train, y_val;
    for (auto r : data.split.train) y_train.push_back(labels[r]);
    for (auto r : data.split.val) y_val.push_back(labels[r]);
    const auto model = fit_model(cell.family, full.select(data.split.train), y_train, tc,
                                 full.select(data.split.val), y_val);
    const std::string key =
        std::string(family_name(cell.family)) + "_" + std::string(layout_name(cell.mode));
    write_file(dir / (key + ".model"), save_model(*model, cfg.digest()));
    spdlog::info("{}: saved after {} epochs", key, model->meta().epochs_run);
  }
}

int cmd_evaluate(const RunConfig& cfg) {
  const auto data = prepare_dataset(cfg);
  const auto report = run_experiment(cfg, data);
  write_outputs(cfg, report);
  std::size_t failed = 0;
  for (const auto& c : report.cells) failed += c.ok() ? 0 : 1;
  spdlog::info("{} cells, {} failed; reports in {}", report.cells.size(), failed,
               cfg.out_dir.string());
  return 0;
}

void cmd_report(const RunConfig& cfg, const std::string& from) {
  const fs::path src = from.empty() ? cfg.out_dir / "report.json" : fs::path(from);
  if (!fs::exists(src)) throw ConfigError("no report at " + src.string() + "; run evaluate first");
  const auto report = parse_report_json(read_file(src));
  for (ReportFormat f : cfg.formats) {
    const fs::path dst = cfg.out_dir / ("report." + std::string(report_extension(f)));
    if (fs::exists(dst) && fs::equivalent(dst, src)) continue;
    write_file(dst, emit_report(report, f));
  }
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kUser:
      return 1;
    case ErrorCategory::kData:
      return 2;
    case ErrorCategory::kInternal:
      return 3;
  }
  return 3;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"hypogsr: hypoglycemia classification from GSR windows"};
  app.name(args.empty() ? "hypogsr" : args[0]);
  app.require_subcommand(1, 1);
  Options o;
  auto* synth = app.add_subcommand("synth", "write a synthetic cohort as subject CSVs");
  auto* ingest = app.add_subcommand("ingest", "parse subject files into canonical CSVs");
  auto* preprocess = app.add_subcommand("preprocess", "align, clean, filter and window");
  auto* train = app.add_subcommand("train", "train the requested models and save them");
  auto* evaluate = app.add_subcommand("evaluate", "run the model x feature-mode matrix");
  auto* ablate = app.add_subcommand("ablate", "evaluate with both feature modes");
  auto* report = app.add_subcommand("report", "re-render reports from report.json");
  for (auto* cmd : {synth, ingest, preprocess, train, evaluate, ablate, report}) add_common(cmd, o);
  report->add_option("--from", o.report_from, "report.json to render");

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  setup_logging(o.log_level, "unset");
  try {
    if (ablate->parsed()) o.overrides.feature_mode = "both";
    const RunConfig cfg = resolve(o);
    if (synth->parsed()) cmd_synth(cfg);
    else if (ingest->parsed()) cmd_ingest(cfg);
    else if (preprocess->parsed()) cmd_preprocess(cfg);
    else if (train->parsed()) cmd_train(cfg);
    else if (evaluate->parsed() || ablate->parsed()) return cmd_evaluate(cfg);
    else if (report->parsed()) cmd_report(cfg, o.report_from);
    return 0;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.category());
  } catch (const fs::filesystem_error& e) {
    spdlog::error("filesystem: {}", e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("internal: {}", e.what());
    return 3;
  }
}

}  // namespace hypogsr
