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

#include "hypogsr/experiment.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <map>

#include "hypogsr/error.hpp"
#include "hypogsr/kernels.hpp"
#include "hypogsr/seed.hpp"
#include "hypogsr/text.hpp"

namespace hypogsr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool is_subject_file(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".xml" || ext == ".csv";
}

std::vector<fs::path> input_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p))
        if (entry.is_regular_file() && is_subject_file(entry.path())) found.push_back(entry.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(p)) {
      files.push_back(p);
    } else {
      throw ConfigError("input " + in + " does not exist");
    }
  }
  if (files.empty()) throw ConfigError("no .xml or .csv subject files found in the inputs");
  return files;
}

fs::path cache_dir(const RunConfig& cfg) { return cfg.out_dir / "cache"; }

void try_write(const fs::path& path, std::string_view bytes) {
  try {
    fs::create_directories(path.parent_path());
    write_file(path, bytes);
  } catch (const std::exception& e) {
    spdlog::warn("cache write failed for {}: {}", path.string(), e.what());
  }
}

std::vector<int> pick(std::span<const int> labels, std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(labels[r]);
  return out;
}

SplitSummary summarize(std::string name, std::span<const LabeledWindow> windows,
                       std::span<const std::size_t> rows) {
  SplitSummary s;
  s.name = std::move(name);
  s.windows = rows.size();
  for (auto r : rows) {
    if (windows[r].label == GlycemicLabel::kHypo) ++s.hypo;
    ++s.subjects[windows[r].subject_id];
  }
  return s;
}

std::string cell_key(const Cell& c) {
  return std::string(family_name(c.family)) + "_" + std::string(layout_name(c.mode));
}

std::string cell_path(const Cell& c) {
  return std::string(family_name(c.family)) + "/" + std::string(layout_name(c.mode));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

LoadedCohort load_cohort(const RunConfig& cfg) {
  LoadedCohort out;
  if (cfg.synthetic) {
    out.cohort = kernels::omp::generate_cohort(cfg.synth);
    out.sources.assign(out.cohort.subjects.size(), "synthetic");
    return out;
  }
  std::map<SourceTag, LoadedCohort> by_tag;
  for (const auto& file : input_files(cfg.inputs)) {
    const SourceTag tag = infer_source_tag(file);
    auto& slot = by_tag[tag];
    slot.cohort.subjects.push_back(load_subject_file(file, tag, cfg.csv));
    slot.sources.push_back(file.string());
  }
  for (auto& [tag, part] : by_tag) {
    out.cohort = merge_cohorts(std::move(out.cohort), std::move(part.cohort));
    out.sources.insert(out.sources.end(), part.sources.begin(), part.sources.end());
  }
  return out;
}

std::vector<UniformSeries> preprocess_cohort(const LoadedCohort& loaded, const RunConfig& cfg) {
  const auto& subjects = loaded.cohort.subjects;
  std::vector<UniformSeries> series(subjects.size());
  kernels::omp::for_each_index(subjects.size(), [&](std::size_t i) {
    try {
      series[i] = preprocess_subject(subjects[i], cfg.preprocess);
    } catch (Error& e) {
      if (loaded.sources[i] != "synthetic") e.add_context(loaded.sources[i]);
      throw;
    }
  });
  return series;
}

PreparedData prepare_dataset(const RunConfig& cfg) {
  PreparedData data;
  const std::string dd = cfg.data_digest();
  const fs::path win_path = cache_dir(cfg) / ("windows_" + dd + ".bin");
  const fs::path meta_path = cache_dir(cfg) / ("windows_" + dd + ".json");

  bool cached = false;
  if (!cfg.force && fs::exists(win_path) && fs::exists(meta_path)) {
    try {
      data.windows = decode_windows(read_file(win_path));
      const json meta = json::parse(read_file(meta_path));
      data.n_subjects = meta.at("n_subjects").get<std::size_t>();
      data.total_steps = meta.at("total_steps").get<std::size_t>();
      cached = true;
      spdlog::info("windows loaded from cache {}", win_path.string());
    } catch (const std::exception& e) {
      spdlog::warn("ignoring unreadable window cache: {}", e.what());
      data.windows.clear();
    }
  }
  if (!cached) {
    const LoadedCohort loaded = load_cohort(cfg);
    const auto series = preprocess_cohort(loaded, cfg);
    data.n_subjects = series.size();
    for (const auto& s : series) {
      data.total_steps += s.size();
      auto w = make_windows(s, cfg.window);
      data.windows.insert(data.windows.end(), std::make_move_iterator(w.begin()),
                          std::make_move_iterator(w.end()));
    }
    try_write(win_path, encode_windows(data.windows));
    try_write(meta_path,
              json{{"n_subjects", data.n_subjects}, {"total_steps", data.total_steps}}.dump());
  }
  data.from_cache = cached;
  if (data.windows.empty()) throw InsufficientDataError("no complete windows in the cohort");
  data.split = stratified_split(data.windows, cfg.split, derive_seed(cfg.seed, "split"));
  data.digest = hex_digest(windows_digest(data.windows));
  spdlog::info("{} subjects, {} windows ({} train / {} val / {} test)", data.n_subjects,
               data.windows.size(), data.split.train.size(), data.split.val.size(),
               data.split.test.size());
  return data;
}

std::vector<Cell> experiment_cells(const RunConfig& cfg) {
  std::vector<Cell> cells;
  for (Family f : cfg.models)
    for (FeatureLayout m : cfg.feature_modes) cells.push_back({f, m});
  return cells;
}

CellResult run_cell(const RunConfig& cfg, const PreparedData& data, const Cell& cell) {
  CellResult r;
  r.family = cell.family;
  r.mode = cell.mode;
  const auto t0 = std::chrono::steady_clock::now();
  const std::string key = cell_key(cell);
  try {
    TrainConfig tc = cfg.train_config(cell.family);
    tc.seed = derive_seed(cfg.seed, "model/" + cell_path(cell));

    const auto full = FeatureMatrix::from_windows(data.windows, cell.mode);
    const auto labels = binary_labels(data.windows);
    const auto x_train = full.select(data.split.train);
    const auto x_val = full.select(data.split.val);
    const auto x_test = full.select(data.split.test);
    const auto y_train = pick(labels, data.split.train);
    const auto y_val = pick(labels, data.split.val);
    const auto y_test = pick(labels, data.split.test);
    if (x_test.rows == 0) throw InsufficientDataError("test split is empty");

    const std::string digest = cfg.digest();
    const fs::path model_path = cache_dir(cfg) / ("model_" + key + "_" + digest + ".bin");
    std::unique_ptr<TrainedModel> model;
    if (!cfg.force && fs::exists(model_path)) {
      try {
        model = load_model(read_file(model_path), digest).model;
        spdlog::info("{}: model loaded from cache", key);
      } catch (const std::exception& e) {
        spdlog::warn("{}: ignoring unreadable model cache: {}", key, e.what());
      }
    }
    if (!model) {
      spdlog::info("{}: training on {} windows", key, x_train.rows);
      model = fit_model(cell.family, x_train, y_train, tc, x_val, y_val);
      try_write(model_path, save_model(*model, digest));
    }
    r.meta = model->meta();

    const auto test_scores = model->predict_proba(x_test);
    r.test = evaluate_predictions(test_scores, tc.threshold, y_test, cfg.bootstrap_iterations,
                                  cfg.ci_level, derive_seed(cfg.seed, "bootstrap/" + cell_path(cell)));
    if (x_val.rows > 0) {
      const auto val_scores = model->predict_proba(x_val);
      r.validation = evaluate_predictions(val_scores, tc.threshold, y_val, 0, cfg.ci_level, 0);
    }
    r.roc = roc_curve(test_scores, y_test);
    spdlog::info("{}: test AUC {:.4f}, hypo recall {:.4f}", key, r.test->hypo.auc.value,
                 r.test->hypo.recall.value);
  } catch (const std::exception& e) {
    r.status = "failed";
    r.error = e.what();
    r.meta.reset();
    r.test.reset();
    r.validation.reset();
    r.roc.clear();
    spdlog::error("{}: {}", key, r.error);
  }
  r.runtime_seconds = seconds_since(t0);
  return r;
}

EvaluationReport run_experiment(const RunConfig& cfg, const PreparedData& data) {
  EvaluationReport report;
  report.config = cfg.resolved;
  report.config.erase("output");
  report.config_digest = cfg.digest();
  report.master_seed = cfg.seed;
  report.stage_seeds["split"] = derive_seed(cfg.seed, "split");
  if (cfg.synthetic) report.stage_seeds["synth"] = cfg.synth.seed;
  report.dataset_digest = data.digest;
  report.n_subjects = data.n_subjects;
  report.total_steps = data.total_steps;
  report.n_windows = data.windows.size();
  for (const auto& w : data.windows)
    if (w.label == GlycemicLabel::kHypo) ++report.n_hypo;
  report.discarded_windows = data.split.discarded.size();
  report.splits = {summarize("train", data.windows, data.split.train),
                   summarize("validation", data.windows, data.split.val),
                   summarize("test", data.windows, data.split.test)};

  const auto cells = experiment_cells(cfg);
  for (const auto& c : cells) {
    report.stage_seeds["model/" + cell_path(c)] = derive_seed(cfg.seed, "model/" + cell_path(c));
    report.stage_seeds["bootstrap/" + cell_path(c)] =
        derive_seed(cfg.seed, "bootstrap/" + cell_path(c));
  }
  report.cells.resize(cells.size());
  auto body = [&](std::size_t i) { report.cells[i] = run_cell(cfg, data, cells[i]); };
  if (cfg.parallel_cells) kernels::omp::for_each_index(cells.size(), body);
  else kernels::serial::for_each_index(cells.size(), body);
  return report;
}

void write_outputs(const RunConfig& cfg, const EvaluationReport& report) {
  try {
    fs::create_directories(cfg.out_dir);
  } catch (const fs::filesystem_error& e) {
    throw ConfigError("output directory " + cfg.out_dir.string() + " is not writable: " + e.what());
  }
  for (ReportFormat f : cfg.formats)
    write_file(cfg.out_dir / ("report." + std::string(report_extension(f))), emit_report(report, f));
  json timings = json::object();
  for (const auto& c : report.cells) {
    timings[c.key()] = c.runtime_seconds;
    if (c.ok()) write_file(cfg.out_dir / ("roc_" + c.key() + ".csv"), emit_roc_csv(c.roc));
  }
  write_file(cfg.out_dir / "timings.json", timings.dump(2) + "\n");
  write_file(cfg.out_dir / "resolved_config.yaml", resolved_config_text(cfg));
}

}  // namespace hypogsr
