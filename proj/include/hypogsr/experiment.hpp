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

#ifndef HYPOGSR_EXPERIMENT_HPP_
#define HYPOGSR_EXPERIMENT_HPP_

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hypogsr/config.hpp"
#include "hypogsr/dsp.hpp"
#include "hypogsr/eval.hpp"
#include "hypogsr/ingest.hpp"
#include "hypogsr/windowing.hpp"

namespace hypogsr {

struct LoadedCohort {
  Cohort cohort;
  std::vector<std::string> sources;  // per subject: file path or "synthetic"
};

// Synthetic generation or the configured input files (directories are
// scanned for .xml/.csv, sorted by name).
LoadedCohort load_cohort(const RunConfig& cfg);

// Per-subject preprocessing; errors name the source file.
std::vector<UniformSeries> preprocess_cohort(const LoadedCohort& loaded, const RunConfig& cfg);

struct PreparedData {
  std::size_t n_subjects = 0;
  std::size_t total_steps = 0;
  std::vector<LabeledWindow> windows;
  SplitAssignment split;
  std::string digest;  // windows digest, hex
  bool from_cache = false;
};

// Windows come from `<out>/cache` when a file for the data digest exists and
// `cfg.force` is off.
PreparedData prepare_dataset(const RunConfig& cfg);

struct Cell {
  Family family;
  FeatureLayout mode;
};
std::vector<Cell> experiment_cells(const RunConfig& cfg);

// Trains and scores one cell. Failures inside the cell are recorded on the
// result, not thrown.
CellResult run_cell(const RunConfig& cfg, const PreparedData& data, const Cell& cell);

EvaluationReport run_experiment(const RunConfig& cfg, const PreparedData& data);

// Writes report.<ext> for every configured format, roc_<cell>.csv,
// resolved_config.yaml and timings.json into cfg.out_dir.
void write_outputs(const RunConfig& cfg, const EvaluationReport& report);

}  // namespace hypogsr

#endif  // HYPOGSR_EXPERIMENT_HPP_
