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

#ifndef HYPOGSR_CONFIG_HPP_
#define HYPOGSR_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hypogsr/dsp.hpp"
#include "hypogsr/eval.hpp"
#include "hypogsr/ingest.hpp"
#include "hypogsr/models.hpp"
#include "hypogsr/windowing.hpp"
#include "json.hpp"

namespace hypogsr {

inline constexpr const char* kOutputEnvVar = "HYPOGSR_OUT";

struct RunConfig {
  std::uint64_t seed = 7;

  bool synthetic = true;
  std::vector<std::string> inputs;  // files or directories of subject files
  CsvSchema csv;
  SynthConfig synth;  // seed is derived from the master seed

  PreprocessOptions preprocess;
  WindowOptions window;
  SplitOptions split;

  std::vector<Family> models;            // sorted by short name
  std::vector<FeatureLayout> feature_modes;
  TrainConfig train;
  std::map<Family, nlohmann::json> family_overrides;

  std::size_t bootstrap_iterations = 1000;
  double ci_level = 0.95;
  bool parallel_cells = true;

  std::filesystem::path out_dir = "out";
  std::vector<ReportFormat> formats;
  bool force = false;

  nlohmann::json resolved;  // every knob, after defaults and overrides

  TrainConfig train_config(Family family) const;  // base train block plus overrides
  std::string digest() const;       // excludes output-only keys
  std::string data_digest() const;  // the keys that shape the window set
};

// The documented defaults as a config tree.
nlohmann::json default_config_tree();

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> models;        // comma separated
  std::optional<std::string> feature_mode;  // sequence, static or both
  std::optional<bool> synthetic;
  std::optional<std::string> split;         // "a,b,c"
  std::vector<std::string> inputs;
  std::vector<std::string> sets;            // dotted.key=value
  bool force = false;
};

// Defaults, then the YAML file (if any), then CLI overrides. Unknown keys and
// out-of-range values raise ConfigError.
RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});
RunConfig config_from_yaml(std::string_view yaml_text, const ConfigOverrides& overrides = {});
RunConfig config_from_tree(const nlohmann::json& tree);

// Canonical text of the resolved tree (JSON, which YAML readers accept).
std::string resolved_config_text(const RunConfig& cfg);

}  // namespace hypogsr

#endif  // HYPOGSR_CONFIG_HPP_
