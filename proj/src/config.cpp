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

#include "hypogsr/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "hypogsr/error.hpp"
#include "hypogsr/seed.hpp"
#include "hypogsr/text.hpp"

namespace hypogsr {

using nlohmann::json;

json default_config_tree() {
  const TrainConfig t;
  const SynthConfig s;
  const CsvSchema csv;
  json j;
  j["seed"] = 7;
  j["data"] = {{"synthetic", true},
               {"inputs", json::array()},
               {"csv",
                {{"timestamp_column", csv.timestamp_column},
                 {"channel_column", csv.channel_column},
                 {"value_column", csv.value_column},
                 {"glucose_column", csv.glucose_column},
                 {"gsr_column", csv.gsr_column},
                 {"max_bad_row_fraction", csv.max_bad_row_fraction}}},
               {"synth",
                {{"n_subjects", s.n_subjects},
                 {"steps_per_subject", s.steps_per_subject},
                 {"target_prevalence", s.target_prevalence},
                 {"coupling", s.coupling},
                 {"noise_sd", s.noise_sd},
                 {"lead", s.lead}}}};
  j["preprocess"] = {{"filter_order", 2}, {"filter_cutoff", 0.1}, {"max_gap", 3}, {"iqr_k", 1.5}};
  j["window"] = {{"width", 12}, {"stride", 1}, {"hypo_threshold", 70.0}};
  j["split"] = {{"fractions", {0.8, 0.1, 0.1}}, {"block_windows", 96}};
  j["models"] = {"cnn", "gbdt", "knn", "logreg", "lstm", "mlp", "rf"};
  j["feature_modes"] = {"sequence", "static"};
  j["train"] = {{"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"max_epochs", t.max_epochs},
                {"patience", t.patience},
                {"dropout_rate", t.dropout_rate},
                {"l2_lambda", t.l2_lambda},
                {"class_weights", t.use_class_weights},
                {"balanced_batches", t.balanced_batches},
                {"min_minority_fraction", t.min_minority_fraction},
                {"mlp_hidden", {t.mlp_hidden1, t.mlp_hidden2}},
                {"cnn_channels", {t.cnn_channels1, t.cnn_channels2}},
                {"cnn_kernel", t.cnn_kernel},
                {"lstm_hidden", t.lstm_hidden},
                {"lstm_dense", t.lstm_dense},
                {"lstm_relu_on_output", t.lstm_relu_on_output},
                {"static_sequence_steps", t.sequence_steps},
                {"knn_k", t.knn_k},
                {"rf_trees", t.rf_trees},
                {"max_depth", t.max_depth},
                {"max_bins", t.max_bins},
                {"gbdt_rounds", t.gbdt_rounds},
                {"gbdt_eta", t.gbdt_eta},
                {"gbdt_lambda", t.gbdt_lambda},
                {"gbdt_min_child_weight", t.gbdt_min_child_weight},
                {"gbdt_patience", t.gbdt_patience},
                {"logreg_learning_rate", t.logreg_learning_rate},
                {"logreg_max_iter", t.logreg_max_iter},
                {"logreg_tolerance", t.logreg_tolerance},
                {"l2_grid", {0.0, 1e-4, 1e-3, 1e-2}},
                {"threshold", t.threshold}};
  // Per-family replacements for keys of `train`, e.g. {lstm: {max_epochs: 20}}.
  j["family_overrides"] = json::object();
  j["eval"] = {{"bootstrap_iterations", 1000}, {"ci_level", 0.95}, {"parallel_cells", true}};
  j["output"] = {{"dir", "out"}, {"formats", {"json", "csv", "markdown"}}};
  return j;
}

namespace {

json yaml_scalar(const YAML::Node& node) {
  const std::string s = node.Scalar();
  if (node.Tag() == "!") return s;  // quoted
  if (s == "true" || s == "True" || s == "TRUE") return true;
  if (s == "false" || s == "False" || s == "FALSE") return false;
  if (s == "null" || s == "~" || s.empty()) return nullptr;
  if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos) {
    try {
      return static_cast<std::uint64_t>(std::stoull(s));
    } catch (const std::exception&) {
    }
  }
  if (s.size() > 1 && s[0] == '-' && s.find_first_not_of("0123456789", 1) == std::string::npos) {
    try {
      return static_cast<std::int64_t>(std::stoll(s));
    } catch (const std::exception&) {
    }
  }
  if (const auto d = parse_double(s)) return *d;
  return s;
}

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return yaml_scalar(node);
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      for (const auto& item : node) arr.push_back(yaml_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : node) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
  }
  return nullptr;
}

json parse_yaml(std::string_view text, std::string_view origin) {
  try {
    return yaml_to_json(YAML::Load(std::string(text)));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string(origin) + ": " + e.what());
  }
}

std::string valid_keys(const json& obj) {
  std::string s;
  for (const auto& [k, v] : obj.items()) s += (s.empty() ? "" : ", ") + k;
  return s;
}

std::string type_name(const json& v) {
  if (v.is_boolean()) return "a boolean";
  if (v.is_number()) return "a number";
  if (v.is_string()) return "a string";
  if (v.is_array()) return "a list";
  if (v.is_object()) return "a mapping";
  return "null";
}

// Replace `base` with `value` after checking the type matches the default.
void assign_checked(json& base, const json& value, const std::string& path) {
  if (base.is_number_float() && value.is_number()) {
    base = value.get<double>();
  } else if (base.is_number_unsigned() && value.is_number_integer()) {
    if (value.is_number_integer() && !value.is_number_unsigned() && value.get<std::int64_t>() < 0)
      throw ConfigError(path + " must be >= 0, got " + value.dump());
    base = value.get<std::uint64_t>();
  } else if (base.is_number_integer() && value.is_number_integer()) {
    base = value;
  } else if (base.is_number_integer() && value.is_number_float()) {
    const double d = value.get<double>();
    if (d != std::floor(d) || d < 0) throw ConfigError(path + " must be a whole number, got " + value.dump());
    base = static_cast<std::uint64_t>(d);
  } else if (base.type() == value.type() || (base.is_array() && value.is_array())) {
    base = value;
  } else {
    throw ConfigError(path + " must be " + type_name(base) + ", got " + value.dump());
  }
}

void merge_into(json& base, const json& user, const std::string& path) {
  if (user.is_null()) return;
  if (!user.is_object())
    throw ConfigError((path.empty() ? std::string("config") : path) + " must be a mapping");
  for (const auto& [key, value] : user.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (path == "family_overrides") {
      const Family family = parse_family(key);
      json& slot = base[std::string(family_name(family))];
      if (slot.is_null()) slot = json::object();
      const json train_defaults = default_config_tree()["train"];
      if (!value.is_object()) throw ConfigError(here + " must be a mapping");
      for (const auto& [k, v] : value.items()) {
        if (!train_defaults.contains(k))
          throw ConfigError("unknown key '" + here + "." + k + "'; valid keys: " +
                            valid_keys(train_defaults));
        json merged = slot.contains(k) ? slot[k] : train_defaults[k];
        assign_checked(merged, v, here + "." + k);
        slot[k] = merged;
      }
      continue;
    }
    if (!base.contains(key))
      throw ConfigError("unknown key '" + here + "'; valid keys: " + valid_keys(base));
    json& slot = base[key];
    if (slot.is_object() && key != "family_overrides") {
      merge_into(slot, value, here);
    } else if (key == "family_overrides") {
      merge_into(slot, value, "family_overrides");
    } else {
      assign_checked(slot, value, here);
    }
  }
}

void set_path(json& tree, const std::string& dotted, const json& value) {
  json patch = value;
  const auto parts = split(dotted, '.');
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw ConfigError("bad --set key '" + dotted + "'");
    patch = json{{*it, patch}};
  }
  merge_into(tree, patch, "");
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& part : split(text, ',')) {
    const auto t = trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

void apply_overrides(json& tree, const ConfigOverrides& o) {
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    set_path(tree, s.substr(0, eq), parse_yaml(s.substr(eq + 1), "--set " + s));
  }
  if (o.seed) tree["seed"] = *o.seed;
  if (o.out) tree["output"]["dir"] = *o.out;
  if (o.models) tree["models"] = split_list(*o.models);
  if (o.feature_mode) {
    if (*o.feature_mode == "both") tree["feature_modes"] = {"sequence", "static"};
    else tree["feature_modes"] = {*o.feature_mode};
  }
  if (o.split) {
    json fr = json::array();
    for (const auto& part : split_list(*o.split)) {
      const auto v = parse_double(part);
      if (!v) throw ConfigError("--split expects three numbers, got '" + *o.split + "'");
      fr.push_back(*v);
    }
    tree["split"]["fractions"] = fr;
  }
  if (!o.inputs.empty()) {
    tree["data"]["inputs"] = o.inputs;
    tree["data"]["synthetic"] = false;
  }
  if (o.synthetic) tree["data"]["synthetic"] = *o.synthetic;
}

template <typename T>
T get_num(const json& j, const char* key, const std::string& where) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  if constexpr (std::is_integral_v<T>) {
    if (v.is_number_float() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                v.get<std::int64_t>() < 0))
      throw ConfigError(where + "." + key + " must be a non-negative integer, got " + v.dump());
  }
  return v.get<T>();
}

TrainConfig train_from_tree(const json& t) {
  const std::string w = "train";
  TrainConfig c;
  c.batch_size = get_num<std::size_t>(t, "batch_size", w);
  c.learning_rate = get_num<double>(t, "learning_rate", w);
  c.max_epochs = get_num<std::size_t>(t, "max_epochs", w);
  c.patience = get_num<std::size_t>(t, "patience", w);
  c.dropout_rate = get_num<double>(t, "dropout_rate", w);
  c.l2_lambda = get_num<double>(t, "l2_lambda", w);
  c.use_class_weights = t.at("class_weights").get<bool>();
  c.balanced_batches = t.at("balanced_batches").get<bool>();
  c.min_minority_fraction = get_num<double>(t, "min_minority_fraction", w);
  const auto& mh = t.at("mlp_hidden");
  const auto& cc = t.at("cnn_channels");
  if (mh.size() != 2 || cc.size() != 2)
    throw ConfigError("train.mlp_hidden and train.cnn_channels need two entries");
  c.mlp_hidden1 = mh[0].get<std::size_t>();
  c.mlp_hidden2 = mh[1].get<std::size_t>();
  c.cnn_channels1 = cc[0].get<std::size_t>();
  c.cnn_channels2 = cc[1].get<std::size_t>();
  c.cnn_kernel = get_num<std::size_t>(t, "cnn_kernel", w);
  c.lstm_hidden = get_num<std::size_t>(t, "lstm_hidden", w);
  c.lstm_dense = get_num<std::size_t>(t, "lstm_dense", w);
  c.lstm_relu_on_output = t.at("lstm_relu_on_output").get<bool>();
  c.sequence_steps = get_num<std::size_t>(t, "static_sequence_steps", w);
  c.knn_k = get_num<std::size_t>(t, "knn_k", w);
  c.rf_trees = get_num<std::size_t>(t, "rf_trees", w);
  c.max_depth = get_num<std::size_t>(t, "max_depth", w);
  c.max_bins = get_num<std::size_t>(t, "max_bins", w);
  c.gbdt_rounds = get_num<std::size_t>(t, "gbdt_rounds", w);
  c.gbdt_eta = get_num<double>(t, "gbdt_eta", w);
  c.gbdt_lambda = get_num<double>(t, "gbdt_lambda", w);
  c.gbdt_min_child_weight = get_num<double>(t, "gbdt_min_child_weight", w);
  c.gbdt_patience = get_num<std::size_t>(t, "gbdt_patience", w);
  c.logreg_learning_rate = get_num<double>(t, "logreg_learning_rate", w);
  c.logreg_max_iter = get_num<std::size_t>(t, "logreg_max_iter", w);
  c.logreg_tolerance = get_num<double>(t, "logreg_tolerance", w);
  c.l2_grid = t.at("l2_grid").get<std::vector<double>>();
  c.threshold = get_num<double>(t, "threshold", w);
  c.validate();
  return c;
}

}  // namespace

RunConfig config_from_tree(const json& tree) {
  RunConfig c;
  c.resolved = tree;
  try {
    c.seed = tree.at("seed").get<std::uint64_t>();
    const auto& d = tree.at("data");
    c.synthetic = d.at("synthetic").get<bool>();
    c.inputs = d.at("inputs").get<std::vector<std::string>>();
    const auto& csv = d.at("csv");
    c.csv.timestamp_column = csv.at("timestamp_column").get<std::string>();
    c.csv.channel_column = csv.at("channel_column").get<std::string>();
    c.csv.value_column = csv.at("value_column").get<std::string>();
    c.csv.glucose_column = csv.at("glucose_column").get<std::string>();
    c.csv.gsr_column = csv.at("gsr_column").get<std::string>();
    c.csv.max_bad_row_fraction = get_num<double>(csv, "max_bad_row_fraction", "data.csv");
    if (!(c.csv.max_bad_row_fraction >= 0.0 && c.csv.max_bad_row_fraction <= 1.0))
      throw ConfigError("data.csv.max_bad_row_fraction must lie in [0, 1]");
    const auto& s = d.at("synth");
    c.synth.n_subjects = get_num<std::size_t>(s, "n_subjects", "data.synth");
    c.synth.steps_per_subject = get_num<std::size_t>(s, "steps_per_subject", "data.synth");
    c.synth.target_prevalence = get_num<double>(s, "target_prevalence", "data.synth");
    c.synth.coupling = get_num<double>(s, "coupling", "data.synth");
    c.synth.noise_sd = get_num<double>(s, "noise_sd", "data.synth");
    c.synth.lead = get_num<std::size_t>(s, "lead", "data.synth");
    c.synth.seed = derive_seed(c.seed, "synth");
    if (c.synthetic) c.synth.validate();
    if (!c.synthetic && c.inputs.empty())
      throw ConfigError("data.inputs is empty and data.synthetic is false; nothing to load");

    const auto& p = tree.at("preprocess");
    c.preprocess.filter.order = static_cast<int>(get_num<std::size_t>(p, "filter_order", "preprocess"));
    c.preprocess.filter.cutoff = get_num<double>(p, "filter_cutoff", "preprocess");
    c.preprocess.max_gap = get_num<std::size_t>(p, "max_gap", "preprocess");
    c.preprocess.iqr_k = get_num<double>(p, "iqr_k", "preprocess");
    if (c.preprocess.filter.order < 1) throw ConfigError("preprocess.filter_order must be >= 1");
    c.preprocess.filter.validate();
    if (!(c.preprocess.iqr_k >= 0.0)) throw ConfigError("preprocess.iqr_k must be >= 0");

    const auto& win = tree.at("window");
    c.window.width = get_num<std::size_t>(win, "width", "window");
    c.window.stride = get_num<std::size_t>(win, "stride", "window");
    c.window.hypo_threshold = get_num<double>(win, "hypo_threshold", "window");
    if (c.window.width < 1 || c.window.stride < 1)
      throw ConfigError("window.width and window.stride must be >= 1");
    if (!(c.window.hypo_threshold > 0.0)) throw ConfigError("window.hypo_threshold must be > 0");

    const auto& sp = tree.at("split");
    const auto fr = sp.at("fractions").get<std::vector<double>>();
    if (fr.size() != 3) throw ConfigError("split.fractions needs three entries (train, val, test)");
    for (double f : fr)
      if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("split.fractions entries must lie in [0, 1]");
    if (std::abs(fr[0] + fr[1] + fr[2] - 1.0) > 1e-9)
      throw ConfigError("split.fractions must sum to 1 within 1e-9, got " +
                        format_double(fr[0] + fr[1] + fr[2]));
    c.split.fractions = {fr[0], fr[1], fr[2]};
    c.split.block_windows = get_num<std::size_t>(sp, "block_windows", "split");
    if (c.split.block_windows < 1) throw ConfigError("split.block_windows must be >= 1");

    for (const auto& name : tree.at("models").get<std::vector<std::string>>())
      c.models.push_back(parse_family(name));
    std::sort(c.models.begin(), c.models.end(), [](Family a, Family b) {
      return family_name(a) < family_name(b);
    });
    c.models.erase(std::unique(c.models.begin(), c.models.end()), c.models.end());
    if (c.models.empty()) throw ConfigError("models must name at least one family");

    for (const auto& name : tree.at("feature_modes").get<std::vector<std::string>>()) {
      if (name == "both") {
        c.feature_modes = {FeatureLayout::kSequence, FeatureLayout::kStatic};
        break;
      }
      const auto m = parse_layout(name);
      if (std::find(c.feature_modes.begin(), c.feature_modes.end(), m) == c.feature_modes.end())
        c.feature_modes.push_back(m);
    }
    if (c.feature_modes.empty()) throw ConfigError("feature_modes must not be empty");
    std::sort(c.feature_modes.begin(), c.feature_modes.end(),
              [](FeatureLayout a, FeatureLayout b) { return layout_name(a) < layout_name(b); });

    c.train = train_from_tree(tree.at("train"));
    for (const auto& [name, patch] : tree.at("family_overrides").items())
      c.family_overrides[parse_family(name)] = patch;
    for (const auto& [family, patch] : c.family_overrides) (void)c.train_config(family);

    const auto& e = tree.at("eval");
    c.bootstrap_iterations = get_num<std::size_t>(e, "bootstrap_iterations", "eval");
    c.ci_level = get_num<double>(e, "ci_level", "eval");
    if (!(c.ci_level > 0.0 && c.ci_level < 1.0)) throw ConfigError("eval.ci_level must lie in (0, 1)");
    c.parallel_cells = e.at("parallel_cells").get<bool>();

    const auto& o = tree.at("output");
    c.out_dir = o.at("dir").get<std::string>();
    if (c.out_dir.empty()) throw ConfigError("output.dir must not be empty");
    for (const auto& f : o.at("formats").get<std::vector<std::string>>())
      c.formats.push_back(parse_report_format(f));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

TrainConfig RunConfig::train_config(Family family) const {
  TrainConfig t;
  const auto it = family_overrides.find(family);
  if (it == family_overrides.end()) {
    t = train;
  } else {
    json tree = resolved.at("train");
    for (const auto& [k, v] : it->second.items()) tree[k] = v;
    t = train_from_tree(tree);
  }
  return t;
}

std::string RunConfig::digest() const {
  json j = resolved;
  j.erase("output");
  return hex_digest(fnv1a64(j.dump()));
}

std::string RunConfig::data_digest() const {
  json j;
  for (const char* key : {"seed", "data", "preprocess", "window", "split"}) j[key] = resolved.at(key);
  return hex_digest(fnv1a64(j.dump()));
}

namespace {

json base_tree() {
  json tree = default_config_tree();
  if (const char* env = std::getenv(kOutputEnvVar); env != nullptr && *env != '\0')
    tree["output"]["dir"] = env;
  return tree;
}

}  // namespace

RunConfig config_from_yaml(std::string_view yaml_text, const ConfigOverrides& overrides) {
  json tree = base_tree();
  merge_into(tree, parse_yaml(yaml_text, "config"), "");
  apply_overrides(tree, overrides);
  RunConfig c = config_from_tree(tree);
  c.force = overrides.force;
  return c;
}

RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::string text;
  if (!path.empty()) {
    if (!std::filesystem::exists(path))
      throw ConfigError("config file " + path.string() + " does not exist");
    try {
      text = read_file(path);
    } catch (const Error& e) {
      throw ConfigError("cannot read config file " + path.string() + ": " + e.message());
    }
  }
  try {
    return config_from_yaml(text, overrides);
  } catch (Error& e) {
    if (!path.empty()) e.add_context(path.string());
    throw;
  }
}

std::string resolved_config_text(const RunConfig& cfg) { return cfg.resolved.dump(2) + "\n"; }

}  // namespace hypogsr
