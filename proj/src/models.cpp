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

#include "hypogsr/models.hpp"

#include <algorithm>
#include <cmath>

#include "hypogsr/error.hpp"
#include "hypogsr/text.hpp"

namespace hypogsr {

std::string_view layout_name(FeatureLayout layout) {
  return layout == FeatureLayout::kStatic ? "static" : "sequence";
}

FeatureLayout parse_layout(std::string_view name) {
  if (name == "static") return FeatureLayout::kStatic;
  if (name == "sequence") return FeatureLayout::kSequence;
  throw ConfigError("unknown feature mode '" + std::string(name) +
                    "', expected sequence or static");
}

ad::Matrix FeatureMatrix::to_matrix() const {
  ad::Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> idx) const {
  FeatureMatrix out{layout, idx.size(), cols, {}};
  out.values.reserve(idx.size() * cols);
  for (std::size_t i : idx) {
    const auto r = row(i);
    out.values.insert(out.values.end(), r.begin(), r.end());
  }
  return out;
}

void FeatureMatrix::validate() const {
  if (values.size() != rows * cols)
    throw ShapeError("feature matrix holds " + std::to_string(values.size()) + " values for " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  if (layout == FeatureLayout::kStatic && cols != 1)
    throw ShapeError("static layout needs exactly one column, got " + std::to_string(cols));
  for (double v : values)
    if (!std::isfinite(v)) throw NumericalError("feature matrix contains a non-finite value");
}

FeatureMatrix FeatureMatrix::from_windows(std::span<const LabeledWindow> windows,
                                          FeatureLayout layout) {
  FeatureMatrix out;
  out.layout = layout;
  out.rows = windows.size();
  if (layout == FeatureLayout::kStatic) {
    out.cols = 1;
    out.values.reserve(windows.size());
    for (const auto& w : windows) out.values.push_back(static_feature(w));
  } else {
    out.cols = windows.empty() ? 0 : windows.front().width();
    out.values.reserve(windows.size() * out.cols);
    for (const auto& w : windows) {
      if (w.width() != out.cols) throw ShapeError("windows of different widths");
      out.values.insert(out.values.end(), w.gsr_seq.begin(), w.gsr_seq.end());
    }
  }
  return out;
}

FeatureMatrix FeatureMatrix::from_rows(FeatureLayout layout, std::size_t cols,
                                       std::vector<double> values) {
  if (cols == 0 || values.size() % cols != 0) throw ShapeError("ragged feature rows");
  FeatureMatrix out{layout, values.size() / cols, cols, std::move(values)};
  out.validate();
  return out;
}

namespace {

struct FamilyInfo {
  Family family;
  std::string_view name;
  std::string_view title;
};

constexpr FamilyInfo kFamilies[] = {
    {Family::kLogReg, "logreg", "Logistic Regression"},
    {Family::kKnn, "knn", "KNN"},
    {Family::kRandomForest, "rf", "Random Forest"},
    {Family::kGbdt, "gbdt", "Gradient Boosting"},
    {Family::kMlp, "mlp", "MLP"},
    {Family::kCnn, "cnn", "CNN"},
    {Family::kLstm, "lstm", "LSTM"},
};

}  // namespace

std::string_view family_name(Family family) {
  for (const auto& f : kFamilies)
    if (f.family == family) return f.name;
  return "unknown";
}

std::string_view family_title(Family family) {
  for (const auto& f : kFamilies)
    if (f.family == family) return f.title;
  return "unknown";
}

Family parse_family(std::string_view name) {
  const std::string lower = [&] {
    std::string s(trim(name));
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
  }();
  for (const auto& f : kFamilies)
    if (f.name == lower) return f.family;
  if (lower == "lr" || lower == "logistic") return Family::kLogReg;
  if (lower == "xgboost" || lower == "gbm") return Family::kGbdt;
  if (lower == "random_forest") return Family::kRandomForest;
  throw ConfigError("unknown model family '" + std::string(name) +
                    "', expected one of cnn, gbdt, knn, logreg, lstm, mlp, rf");
}

void TrainConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  need(batch_size >= 1, "batch_size must be >= 1");
  need(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be > 0");
  need(max_epochs >= 1, "max_epochs must be >= 1");
  need(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must lie in [0, 1)");
  need(l2_lambda >= 0.0, "l2_lambda must be >= 0");
  need(min_minority_fraction >= 0.0 && min_minority_fraction < 1.0,
       "min_minority_fraction must lie in [0, 1)");
  need(knn_k >= 1, "knn_k must be >= 1");
  need(rf_trees >= 1, "rf_trees must be >= 1");
  need(max_depth >= 1, "max_depth must be >= 1");
  need(max_bins >= 2 && max_bins <= 256, "max_bins must lie in [2, 256]");
  need(gbdt_rounds >= 1, "gbdt_rounds must be >= 1");
  need(gbdt_eta > 0.0 && gbdt_eta <= 1.0, "gbdt_eta must lie in (0, 1]");
  need(gbdt_lambda >= 0.0, "gbdt_lambda must be >= 0");
  need(gbdt_min_child_weight >= 0.0, "gbdt_min_child_weight must be >= 0");
  need(logreg_learning_rate > 0.0, "logreg_learning_rate must be > 0");
  need(logreg_max_iter >= 1, "logreg_max_iter must be >= 1");
  need(cnn_kernel >= 1 && 2 * (cnn_kernel - 1) < sequence_steps,
       "cnn_kernel too long for the sequence");
  need(mlp_hidden1 >= 1 && mlp_hidden2 >= 1 && cnn_channels1 >= 1 && cnn_channels2 >= 1 &&
           lstm_hidden >= 1 && lstm_dense >= 1,
       "layer widths must be >= 1");
  need(threshold > 0.0 && threshold < 1.0, "threshold must lie in (0, 1)");
  for (double l2 : l2_grid) need(l2 >= 0.0, "l2_grid entries must be >= 0");
}

ClassWeights TrainConfig::resolve_weights(std::span<const int> labels) const {
  if (class_weights) return *class_weights;
  if (use_class_weights) return hypogsr::class_weights(labels);
  return ClassWeights::unit();
}

nlohmann::json to_json(const TrainingMeta& meta) {
  nlohmann::json j;
  j["seed"] = meta.seed;
  j["epochs_run"] = meta.epochs_run;
  j["best_epoch"] = meta.best_epoch;
  j["best_val_loss"] = meta.best_val_loss ? nlohmann::json(*meta.best_val_loss) : nullptr;
  j["selected_l2"] = meta.selected_l2 ? nlohmann::json(*meta.selected_l2) : nullptr;
  j["weights"] = meta.weights;
  j["balanced_batches"] = meta.balanced_batches;
  return j;
}

TrainingMeta training_meta_from_json(const nlohmann::json& j) {
  TrainingMeta m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.epochs_run = j.at("epochs_run").get<std::size_t>();
  m.best_epoch = j.at("best_epoch").get<std::size_t>();
  if (!j.at("best_val_loss").is_null()) m.best_val_loss = j["best_val_loss"].get<double>();
  if (!j.at("selected_l2").is_null()) m.selected_l2 = j["selected_l2"].get<double>();
  m.weights = j.at("weights").get<std::string>();
  m.balanced_batches = j.at("balanced_batches").get<bool>();
  return m;
}

std::vector<double> TrainedModel::predict_proba(const FeatureMatrix& x) const {
  if (x.layout != layout_ || x.cols != input_cols_)
    throw ShapeError(std::string(family_name(family_)) + " model expects " +
                     std::string(layout_name(layout_)) + " input with " +
                     std::to_string(input_cols_) + " columns, got " +
                     std::string(layout_name(x.layout)) + " with " + std::to_string(x.cols));
  if (x.values.size() != x.rows * x.cols) throw ShapeError("feature matrix size mismatch");
  auto p = score(x);
  for (double& v : p) {
    if (!std::isfinite(v)) throw NumericalError(std::string(family_name(family_)) +
                                                " produced a non-finite probability");
    v = std::clamp(v, 0.0, 1.0);
  }
  return p;
}

std::vector<ScoredPrediction> predict(const TrainedModel& model, const FeatureMatrix& x,
                                      double threshold) {
  const auto p = model.predict_proba(x);
  std::vector<ScoredPrediction> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i)
    out[i] = {p[i], p[i] >= threshold ? GlycemicLabel::kHypo : GlycemicLabel::kNormo};
  return out;
}

double weighted_bce(std::span<const double> probabilities, std::span<const int> labels,
                    const ClassWeights& weights) {
  if (probabilities.size() != labels.size())
    throw ShapeError("weighted_bce: " + std::to_string(probabilities.size()) +
                     " probabilities for " + std::to_string(labels.size()) + " labels");
  if (labels.empty()) throw ShapeError("weighted_bce on an empty set");
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p =
        std::clamp(probabilities[i], ad::kProbabilityEpsilon, 1.0 - ad::kProbabilityEpsilon);
    const int y = labels[i];
    total += -weights.weight(y) * (y == 1 ? std::log(p) : std::log(1.0 - p));
  }
  return total / static_cast<double>(labels.size());
}

double gini_impurity(std::span<const double> class_counts) {
  double total = 0.0;
  for (double c : class_counts) {
    if (c < 0.0) throw InvalidSplitError("negative class count");
    total += c;
  }
  if (total <= 0.0) throw InvalidSplitError("gini impurity of an empty node");
  double sum_sq = 0.0;
  for (double c : class_counts) sum_sq += (c / total) * (c / total);
  return 1.0 - sum_sq;
}

bool EarlyStopping::update(double loss) {
  ++rounds_;
  if (best_round_ == 0 || loss < best_loss_) {
    best_loss_ = loss;
    best_round_ = rounds_;
    since_best_ = 0;
    return false;
  }
  ++since_best_;
  return since_best_ >= patience_;
}

std::unique_ptr<TrainedModel> fit_model(Family family, const FeatureMatrix& x,
                                        std::span<const int> y, const TrainConfig& cfg,
                                        const FeatureMatrix& x_val, std::span<const int> y_val) {
  switch (family) {
    case Family::kLogReg:
      return fit_logreg(x, y, cfg, &x_val, y_val);
    case Family::kKnn:
      return fit_knn(x, y, cfg);
    case Family::kRandomForest:
      return fit_random_forest(x, y, cfg);
    case Family::kGbdt:
      return fit_gbdt(x, y, cfg, x_val, y_val);
    case Family::kMlp:
    case Family::kCnn:
    case Family::kLstm:
      return fit_neural(family, x, y, cfg, x_val, y_val);
  }
  throw ConfigError("unknown model family");
}

}  // namespace hypogsr
