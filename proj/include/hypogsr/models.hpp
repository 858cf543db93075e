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

#ifndef HYPOGSR_MODELS_HPP_
#define HYPOGSR_MODELS_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypogsr/autodiff.hpp"
#include "hypogsr/tree.hpp"
#include "hypogsr/windowing.hpp"
#include "json.hpp"

namespace hypogsr {

enum class FeatureLayout { kStatic, kSequence };

std::string_view layout_name(FeatureLayout layout);  // "static" / "sequence"
FeatureLayout parse_layout(std::string_view name);   // throws ConfigError

// Row-major, all entries finite.
struct FeatureMatrix {
  FeatureLayout layout = FeatureLayout::kSequence;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  ad::Matrix to_matrix() const;
  FeatureMatrix select(std::span<const std::size_t> rows) const;
  void validate() const;  // ShapeError / NumericalError

  // Sequence: the gsr_seq entries. Static: one column holding the window mean.
  static FeatureMatrix from_windows(std::span<const LabeledWindow> windows, FeatureLayout layout);
  static FeatureMatrix from_rows(FeatureLayout layout, std::size_t cols, std::vector<double> values);
};

enum class Family { kLogReg, kKnn, kRandomForest, kGbdt, kMlp, kCnn, kLstm };

inline constexpr Family kAllFamilies[] = {Family::kCnn,  Family::kGbdt, Family::kKnn,
                                          Family::kLogReg, Family::kLstm, Family::kMlp,
                                          Family::kRandomForest};

std::string_view family_name(Family family);   // short name, e.g. "lstm"
std::string_view family_title(Family family);  // table label, e.g. "LSTM"
Family parse_family(std::string_view name);    // throws ConfigError

struct TrainConfig {
  std::uint64_t seed = 0;

  // Neural training.
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 12;
  std::size_t patience = 3;
  double dropout_rate = 0.3;
  double l2_lambda = 0.0;
  bool balanced_batches = true;
  double min_minority_fraction = 0.25;
  std::size_t mlp_hidden1 = 32;
  std::size_t mlp_hidden2 = 16;
  std::size_t cnn_channels1 = 16;
  std::size_t cnn_channels2 = 32;
  std::size_t cnn_kernel = 3;
  std::size_t lstm_hidden = 32;
  std::size_t lstm_dense = 16;
  bool lstm_relu_on_output = false;
  std::size_t sequence_steps = 12;  // static input is replicated to this length for CNN/LSTM

  // Class weighting. An explicit `class_weights` wins; otherwise balanced
  // weights from the training labels when `use_class_weights`, else unit.
  bool use_class_weights = true;
  std::optional<ClassWeights> class_weights;

  // Classical models.
  std::size_t knn_k = 5;
  std::size_t rf_trees = 100;
  std::size_t max_depth = 6;
  std::size_t max_bins = 255;
  std::size_t gbdt_rounds = 200;
  double gbdt_eta = 0.1;
  double gbdt_lambda = 1.0;
  double gbdt_min_child_weight = 1.0;
  std::size_t gbdt_patience = 10;
  double logreg_learning_rate = 0.05;
  std::size_t logreg_max_iter = 500;
  double logreg_tolerance = 1e-6;
  std::vector<double> l2_grid;  // empty: use l2_lambda as is

  double threshold = 0.5;

  void validate() const;  // ConfigError
  ClassWeights resolve_weights(std::span<const int> labels) const;
};

struct TrainingMeta {
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;   // epochs, boosting rounds or optimizer steps
  std::size_t best_epoch = 0;   // 1-based; 0 when not applicable
  std::optional<double> best_val_loss;
  std::optional<double> selected_l2;
  std::string weights;          // "balanced", "unit" or "explicit"
  bool balanced_batches = false;

  friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

nlohmann::json to_json(const TrainingMeta& meta);
TrainingMeta training_meta_from_json(const nlohmann::json& j);

struct ParameterBlock {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  friend bool operator==(const ParameterBlock&, const ParameterBlock&) = default;
};

struct ScoredPrediction {
  double probability_hypo = 0.0;
  GlycemicLabel predicted_label = GlycemicLabel::kNormo;
};

class TrainedModel {
 public:
  TrainedModel(Family family, FeatureLayout layout, std::size_t input_cols, TrainingMeta meta)
      : family_(family), layout_(layout), input_cols_(input_cols), meta_(std::move(meta)) {}
  virtual ~TrainedModel() = default;

  Family family() const { return family_; }
  FeatureLayout layout() const { return layout_; }
  std::size_t input_cols() const { return input_cols_; }
  const TrainingMeta& meta() const { return meta_; }

  // Probabilities in [0, 1]. ShapeError on a layout or width mismatch.
  std::vector<double> predict_proba(const FeatureMatrix& x) const;

  virtual std::vector<ParameterBlock> parameters() const = 0;
  // Structural settings needed to rebuild the model from its parameters.
  virtual nlohmann::json structure() const { return nlohmann::json::object(); }

 protected:
  virtual std::vector<double> score(const FeatureMatrix& x) const = 0;

 private:
  Family family_;
  FeatureLayout layout_;
  std::size_t input_cols_;
  TrainingMeta meta_;
};

std::vector<ScoredPrediction> predict(const TrainedModel& model, const FeatureMatrix& x,
                                      double threshold = 0.5);

// Mean of -w(y) [y ln p + (1-y) ln(1-p)], p clipped to [1e-7, 1-1e-7].
double weighted_bce(std::span<const double> probabilities, std::span<const int> labels,
                    const ClassWeights& weights);

// 1 - sum p_c^2. InvalidSplitError when every count is zero.
double gini_impurity(std::span<const double> class_counts);

// Tracks the best loss; `update` returns true once `patience` consecutive
// updates failed to improve on it.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}
  bool update(double loss);
  std::size_t best_round() const { return best_round_; }  // 1-based, 0 before any update
  double best_loss() const { return best_loss_; }
  std::size_t rounds() const { return rounds_; }

 private:
  std::size_t patience_;
  std::size_t rounds_ = 0;
  std::size_t best_round_ = 0;
  std::size_t since_best_ = 0;
  double best_loss_ = 0.0;
};

// ---- logistic regression ----

class LogRegModel final : public TrainedModel {
 public:
  LogRegModel(FeatureLayout layout, std::vector<double> weights, double bias, TrainingMeta meta);
  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  std::vector<ParameterBlock> parameters() const override;

 protected:
  std::vector<double> score(const FeatureMatrix& x) const override;

 private:
  std::vector<double> weights_;
  double bias_;
};

// Objective: mean weighted BCE + l2/2 * |w|^2 (bias unpenalized). Returns the
// loss; gradient written to grad_w / grad_b.
double logreg_objective(const FeatureMatrix& x, std::span<const int> y,
                        const ClassWeights& weights, double l2, std::span<const double> w, double b,
                        std::vector<double>* grad_w, double* grad_b);

std::unique_ptr<LogRegModel> fit_logreg(const FeatureMatrix& x, std::span<const int> y,
                                        const TrainConfig& cfg, const FeatureMatrix* x_val = nullptr,
                                        std::span<const int> y_val = {},
                                        std::vector<double>* loss_trace = nullptr);

// ---- k nearest neighbours ----

class KnnModel final : public TrainedModel {
 public:
  KnnModel(FeatureMatrix train, std::vector<int> labels, std::size_t k, TrainingMeta meta);
  std::size_t k() const { return k_; }
  std::vector<ParameterBlock> parameters() const override;
  nlohmann::json structure() const override;

 protected:
  std::vector<double> score(const FeatureMatrix& x) const override;

 private:
  FeatureMatrix train_;
  std::vector<int> labels_;
  std::size_t k_;
};

// Fraction of Hypo labels among the k nearest rows by Euclidean distance,
// ties broken by lower training index.
double knn_score_one(const FeatureMatrix& train, std::span<const int> labels, std::size_t k,
                     std::span<const double> query);

std::unique_ptr<KnnModel> fit_knn(const FeatureMatrix& x, std::span<const int> y,
                                  const TrainConfig& cfg);

// ---- random forest ----

class RandomForestModel final : public TrainedModel {
 public:
  RandomForestModel(FeatureLayout layout, std::size_t input_cols, std::vector<Tree> trees,
                    TrainingMeta meta);
  const std::vector<Tree>& trees() const { return trees_; }
  std::vector<double> tree_probabilities(std::span<const double> row) const;
  std::vector<ParameterBlock> parameters() const override;

 protected:
  std::vector<double> score(const FeatureMatrix& x) const override;

 private:
  std::vector<Tree> trees_;
};

struct ForestInputs {
  const BinnedMatrix* binned = nullptr;
  std::span<const int> labels;
  ClassWeights weights;
  TreeOptions options;
  std::size_t features_per_node = 1;
  std::uint64_t seed = 0;
};

Tree tree_from_block(const ParameterBlock& block);  // inverse of the 5-column node layout

// Bootstrap resample seeded by derive_seed(seed, index), then a Gini tree.
Tree grow_forest_tree(const ForestInputs& in, std::size_t index);

std::unique_ptr<RandomForestModel> fit_random_forest(const FeatureMatrix& x,
                                                     std::span<const int> y,
                                                     const TrainConfig& cfg);

// ---- gradient boosting ----

class GbdtModel final : public TrainedModel {
 public:
  GbdtModel(FeatureLayout layout, std::size_t input_cols, double base_score,
            std::vector<Tree> trees, TrainingMeta meta);
  double base_score() const { return base_score_; }
  const std::vector<Tree>& trees() const { return trees_; }
  double margin(std::span<const double> row) const;
  std::vector<ParameterBlock> parameters() const override;

 protected:
  std::vector<double> score(const FeatureMatrix& x) const override;

 private:
  double base_score_;
  std::vector<Tree> trees_;
};

// ln(p / (1 - p)) for the positive rate with positives weighted by scale_pos_weight.
double gbdt_initial_score(std::span<const int> y, double scale_pos_weight);

std::unique_ptr<GbdtModel> fit_gbdt(const FeatureMatrix& x, std::span<const int> y,
                                    const TrainConfig& cfg, const FeatureMatrix& x_val,
                                    std::span<const int> y_val);

// ---- neural networks ----

enum class Architecture { kMlp, kCnn, kLstm };

struct NetworkSpec {
  Architecture arch = Architecture::kMlp;
  std::size_t input_cols = 12;
  std::size_t steps = 12;
  std::size_t hidden1 = 32;  // MLP first dense / CNN first conv / LSTM hidden
  std::size_t hidden2 = 16;  // MLP second dense / CNN second conv / LSTM dense
  std::size_t kernel = 3;
  double dropout = 0.3;
  bool lstm_relu_on_output = false;

  static NetworkSpec from(Architecture arch, std::size_t input_cols, const TrainConfig& cfg);
  nlohmann::json to_json() const;
  static NetworkSpec from_json(const nlohmann::json& j);
};

class Network {
 public:
  // He-uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
  Network(const NetworkSpec& spec, std::uint64_t init_seed);
  Network(const NetworkSpec& spec, std::vector<ad::Parameter> params);

  // Logits, B x 1. Dropout is applied only when `training`.
  ad::Var forward(ad::Tape& tape, const ad::Matrix& x, bool training,
                  std::uint64_t dropout_seed);
  ad::Matrix logits(const ad::Matrix& x) const;

  // Weighted mean BCE on (x, y, w); when `with_grad` parameter grads are
  // reset and filled.
  double loss(const ad::Matrix& x, std::span<const double> y, std::span<const double> w,
              bool training, std::uint64_t dropout_seed, bool with_grad);

  const NetworkSpec& spec() const { return spec_; }
  std::vector<ad::Parameter>& params() { return params_; }
  const std::vector<ad::Parameter>& params() const { return params_; }

 private:
  ad::Var input(ad::Tape& tape, const ad::Matrix& x) const;
  ad::Var forward_impl(ad::Tape& tape, const ad::Matrix& x, bool training,
                       std::uint64_t dropout_seed);

  NetworkSpec spec_;
  std::vector<ad::Parameter> params_;
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  ad::Matrix m;
  ad::Matrix v;
  std::size_t t = 0;
};

// One bias-corrected Adam update. Advances state.t. NumericalError naming
// `block` on a non-finite gradient.
void adam_step(ad::Matrix& param, const ad::Matrix& grad, AdamState& state,
               const AdamOptions& options, std::string_view block);

class Adam {
 public:
  explicit Adam(AdamOptions options) : options_(options) {}
  void step(std::vector<ad::Parameter>& params);

 private:
  AdamOptions options_;
  std::vector<AdamState> states_;
};

class NeuralModel final : public TrainedModel {
 public:
  NeuralModel(Family family, FeatureLayout layout, Network network, TrainingMeta meta);
  const Network& network() const { return network_; }
  std::vector<ParameterBlock> parameters() const override;
  nlohmann::json structure() const override;

 protected:
  std::vector<double> score(const FeatureMatrix& x) const override;

 private:
  Network network_;
};

Architecture architecture_of(Family family);  // ConfigError for classical families

std::unique_ptr<NeuralModel> fit_neural(Family family, const FeatureMatrix& x,
                                        std::span<const int> y, const TrainConfig& cfg,
                                        const FeatureMatrix& x_val, std::span<const int> y_val);

inline std::unique_ptr<NeuralModel> fit_mlp(const FeatureMatrix& x, std::span<const int> y,
                                            const TrainConfig& cfg, const FeatureMatrix& x_val,
                                            std::span<const int> y_val) {
  return fit_neural(Family::kMlp, x, y, cfg, x_val, y_val);
}
inline std::unique_ptr<NeuralModel> fit_cnn(const FeatureMatrix& x, std::span<const int> y,
                                            const TrainConfig& cfg, const FeatureMatrix& x_val,
                                            std::span<const int> y_val) {
  return fit_neural(Family::kCnn, x, y, cfg, x_val, y_val);
}
inline std::unique_ptr<NeuralModel> fit_lstm(const FeatureMatrix& x, std::span<const int> y,
                                             const TrainConfig& cfg, const FeatureMatrix& x_val,
                                             std::span<const int> y_val) {
  return fit_neural(Family::kLstm, x, y, cfg, x_val, y_val);
}

// ---- dispatch and persistence ----

std::unique_ptr<TrainedModel> fit_model(Family family, const FeatureMatrix& x,
                                        std::span<const int> y, const TrainConfig& cfg,
                                        const FeatureMatrix& x_val, std::span<const int> y_val);

// Header line, one JSON line (family, layout, shapes, seed, config digest,
// meta, structure), then float64 little-endian parameter values.
std::string save_model(const TrainedModel& model, std::string_view config_digest);

struct LoadedModel {
  std::unique_ptr<TrainedModel> model;
  std::string config_digest;
  bool digest_matches = true;
};

// A digest mismatch is logged as a warning and reported in `digest_matches`.
LoadedModel load_model(std::string_view bytes, std::string_view expected_digest = {});

}  // namespace hypogsr

#endif  // HYPOGSR_MODELS_HPP_
