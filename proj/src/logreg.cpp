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

#include <algorithm>
#include <cmath>

#include "hypogsr/error.hpp"
#include "hypogsr/models.hpp"

namespace hypogsr {

namespace {

void require_both_classes(std::span<const int> y, std::string_view who) {
  const auto hypo = std::count(y.begin(), y.end(), 1);
  if (hypo == 0 || hypo == static_cast<std::ptrdiff_t>(y.size()))
    throw InsufficientClassError(std::string(who) + " needs both classes in the training set");
}

struct LogRegFit {
  std::vector<double> w;
  double b = 0.0;
  std::size_t steps = 0;
};

LogRegFit run_adam(const FeatureMatrix& x, std::span<const int> y, const ClassWeights& weights,
                   double l2, const TrainConfig& cfg, std::vector<double>* loss_trace) {
  const std::size_t d = x.cols;
  LogRegFit fit{std::vector<double>(d, 0.0), 0.0, 0};
  ad::Matrix theta = ad::Matrix::Zero(1, static_cast<Eigen::Index>(d + 1));
  ad::Matrix grad(1, static_cast<Eigen::Index>(d + 1));
  AdamState state;
  const AdamOptions options{cfg.logreg_learning_rate};
  std::vector<double> gw(d);
  double gb = 0.0;
  for (std::size_t it = 0; it < cfg.logreg_max_iter; ++it) {
    const double loss = logreg_objective(x, y, weights, l2, fit.w, fit.b, &gw, &gb);
    if (!std::isfinite(loss)) throw NumericalError("logistic regression loss is not finite");
    if (loss_trace != nullptr) loss_trace->push_back(loss);
    double norm_sq = gb * gb;
    for (std::size_t j = 0; j < d; ++j) {
      grad(0, static_cast<Eigen::Index>(j)) = gw[j];
      norm_sq += gw[j] * gw[j];
    }
    grad(0, static_cast<Eigen::Index>(d)) = gb;
    if (std::sqrt(norm_sq) < cfg.logreg_tolerance) break;
    adam_step(theta, grad, state, options, "logreg");
    for (std::size_t j = 0; j < d; ++j) fit.w[j] = theta(0, static_cast<Eigen::Index>(j));
    fit.b = theta(0, static_cast<Eigen::Index>(d));
    fit.steps = state.t;
  }
  return fit;
}

}  // namespace

LogRegModel::LogRegModel(FeatureLayout layout, std::vector<double> weights, double bias,
                         TrainingMeta meta)
    : TrainedModel(Family::kLogReg, layout, weights.size(), std::move(meta)),
      weights_(std::move(weights)),
      bias_(bias) {}

std::vector<ParameterBlock> LogRegModel::parameters() const {
  return {{"weights", 1, weights_.size(), weights_}, {"bias", 1, 1, {bias_}}};
}

std::vector<double> LogRegModel::score(const FeatureMatrix& x) const {
  std::vector<double> p(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    double z = bias_;
    const auto row = x.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) z += weights_[j] * row[j];
    p[r] = ad::stable_sigmoid(z);
  }
  return p;
}

double logreg_objective(const FeatureMatrix& x, std::span<const int> y,
                        const ClassWeights& weights, double l2, std::span<const double> w, double b,
                        std::vector<double>* grad_w, double* grad_b) {
  if (x.rows != y.size() || w.size() != x.cols)
    throw ShapeError("logreg objective: shapes disagree");
  const double n = static_cast<double>(x.rows);
  if (grad_w != nullptr) grad_w->assign(x.cols, 0.0);
  double gb = 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto row = x.row(r);
    double z = b;
    for (std::size_t j = 0; j < row.size(); ++j) z += w[j] * row[j];
    const double p = ad::stable_sigmoid(z);
    const double pc = std::clamp(p, ad::kProbabilityEpsilon, 1.0 - ad::kProbabilityEpsilon);
    const double wi = weights.weight(y[r]);
    total += -wi * (y[r] == 1 ? std::log(pc) : std::log(1.0 - pc));
    const bool clipped = p < ad::kProbabilityEpsilon || p > 1.0 - ad::kProbabilityEpsilon;
    if (clipped || grad_w == nullptr) continue;
    const double g = wi * (p - static_cast<double>(y[r])) / n;
    for (std::size_t j = 0; j < row.size(); ++j) (*grad_w)[j] += g * row[j];
    gb += g;
  }
  double penalty = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    penalty += w[j] * w[j];
    if (grad_w != nullptr) (*grad_w)[j] += l2 * w[j];
  }
  if (grad_b != nullptr) *grad_b = gb;
  return total / n + 0.5 * l2 * penalty;
}

std::unique_ptr<LogRegModel> fit_logreg(const FeatureMatrix& x, std::span<const int> y,
                                        const TrainConfig& cfg, const FeatureMatrix* x_val,
                                        std::span<const int> y_val,
                                        std::vector<double>* loss_trace) {
  cfg.validate();
  x.validate();
  if (x.rows != y.size()) throw ShapeError("logreg: row and label counts differ");
  require_both_classes(y, "logistic regression");
  const ClassWeights weights = cfg.resolve_weights(y);

  TrainingMeta meta;
  meta.seed = cfg.seed;
  meta.weights = cfg.class_weights ? "explicit" : (cfg.use_class_weights ? "balanced" : "unit");

  double l2 = cfg.l2_lambda;
  LogRegFit best;
  const bool search = !cfg.l2_grid.empty() && x_val != nullptr && x_val->rows > 0;
  if (search) {
    double best_loss = std::numeric_limits<double>::infinity();
    for (double candidate : cfg.l2_grid) {
      auto fit = run_adam(x, y, weights, candidate, cfg, nullptr);
      LogRegModel probe(x.layout, fit.w, fit.b, {});
      const double loss = weighted_bce(probe.predict_proba(*x_val), y_val, weights);
      if (loss < best_loss) {
        best_loss = loss;
        best = std::move(fit);
        l2 = candidate;
      }
    }
    meta.best_val_loss = best_loss;
    if (loss_trace != nullptr) run_adam(x, y, weights, l2, cfg, loss_trace);
  } else {
    best = run_adam(x, y, weights, l2, cfg, loss_trace);
    if (x_val != nullptr && x_val->rows > 0) {
      LogRegModel probe(x.layout, best.w, best.b, {});
      meta.best_val_loss = weighted_bce(probe.predict_proba(*x_val), y_val, weights);
    }
  }
  meta.selected_l2 = l2;
  meta.epochs_run = best.steps;
  return std::make_unique<LogRegModel>(x.layout, std::move(best.w), best.b, std::move(meta));
}

}  // namespace hypogsr
