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
#include <numeric>

#include "hypogsr/error.hpp"
#include "hypogsr/kernels.hpp"
#include "hypogsr/models.hpp"

namespace hypogsr {

namespace {

ParameterBlock tree_block(const std::string& name, const Tree& tree) {
  ParameterBlock b{name, tree.nodes.size(), 5, {}};
  b.values.reserve(tree.nodes.size() * 5);
  for (const auto& n : tree.nodes) {
    b.values.push_back(n.feature);
    b.values.push_back(n.threshold);
    b.values.push_back(n.left);
    b.values.push_back(n.right);
    b.values.push_back(n.value);
  }
  return b;
}

double sum_trees(const std::vector<Tree>& trees, std::span<const double> row) {
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(row);
  return s;
}

}  // namespace

Tree tree_from_block(const ParameterBlock& block) {
  if (block.cols != 5 || block.values.size() != block.rows * 5)
    throw ParseError("tree block '" + block.name + "' has the wrong shape");
  Tree t;
  t.nodes.resize(block.rows);
  for (std::size_t i = 0; i < block.rows; ++i) {
    const double* v = block.values.data() + i * 5;
    auto& n = t.nodes[i];
    n.feature = static_cast<std::int32_t>(v[0]);
    n.threshold = v[1];
    n.left = static_cast<std::int32_t>(v[2]);
    n.right = static_cast<std::int32_t>(v[3]);
    n.value = v[4];
    if (!n.is_leaf() && (n.left <= static_cast<std::int32_t>(i) || n.right <= n.left ||
                         static_cast<std::size_t>(n.right) >= block.rows))
      throw ParseError("tree block '" + block.name + "' has invalid child links");
  }
  return t;
}

RandomForestModel::RandomForestModel(FeatureLayout layout, std::size_t input_cols,
                                     std::vector<Tree> trees, TrainingMeta meta)
    : TrainedModel(Family::kRandomForest, layout, input_cols, std::move(meta)),
      trees_(std::move(trees)) {}

std::vector<double> RandomForestModel::tree_probabilities(std::span<const double> row) const {
  std::vector<double> p;
  p.reserve(trees_.size());
  for (const auto& t : trees_) p.push_back(t.predict(row));
  return p;
}

std::vector<ParameterBlock> RandomForestModel::parameters() const {
  std::vector<ParameterBlock> blocks;
  for (std::size_t i = 0; i < trees_.size(); ++i)
    blocks.push_back(tree_block("tree_" + std::to_string(i), trees_[i]));
  return blocks;
}

std::vector<double> RandomForestModel::score(const FeatureMatrix& x) const {
  std::vector<double> p(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r)
    p[r] = sum_trees(trees_, x.row(r)) / static_cast<double>(trees_.size());
  return p;
}

Tree grow_forest_tree(const ForestInputs& in, std::size_t index) {
  const auto& x = *in.binned;
  Rng rng(derive_seed(in.seed, static_cast<std::uint64_t>(index)));
  std::vector<std::uint32_t> counts(x.rows, 0);
  std::uniform_int_distribution<std::size_t> draw(0, x.rows - 1);
  for (std::size_t i = 0; i < x.rows; ++i) ++counts[draw(rng)];
  std::vector<std::uint32_t> samples;
  std::vector<double> weights(x.rows, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    if (counts[i] == 0) continue;
    samples.push_back(static_cast<std::uint32_t>(i));
    weights[i] = static_cast<double>(counts[i]) * in.weights.weight(in.labels[i]);
  }
  GiniCriterion crit{in.labels, weights};
  return grow_tree(x, std::move(samples), crit, in.options, &rng, in.features_per_node);
}

std::unique_ptr<RandomForestModel> fit_random_forest(const FeatureMatrix& x,
                                                     std::span<const int> y,
                                                     const TrainConfig& cfg) {
  cfg.validate();
  x.validate();
  if (x.rows != y.size()) throw ShapeError("random forest: row and label counts differ");
  if (x.rows == 0) throw InsufficientClassError("random forest needs training rows");
  const auto hypo = std::count(y.begin(), y.end(), 1);
  const bool single_class = hypo == 0 || hypo == static_cast<std::ptrdiff_t>(y.size());

  const BinnedMatrix binned = bin_features(x.values, x.rows, x.cols, cfg.max_bins);
  ForestInputs in;
  in.binned = &binned;
  in.labels = y;
  in.weights = single_class ? ClassWeights::unit() : cfg.resolve_weights(y);
  in.options = {cfg.max_depth};
  in.features_per_node =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(x.cols))));
  in.seed = cfg.seed;

  TrainingMeta meta;
  meta.seed = cfg.seed;
  meta.epochs_run = cfg.rf_trees;
  meta.weights = single_class || (!cfg.class_weights && !cfg.use_class_weights)
                     ? "unit"
                     : (cfg.class_weights ? "explicit" : "balanced");
  auto trees = kernels::omp::grow_forest(in, cfg.rf_trees);
  return std::make_unique<RandomForestModel>(x.layout, x.cols, std::move(trees), std::move(meta));
}

// ---- gradient boosting ----

GbdtModel::GbdtModel(FeatureLayout layout, std::size_t input_cols, double base_score,
                     std::vector<Tree> trees, TrainingMeta meta)
    : TrainedModel(Family::kGbdt, layout, input_cols, std::move(meta)),
      base_score_(base_score),
      trees_(std::move(trees)) {}

double GbdtModel::margin(std::span<const double> row) const {
  return base_score_ + sum_trees(trees_, row);
}

std::vector<ParameterBlock> GbdtModel::parameters() const {
  std::vector<ParameterBlock> blocks{{"base_score", 1, 1, {base_score_}}};
  for (std::size_t i = 0; i < trees_.size(); ++i)
    blocks.push_back(tree_block("tree_" + std::to_string(i), trees_[i]));
  return blocks;
}

std::vector<double> GbdtModel::score(const FeatureMatrix& x) const {
  std::vector<double> p(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) p[r] = ad::stable_sigmoid(margin(x.row(r)));
  return p;
}

double gbdt_initial_score(std::span<const int> y, double scale_pos_weight) {
  double pos = 0.0;
  double neg = 0.0;
  for (int v : y) (v == 1 ? pos : neg) += v == 1 ? scale_pos_weight : 1.0;
  if (pos <= 0.0 || neg <= 0.0)
    throw InsufficientClassError("initial score needs both classes");
  const double p = pos / (pos + neg);
  return std::log(p / (1.0 - p));
}

std::unique_ptr<GbdtModel> fit_gbdt(const FeatureMatrix& x, std::span<const int> y,
                                    const TrainConfig& cfg, const FeatureMatrix& x_val,
                                    std::span<const int> y_val) {
  cfg.validate();
  x.validate();
  if (x.rows != y.size()) throw ShapeError("gbdt: row and label counts differ");
  if (x_val.rows == 0) throw ConfigError("gradient boosting needs a non-empty validation set");
  if (x_val.rows != y_val.size()) throw ShapeError("gbdt: validation rows and labels differ");
  const auto hypo = std::count(y.begin(), y.end(), 1);
  if (hypo == 0 || hypo == static_cast<std::ptrdiff_t>(y.size()))
    throw InsufficientClassError("gradient boosting needs both classes in the training set");

  const double spw = cfg.resolve_weights(y).scale_pos_weight;
  const ClassWeights val_weights{spw, 1.0, spw};
  const double base = gbdt_initial_score(y, spw);
  const BinnedMatrix binned = bin_features(x.values, x.rows, x.cols, cfg.max_bins);

  std::vector<double> margin(x.rows, base);
  std::vector<double> val_margin(x_val.rows, base);
  std::vector<double> grad(x.rows), hess(x.rows), val_p(x_val.rows);
  std::vector<std::uint32_t> all(x.rows);
  std::iota(all.begin(), all.end(), 0);

  NewtonCriterion crit{grad, hess, cfg.gbdt_lambda, cfg.gbdt_min_child_weight, cfg.gbdt_eta};
  const TreeOptions options{cfg.max_depth};
  EarlyStopping stopper(cfg.gbdt_patience);
  std::vector<Tree> trees;
  for (std::size_t round = 0; round < cfg.gbdt_rounds; ++round) {
    for (std::size_t i = 0; i < x.rows; ++i) {
      const double p = ad::stable_sigmoid(margin[i]);
      const double s = y[i] == 1 ? spw : 1.0;
      grad[i] = s * (p - static_cast<double>(y[i]));
      hess[i] = s * p * (1.0 - p);
    }
    Tree tree = grow_tree(binned, all, crit, options);
    for (std::size_t i = 0; i < x.rows; ++i) margin[i] += tree.predict(x.row(i));
    for (std::size_t i = 0; i < x_val.rows; ++i) {
      val_margin[i] += tree.predict(x_val.row(i));
      val_p[i] = ad::stable_sigmoid(val_margin[i]);
    }
    trees.push_back(std::move(tree));
    const double val_loss = weighted_bce(val_p, y_val, val_weights);
    if (!std::isfinite(val_loss)) throw NumericalError("gbdt validation loss is not finite");
    if (stopper.update(val_loss)) break;
  }
  trees.resize(stopper.best_round());

  TrainingMeta meta;
  meta.seed = cfg.seed;
  meta.epochs_run = stopper.rounds();
  meta.best_epoch = stopper.best_round();
  meta.best_val_loss = stopper.best_loss();
  meta.weights = cfg.class_weights ? "explicit" : (cfg.use_class_weights ? "balanced" : "unit");
  return std::make_unique<GbdtModel>(x.layout, x.cols, base, std::move(trees), std::move(meta));
}

}  // namespace hypogsr
