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
#include <array>
#include <limits>

#include "hypogsr/error.hpp"
#include "hypogsr/kernels.hpp"
#include "hypogsr/models.hpp"

namespace hypogsr {

KnnModel::KnnModel(FeatureMatrix train, std::vector<int> labels, std::size_t k, TrainingMeta meta)
    : TrainedModel(Family::kKnn, train.layout, train.cols, std::move(meta)),
      train_(std::move(train)),
      labels_(std::move(labels)),
      k_(k) {}

std::vector<ParameterBlock> KnnModel::parameters() const {
  std::vector<double> labels(labels_.begin(), labels_.end());
  return {{"train_x", train_.rows, train_.cols, train_.values},
          {"train_y", 1, labels_.size(), std::move(labels)}};
}

nlohmann::json KnnModel::structure() const { return {{"k", k_}}; }

std::vector<double> KnnModel::score(const FeatureMatrix& x) const {
  return kernels::omp::knn_scores(train_, labels_, k_, x);
}

double knn_score_one(const FeatureMatrix& train, std::span<const int> labels, std::size_t k,
                     std::span<const double> query) {
  // Sorted ascending by (distance, index). Rows are scanned in index order, so
  // a later row only displaces an entry when strictly closer.
  std::vector<std::pair<double, std::size_t>> best;
  best.reserve(k + 1);
  double worst = std::numeric_limits<double>::infinity();
  const std::size_t d = train.cols;
  const double* data = train.values.data();
  for (std::size_t r = 0; r < train.rows; ++r) {
    const double* row = data + r * d;
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = row[j] - query[j];
      dist += diff * diff;
    }
    if (best.size() == k && !(dist < worst)) continue;
    auto pos = std::upper_bound(best.begin(), best.end(), std::make_pair(dist, r));
    best.insert(pos, {dist, r});
    if (best.size() > k) best.pop_back();
    if (best.size() == k) worst = best.back().first;
  }
  std::size_t hypo = 0;
  for (const auto& [dist, idx] : best) hypo += labels[idx] == 1 ? 1 : 0;
  return static_cast<double>(hypo) / static_cast<double>(best.size());
}

std::unique_ptr<KnnModel> fit_knn(const FeatureMatrix& x, std::span<const int> y,
                                  const TrainConfig& cfg) {
  cfg.validate();
  x.validate();
  if (x.rows != y.size()) throw ShapeError("knn: row and label counts differ");
  if (x.rows < cfg.knn_k)
    throw ConfigError("knn needs at least k = " + std::to_string(cfg.knn_k) +
                      " training rows, got " + std::to_string(x.rows));
  TrainingMeta meta;
  meta.seed = cfg.seed;
  meta.weights = "unit";
  return std::make_unique<KnnModel>(x, std::vector<int>(y.begin(), y.end()), cfg.knn_k,
                                    std::move(meta));
}

}  // namespace hypogsr
