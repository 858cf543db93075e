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

#include "hypogsr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hypogsr/error.hpp"
#include "hypogsr/kernels.hpp"

namespace hypogsr {

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size())
    throw ShapeError("confusion: " + std::to_string(predicted.size()) + " predictions for " +
                     std::to_string(labels.size()) + " labels");
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predicted[i] == 1;
    const bool y = labels[i] == 1;
    if (p && y) ++c.tp;
    else if (p) ++c.fp;
    else if (y) ++c.fn;
    else ++c.tn;
  }
  return c;
}

MetricSet metrics_from_confusion(const ConfusionCounts& c) {
  if (c.total() == 0) throw ShapeError("metrics of an empty confusion table");
  MetricSet m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp == 0) m.precision_undefined = true;
  else m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn == 0) m.recall_undefined = true;
  else m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.f1_undefined = m.precision_undefined || m.recall_undefined;
  if (!m.f1_undefined && m.precision + m.recall > 0.0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

namespace {

void check_scores(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size())
    throw ShapeError("auc: " + std::to_string(scores.size()) + " scores for " +
                     std::to_string(labels.size()) + " labels");
  for (double s : scores)
    if (std::isnan(s)) throw NumericalError("auc: NaN score");
}

std::vector<std::size_t> ascending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  return order;
}

}  // namespace

std::uint64_t auc_twice_u(std::span<const double> scores, std::span<const int> labels) {
  check_scores(scores, labels);
  const auto order = ascending_order(scores);
  std::uint64_t twice_u = 0;
  std::uint64_t neg_below = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      (labels[order[j]] == 1 ? pos : neg) += 1;
      ++j;
    }
    twice_u += pos * (2 * neg_below + neg);
    neg_below += neg;
    i = j;
  }
  return twice_u;
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_scores(scores, labels);
  const auto pos = static_cast<std::uint64_t>(std::count(labels.begin(), labels.end(), 1));
  const auto neg = labels.size() - pos;
  if (pos == 0 || neg == 0)
    throw InsufficientClassError("auc needs both classes, got " + std::to_string(pos) +
                                 " positive and " + std::to_string(neg) + " negative");
  return static_cast<double>(auc_twice_u(scores, labels)) /
         (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_scores(scores, labels);
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const auto neg = static_cast<double>(labels.size()) - pos;
  if (pos == 0 || neg == 0) throw InsufficientClassError("roc curve needs both classes");
  auto order = ascending_order(scores);
  std::reverse(order.begin(), order.end());
  std::vector<RocPoint> pts{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  double tp = 0.0;
  double fp = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? tp : fp) += 1.0;
      ++i;
    }
    pts.push_back({fp / neg, tp / pos, s});
  }
  return pts;
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kAccuracy:
      return "accuracy";
    case Metric::kPrecision:
      return "precision";
    case Metric::kRecall:
      return "recall";
    case Metric::kF1:
      return "f1";
    case Metric::kAuc:
      return "auc";
  }
  return "unknown";
}

double percentile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ShapeError("percentile of an empty set");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BootstrapPlan::BootstrapPlan(std::span<const double> scores, std::span<const int> predicted,
                             std::span<const int> labels)
    : scores_(scores.begin(), scores.end()),
      predicted_(predicted.begin(), predicted.end()),
      labels_(labels.begin(), labels.end()) {
  check_scores(scores, labels);
  if (predicted.size() != labels.size()) throw ShapeError("bootstrap: prediction count mismatch");
  if (labels.empty()) throw ShapeError("bootstrap on an empty set");
  for (std::size_t i = 0; i < labels_.size(); ++i) (labels_[i] == 1 ? pos_ : neg_).push_back(i);
  order_ = ascending_order(scores_);
  for (std::size_t i = 0; i < order_.size();) {
    std::size_t j = i;
    while (j < order_.size() && scores_[order_[j]] == scores_[order_[i]]) ++j;
    group_end_.push_back(j);
    i = j;
  }
}

std::size_t BootstrapPlan::slot(Metric m, PositiveClass cls) {
  if (m == Metric::kAccuracy) return 0;
  const std::size_t base = cls == PositiveClass::kHypo ? 1 : 5;
  return base + static_cast<std::size_t>(m) - 1;
}

BootstrapPlan::Replicate BootstrapPlan::from_counts(std::span<const std::uint32_t> counts) const {
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const std::size_t k = counts[i];
    if (k == 0) continue;
    const bool p = predicted_[i] == 1;
    const bool y = labels_[i] == 1;
    (p ? (y ? c.tp : c.fp) : (y ? c.fn : c.tn)) += k;
  }
  Replicate r;
  const MetricSet hypo = metrics_from_confusion(c);
  const MetricSet normo = metrics_from_confusion(c.flipped());
  r.value[0] = hypo.accuracy;
  r.defined[0] = true;
  const MetricSet* sets[2] = {&hypo, &normo};
  for (int cls = 0; cls < 2; ++cls) {
    const std::size_t base = cls == 0 ? 1 : 5;
    const MetricSet& m = *sets[cls];
    r.value[base] = m.precision;
    r.defined[base] = !m.precision_undefined;
    r.value[base + 1] = m.recall;
    r.defined[base + 1] = !m.recall_undefined;
    r.value[base + 2] = m.f1;
    r.defined[base + 2] = !m.f1_undefined;
  }
  // Rank statistic over the weighted sample. Hypo-positive pairs count
  // hypo above normo; normo-positive pairs count normo above hypo.
  std::uint64_t twice_u_hypo = 0;
  std::uint64_t twice_u_normo = 0;
  std::uint64_t neg_below = 0;
  std::uint64_t pos_below = 0;
  std::uint64_t n_pos = 0;
  std::uint64_t n_neg = 0;
  std::size_t start = 0;
  for (std::size_t end : group_end_) {
    std::uint64_t pw = 0;
    std::uint64_t nw = 0;
    for (std::size_t k = start; k < end; ++k) {
      const std::size_t i = order_[k];
      (labels_[i] == 1 ? pw : nw) += counts[i];
    }
    twice_u_hypo += pw * (2 * neg_below + nw);
    twice_u_normo += nw * (2 * pos_below + pw);
    neg_below += nw;
    pos_below += pw;
    n_pos += pw;
    n_neg += nw;
    start = end;
  }
  const bool auc_defined = n_pos > 0 && n_neg > 0;
  const double pairs2 = 2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg);
  r.defined[4] = r.defined[8] = auc_defined;
  if (auc_defined) {
    r.value[4] = static_cast<double>(twice_u_hypo) / pairs2;
    // Normo scores are 1 - p, so "normo above hypo" is "hypo below normo" on p.
    r.value[8] = static_cast<double>(2 * n_pos * n_neg - twice_u_normo) / pairs2;
  }
  return r;
}

BootstrapPlan::Replicate BootstrapPlan::replicate(std::uint64_t seed, std::size_t iteration,
                                                  std::vector<std::uint32_t>& scratch) const {
  scratch.assign(labels_.size(), 0);
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(iteration)));
  for (const auto* stratum : {&pos_, &neg_}) {
    if (stratum->empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, stratum->size() - 1);
    for (std::size_t k = 0; k < stratum->size(); ++k) ++scratch[(*stratum)[pick(rng)]];
  }
  return from_counts(scratch);
}

BootstrapPlan::Replicate BootstrapPlan::point_estimate() const {
  std::vector<std::uint32_t> ones(labels_.size(), 1);
  return from_counts(ones);
}

ConfidenceInterval interval_from_replicates(std::span<const BootstrapPlan::Replicate> reps,
                                            std::size_t slot, double level, std::uint64_t seed) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
  std::vector<double> values;
  values.reserve(reps.size());
  for (const auto& r : reps)
    if (r.defined[slot]) values.push_back(r.value[slot]);
  ConfidenceInterval ci;
  ci.level = level;
  ci.iterations = reps.size();
  ci.undefined_iterations = reps.size() - values.size();
  ci.seed = seed;
  if (values.empty() || 2 * ci.undefined_iterations > reps.size())
    throw UnstableMetricError("metric undefined in " + std::to_string(ci.undefined_iterations) +
                              " of " + std::to_string(reps.size()) + " bootstrap iterations");
  std::sort(values.begin(), values.end());
  const double tail = (1.0 - level) / 2.0;
  ci.low = percentile_sorted(values, tail);
  ci.high = percentile_sorted(values, 1.0 - tail);
  return ci;
}

ConfidenceInterval stratified_bootstrap_ci(std::span<const double> scores,
                                           std::span<const int> predicted,
                                           std::span<const int> labels, Metric metric,
                                           PositiveClass cls, std::size_t iterations,
                                           double level, std::uint64_t seed) {
  if (iterations == 0) throw ConfigError("bootstrap needs at least one iteration");
  const BootstrapPlan plan(scores, predicted, labels);
  const auto reps = kernels::omp::bootstrap_replicates(plan, seed, iterations);
  return interval_from_replicates(reps, BootstrapPlan::slot(metric, cls), level, seed);
}

SplitMetrics evaluate_predictions(std::span<const double> scores, double threshold,
                                  std::span<const int> labels, std::size_t iterations,
                                  double level, std::uint64_t seed) {
  if (scores.size() != labels.size()) throw ShapeError("evaluate: score count mismatch");
  std::vector<int> predicted(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) predicted[i] = scores[i] >= threshold ? 1 : 0;
  const BootstrapPlan plan(scores, predicted, labels);
  const auto point = plan.point_estimate();

  SplitMetrics out;
  out.n = labels.size();
  out.n_hypo = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  out.confusion = confusion(predicted, labels);

  std::vector<BootstrapPlan::Replicate> reps;
  if (iterations > 0) reps = kernels::omp::bootstrap_replicates(plan, seed, iterations);

  auto estimate = [&](std::size_t slot) {
    MetricEstimate e;
    e.value = point.value[slot];
    e.undefined = !point.defined[slot];
    if (!reps.empty()) {
      try {
        e.ci = interval_from_replicates(reps, slot, level, seed);
      } catch (const UnstableMetricError& err) {
        e.ci_note = std::string("unstable: ") + err.what();
      }
    }
    return e;
  };
  out.accuracy = estimate(0);
  ClassMetrics* classes[2] = {&out.hypo, &out.normo};
  for (std::size_t c = 0; c < 2; ++c) {
    const std::size_t base = c == 0 ? 1 : 5;
    classes[c]->precision = estimate(base);
    classes[c]->recall = estimate(base + 1);
    classes[c]->f1 = estimate(base + 2);
    classes[c]->auc = estimate(base + 3);
  }
  return out;
}

}  // namespace hypogsr
