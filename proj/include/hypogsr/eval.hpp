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

#ifndef HYPOGSR_EVAL_HPP_
#define HYPOGSR_EVAL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hypogsr/models.hpp"
#include "json.hpp"

namespace hypogsr {

// Hypo is the positive class.
struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  // Same predictions scored with Normo as the positive class.
  ConfusionCounts flipped() const { return {tn, fn, fp, tp}; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(std::span<const int> predicted, std::span<const int> labels);

struct MetricSet {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double auc = 0.0;  // filled separately
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

// 0/0 ratios come back as 0 with the matching flag set.
MetricSet metrics_from_confusion(const ConfusionCounts& c);

// Mann-Whitney AUC with ties counted as one half. InsufficientClassError
// unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

// Twice the Mann-Whitney U statistic, an exact integer.
std::uint64_t auc_twice_u(std::span<const double> scores, std::span<const int> labels);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

// One point per distinct score, descending thresholds, starting at (0, 0, +inf).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);

enum class Metric { kAccuracy, kPrecision, kRecall, kF1, kAuc };
enum class PositiveClass { kHypo, kNormo };

std::string_view metric_name(Metric m);

struct ConfidenceInterval {
  double low = 0.0;
  double high = 0.0;
  double level = 0.95;
  std::size_t iterations = 0;
  std::size_t undefined_iterations = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const ConfidenceInterval&, const ConfidenceInterval&) = default;
};

// Linear interpolation at position p * (n - 1) of sorted values.
double percentile_sorted(std::span<const double> sorted, double p);

// Per-class resampling with replacement that keeps both class counts. Every
// iteration draws from its own RNG seeded by derive_seed(seed, iteration).
class BootstrapPlan {
 public:
  BootstrapPlan(std::span<const double> scores, std::span<const int> predicted,
                std::span<const int> labels);

  static constexpr std::size_t kSlots = 9;  // accuracy, then 4 per class
  static std::size_t slot(Metric m, PositiveClass cls);

  struct Replicate {
    std::array<double, kSlots> value{};
    std::array<bool, kSlots> defined{};
  };

  Replicate replicate(std::uint64_t seed, std::size_t iteration,
                      std::vector<std::uint32_t>& scratch) const;
  Replicate point_estimate() const;
  std::size_t size() const { return labels_.size(); }

 private:
  Replicate from_counts(std::span<const std::uint32_t> counts) const;

  std::vector<double> scores_;
  std::vector<int> predicted_;
  std::vector<int> labels_;
  std::vector<std::size_t> pos_, neg_;
  std::vector<std::size_t> order_;       // ascending score
  std::vector<std::size_t> group_end_;   // tie groups over order_
};

// CI for one slot from precomputed replicates. UnstableMetricError when more
// than half of the iterations left the metric undefined.
ConfidenceInterval interval_from_replicates(std::span<const BootstrapPlan::Replicate> reps,
                                            std::size_t slot, double level, std::uint64_t seed);

ConfidenceInterval stratified_bootstrap_ci(std::span<const double> scores,
                                           std::span<const int> predicted,
                                           std::span<const int> labels, Metric metric,
                                           PositiveClass cls = PositiveClass::kHypo,
                                           std::size_t iterations = 1000, double level = 0.95,
                                           std::uint64_t seed = 0);

// ---- report ----

struct MetricEstimate {
  double value = 0.0;
  bool undefined = false;
  std::optional<ConfidenceInterval> ci;
  std::string ci_note;  // set when the interval could not be formed

  friend bool operator==(const MetricEstimate&, const MetricEstimate&) = default;
};

struct ClassMetrics {
  MetricEstimate precision, recall, f1, auc;
  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

struct SplitMetrics {
  std::size_t n = 0;
  std::size_t n_hypo = 0;
  ConfusionCounts confusion;
  MetricEstimate accuracy;
  ClassMetrics hypo, normo;
  friend bool operator==(const SplitMetrics&, const SplitMetrics&) = default;
};

// Point estimates and, when `iterations` > 0, bootstrap intervals.
SplitMetrics evaluate_predictions(std::span<const double> scores, double threshold,
                                  std::span<const int> labels, std::size_t iterations,
                                  double level, std::uint64_t seed);

struct CellResult {
  Family family = Family::kLogReg;
  FeatureLayout mode = FeatureLayout::kSequence;
  std::string status = "ok";  // "ok" or "failed"
  std::string error;
  std::optional<TrainingMeta> meta;
  std::optional<SplitMetrics> test;
  std::optional<SplitMetrics> validation;
  std::vector<RocPoint> roc;      // not part of report.json
  double runtime_seconds = 0.0;   // not part of report.json

  bool ok() const { return status == "ok"; }
  std::string key() const;        // "<family>_<mode>"
};

struct SplitSummary {
  std::string name;
  std::size_t windows = 0;
  std::size_t hypo = 0;
  std::map<std::string, std::size_t> subjects;  // windows per subject
  friend bool operator==(const SplitSummary&, const SplitSummary&) = default;
};

struct EvaluationReport {
  nlohmann::json config;
  std::string config_digest;
  std::uint64_t master_seed = 0;
  std::map<std::string, std::uint64_t> stage_seeds;
  std::string dataset_digest;
  std::size_t n_subjects = 0;
  std::size_t total_steps = 0;
  std::size_t n_windows = 0;
  std::size_t n_hypo = 0;
  std::size_t discarded_windows = 0;
  std::vector<SplitSummary> splits;
  std::vector<CellResult> cells;  // sorted by family short name, then mode
};

enum class ReportFormat { kJson, kCsv, kMarkdown };
ReportFormat parse_report_format(std::string_view name);  // json / csv / markdown (md)
std::string_view report_extension(ReportFormat f);

nlohmann::json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);
EvaluationReport parse_report_json(std::string_view bytes);

// EmptyReportError when the report has no cells.
std::string emit_report(const EvaluationReport& report, ReportFormat format);

// Rows of the flat CSV form: one per cell x split x class x metric.
struct ReportCsvRow {
  std::string family, mode, status, split, cls, metric;
  std::optional<double> value, low, high;
  bool undefined = false;
  friend bool operator==(const ReportCsvRow&, const ReportCsvRow&) = default;
};
std::vector<ReportCsvRow> report_csv_rows(const EvaluationReport& report);
std::vector<ReportCsvRow> parse_report_csv(std::string_view bytes);

// fpr,tpr,threshold
std::string emit_roc_csv(std::span<const RocPoint> points);

}  // namespace hypogsr

#endif  // HYPOGSR_EVAL_HPP_
