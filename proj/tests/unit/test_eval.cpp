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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hypogsr/error.hpp"
#include "hypogsr/eval.hpp"
#include "hypogsr/kernels.hpp"

namespace hypogsr {
namespace {

std::uint64_t brute_twice_u(const std::vector<double>& s, const std::vector<int>& y) {
  std::uint64_t u2 = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == 1 && y[j] == 0) u2 += s[i] > s[j] ? 2 : (s[i] == s[j] ? 1 : 0);
  return u2;
}

TEST(Auc, MatchesPairCountingOnFuzzedTies) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    const int levels = 1 + static_cast<int>(rng() % 6);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % levels) / 7.0;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    EXPECT_EQ(auc_twice_u(s, y), brute_twice_u(s, y));
  }
}

TEST(Auc, KnownValues) {
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.4, 0.35, 0.8}, y), 0.75);
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, y), 0.5);
  EXPECT_THROW(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}),
               InsufficientClassError);
}

TEST(Roc, CurveShape) {
  const std::vector<double> s{0.9, 0.8, 0.8, 0.1};
  const std::vector<int> y{1, 0, 1, 0};
  const auto roc = roc_curve(s, y);
  ASSERT_EQ(roc.size(), 4u);
  EXPECT_TRUE(std::isinf(roc[0].threshold));
  EXPECT_EQ(roc[0].fpr, 0.0);
  EXPECT_EQ(roc[1].tpr, 0.5);
  EXPECT_EQ(roc[2].fpr, 0.5);
  EXPECT_EQ(roc[2].tpr, 1.0);
  EXPECT_EQ(roc[3].fpr, 1.0);
  const auto csv = emit_roc_csv(roc);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "fpr,tpr,threshold");
  EXPECT_NE(csv.find("0,0,inf"), std::string::npos);
}

TEST(Metrics, ConfusionAndUndefined) {
  const std::vector<int> pred{1, 1, 0, 0, 0}, y{1, 0, 1, 0, 0};
  const auto c = confusion(pred, y);
  EXPECT_EQ(c, (ConfusionCounts{1, 1, 1, 2}));
  const auto m = metrics_from_confusion(c);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.6);
  EXPECT_DOUBLE_EQ(m.precision, 0.5);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_DOUBLE_EQ(m.f1, 0.5);
  const auto n = metrics_from_confusion(c.flipped());
  EXPECT_DOUBLE_EQ(n.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(n.recall, 2.0 / 3.0);
  const auto none = metrics_from_confusion({0, 0, 2, 3});
  EXPECT_TRUE(none.precision_undefined);
  EXPECT_TRUE(none.f1_undefined);
  EXPECT_FALSE(none.recall_undefined);
  EXPECT_EQ(none.recall, 0.0);
}

TEST(Percentile, Interpolates) {
  const std::vector<double> v{0, 10, 20, 30, 40};
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.025), 1.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.975), 39.0);
}

struct Scored {
  std::vector<double> scores;
  std::vector<int> pred, y;
};

Scored fake(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u;
  Scored s;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = u(rng) < 0.2;
    const double score = std::min(1.0, std::max(0.0, 0.3 * y + 0.7 * u(rng)));
    s.y.push_back(y);
    s.scores.push_back(score);
    s.pred.push_back(score >= 0.5);
  }
  return s;
}

TEST(Bootstrap, SeededAndPreservesClassCounts) {
  const auto s = fake(300, 2);
  const auto a = stratified_bootstrap_ci(s.scores, s.pred, s.y, Metric::kAuc,
                                         PositiveClass::kHypo, 200, 0.95, 9);
  const auto b = stratified_bootstrap_ci(s.scores, s.pred, s.y, Metric::kAuc,
                                         PositiveClass::kHypo, 200, 0.95, 9);
  EXPECT_EQ(a, b);
  const auto point = roc_auc(s.scores, s.y);
  EXPECT_LE(a.low, point);
  EXPECT_GE(a.high, point);
  const auto c = stratified_bootstrap_ci(s.scores, s.pred, s.y, Metric::kAuc,
                                         PositiveClass::kHypo, 200, 0.95, 10);
  EXPECT_NE(a, c);
}

TEST(Bootstrap, ReplicatesMatchPointEstimateSlots) {
  const auto s = fake(100, 3);
  BootstrapPlan plan(s.scores, s.pred, s.y);
  const auto point = plan.point_estimate();
  const auto m = metrics_from_confusion(confusion(s.pred, s.y));
  EXPECT_DOUBLE_EQ(point.value[BootstrapPlan::slot(Metric::kAccuracy, PositiveClass::kHypo)], m.accuracy);
  EXPECT_DOUBLE_EQ(point.value[BootstrapPlan::slot(Metric::kRecall, PositiveClass::kHypo)], m.recall);
  EXPECT_DOUBLE_EQ(point.value[BootstrapPlan::slot(Metric::kAuc, PositiveClass::kHypo)],
                   roc_auc(s.scores, s.y));
  EXPECT_EQ(BootstrapPlan::slot(Metric::kAccuracy, PositiveClass::kNormo), 0u);
  std::vector<std::uint32_t> scratch;
  const auto r1 = plan.replicate(5, 3, scratch);
  const auto r2 = plan.replicate(5, 3, scratch);
  EXPECT_EQ(r1.value, r2.value);
}

TEST(Bootstrap, UnstableMetricIsReported) {
  // Never predicts hypo, so hypo precision is undefined in every replicate.
  std::vector<double> scores(50, 0.1);
  std::vector<int> pred(50, 0), y(50, 0);
  for (int i = 0; i < 5; ++i) y[i] = 1;
  EXPECT_THROW(stratified_bootstrap_ci(scores, pred, y, Metric::kPrecision), UnstableMetricError);
  const auto m = evaluate_predictions(scores, 0.5, y, 100, 0.95, 1);
  EXPECT_TRUE(m.hypo.precision.undefined);
  EXPECT_FALSE(m.hypo.precision.ci.has_value());
  EXPECT_EQ(m.hypo.precision.ci_note.rfind("unstable", 0), 0u);
  EXPECT_TRUE(m.hypo.recall.ci.has_value());
}

TEST(Evaluate, NormoAucEqualsHypoAuc) {
  const auto s = fake(200, 4);
  const auto m = evaluate_predictions(s.scores, 0.5, s.y, 50, 0.9, 3);
  EXPECT_EQ(m.n, 200u);
  EXPECT_DOUBLE_EQ(m.normo.auc.value, m.hypo.auc.value);
  EXPECT_DOUBLE_EQ(m.normo.recall.value,
                   metrics_from_confusion(m.confusion.flipped()).recall);
  ASSERT_TRUE(m.accuracy.ci.has_value());
  EXPECT_EQ(m.accuracy.ci->iterations, 50u);
  EXPECT_DOUBLE_EQ(m.accuracy.ci->level, 0.9);
}

EvaluationReport sample_report() {
  EvaluationReport r;
  r.config = {{"seed", 7}};
  r.config_digest = "0123456789abcdef";
  r.master_seed = 7;
  r.stage_seeds["split"] = 99;
  r.dataset_digest = "feed";
  r.n_subjects = 2;
  r.n_windows = 200;
  r.n_hypo = 40;
  r.splits.push_back({"train", 150, 30, {{"a", 100}, {"b", 50}}});
  const auto s = fake(200, 5);
  CellResult ok;
  ok.family = Family::kLstm;
  ok.mode = FeatureLayout::kSequence;
  ok.meta = TrainingMeta{1, 4, 2, 0.25, std::nullopt, "balanced", true};
  ok.test = evaluate_predictions(s.scores, 0.5, s.y, 30, 0.95, 1);
  ok.validation = evaluate_predictions(s.scores, 0.5, s.y, 0, 0.95, 0);
  CellResult bad;
  bad.family = Family::kCnn;
  bad.mode = FeatureLayout::kStatic;
  bad.status = "failed";
  bad.error = "NumericalError: boom";
  r.cells = {bad, ok};
  return r;
}

TEST(Report, JsonRoundTripAndStableBytes) {
  const auto r = sample_report();
  const std::string a = emit_report(r, ReportFormat::kJson);
  const auto back = parse_report_json(a);
  EXPECT_EQ(emit_report(back, ReportFormat::kJson), a);
  ASSERT_EQ(back.cells.size(), 2u);
  EXPECT_EQ(back.cells[1].test, r.cells[1].test);
  EXPECT_EQ(back.cells[1].meta, r.cells[1].meta);
  EXPECT_EQ(back.cells[0].error, "NumericalError: boom");
  EXPECT_EQ(back.splits, r.splits);
  EXPECT_EQ(a.find("runtime"), std::string::npos);
}

TEST(Report, CsvRoundTrip) {
  const auto r = sample_report();
  const auto rows = report_csv_rows(r);
  EXPECT_EQ(parse_report_csv(emit_report(r, ReportFormat::kCsv)), rows);
  const auto csv = emit_report(r, ReportFormat::kCsv);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "family,mode,status,split,class,metric,value,ci_low,ci_high,undefined");
}

TEST(Report, MarkdownTables) {
  const auto md = emit_report(sample_report(), ReportFormat::kMarkdown);
  EXPECT_NE(md.find("| Model | Accuracy | Recall | F1-score | AUC |"), std::string::npos);
  EXPECT_NE(md.find("| Model | Recall | F1-score | AUC |"), std::string::npos);
  EXPECT_NE(md.find("failed"), std::string::npos);
  EXPECT_NE(md.find("LSTM (sequence)"), std::string::npos);
}

TEST(Report, EmptyIsAnError) {
  EvaluationReport r;
  EXPECT_THROW(emit_report(r, ReportFormat::kJson), EmptyReportError);
  EXPECT_THROW(parse_report_format("pdf"), ConfigError);
  EXPECT_EQ(parse_report_format("md"), ReportFormat::kMarkdown);
}

}  // namespace
}  // namespace hypogsr
