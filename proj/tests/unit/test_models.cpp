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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gradcheck.hpp"
#include "hypogsr/error.hpp"
#include "hypogsr/eval.hpp"
#include "hypogsr/models.hpp"
#include "hypogsr/tree.hpp"

namespace hypogsr {
namespace {

struct Toy {
  FeatureMatrix x;
  std::vector<int> y;
};

// Hypo rows carry a rising trend; the trend is invisible to the window mean.
Toy make_toy(std::size_t n, double prevalence, std::uint64_t seed,
             FeatureLayout layout = FeatureLayout::kSequence) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  std::bernoulli_distribution hypo(prevalence);
  Toy t;
  std::vector<double> values;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = hypo(rng) ? 1 : 0;
    t.y.push_back(label);
    std::vector<double> row(12);
    for (int s = 0; s < 12; ++s) row[s] = noise(rng) + (label ? 0.25 * (s - 5.5) : 0.0);
    if (layout == FeatureLayout::kStatic)
      values.push_back(std::accumulate(row.begin(), row.end(), 0.0) / 12.0);
    else
      values.insert(values.end(), row.begin(), row.end());
  }
  t.x = FeatureMatrix::from_rows(layout, layout == FeatureLayout::kStatic ? 1 : 12, values);
  return t;
}

TrainConfig fast_config() {
  TrainConfig c;
  c.seed = 3;
  c.max_epochs = 4;
  c.rf_trees = 20;
  c.gbdt_rounds = 30;
  c.logreg_max_iter = 200;
  return c;
}

TEST(FeatureMatrix, FromWindows) {
  std::vector<LabeledWindow> w(2);
  w[0].gsr_seq = {1, 2, 3};
  w[1].gsr_seq = {4, 5, 9};
  const auto seq = FeatureMatrix::from_windows(w, FeatureLayout::kSequence);
  EXPECT_EQ(seq.cols, 3u);
  EXPECT_EQ(seq.at(1, 2), 9.0);
  const auto st = FeatureMatrix::from_windows(w, FeatureLayout::kStatic);
  EXPECT_EQ(st.cols, 1u);
  EXPECT_DOUBLE_EQ(st.at(1, 0), 6.0);
  const std::size_t pick[] = {1};
  EXPECT_EQ(seq.select(pick).at(0, 0), 4.0);
  EXPECT_THROW(FeatureMatrix::from_rows(FeatureLayout::kSequence, 3, {1, 2}), ShapeError);
  EXPECT_THROW(FeatureMatrix::from_rows(FeatureLayout::kSequence, 1, {NAN}), NumericalError);
}

TEST(Families, NamesRoundTrip) {
  for (Family f : kAllFamilies) EXPECT_EQ(parse_family(family_name(f)), f);
  EXPECT_THROW(parse_family("svm"), ConfigError);
  EXPECT_EQ(parse_layout("static"), FeatureLayout::kStatic);
  EXPECT_THROW(parse_layout("dynamic"), ConfigError);
}

TEST(TrainConfig, ValidateAndWeights) {
  TrainConfig c;
  c.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  const std::vector<int> y{1, 0, 0, 0};
  EXPECT_DOUBLE_EQ(c.resolve_weights(y).w_hypo, 2.0);
  c.use_class_weights = false;
  EXPECT_DOUBLE_EQ(c.resolve_weights(y).w_hypo, 1.0);
  c.class_weights = ClassWeights{5.0, 0.5, 10.0};
  EXPECT_DOUBLE_EQ(c.resolve_weights(y).w_hypo, 5.0);
}

TEST(Losses, WeightedBceByHand) {
  const std::vector<double> p{0.9, 0.2};
  const std::vector<int> y{1, 0};
  const ClassWeights w{2.0, 0.5, 4.0};
  const double expected = -(2.0 * std::log(0.9) + 0.5 * std::log(0.8)) / 2.0;
  EXPECT_NEAR(weighted_bce(p, y, w), expected, 1e-15);
  const std::vector<double> extreme{0.0};
  const std::vector<int> one{1};
  EXPECT_NEAR(weighted_bce(extreme, one, ClassWeights::unit()), -std::log(1e-7), 1e-9);
}

TEST(Losses, Gini) {
  const std::vector<double> c{3, 1};
  EXPECT_DOUBLE_EQ(gini_impurity(c), 1.0 - (0.75 * 0.75 + 0.25 * 0.25));
  EXPECT_DOUBLE_EQ(gini_impurity(std::vector<double>{5, 0}), 0.0);
  EXPECT_THROW(gini_impurity(std::vector<double>{0, 0}), InvalidSplitError);
}

TEST(EarlyStoppingTest, PatienceAndBestRound) {
  EarlyStopping es(2);
  EXPECT_FALSE(es.update(1.0));
  EXPECT_FALSE(es.update(0.5));
  EXPECT_FALSE(es.update(0.6));
  EXPECT_TRUE(es.update(0.7));
  EXPECT_EQ(es.best_round(), 2u);
  EXPECT_DOUBLE_EQ(es.best_loss(), 0.5);
  EXPECT_EQ(es.rounds(), 4u);
}

TEST(LogReg, ObjectiveGradient) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto toy = make_toy(60, 0.3, seed);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    std::vector<double> w(12);
    for (auto& v : w) v = n(rng);
    const double b = n(rng);
    const auto cw = class_weights(toy.y);
    std::vector<double> gw;
    double gb = 0;
    logreg_objective(toy.x, toy.y, cw, 0.01, w, b, &gw, &gb);
    const double h = 1e-5;
    for (std::size_t j = 0; j <= w.size(); ++j) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (j < w.size()) {
        wp[j] += h;
        wm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double num = (logreg_objective(toy.x, toy.y, cw, 0.01, wp, bp, nullptr, nullptr) -
                          logreg_objective(toy.x, toy.y, cw, 0.01, wm, bm, nullptr, nullptr)) /
                         (2 * h);
      EXPECT_LT(testing::relative_error(j < w.size() ? gw[j] : gb, num), 1e-6);
    }
  }
}

TEST(LogReg, LearnsTrendAndSelectsL2) {
  const auto train = make_toy(800, 0.2, 1);
  const auto val = make_toy(300, 0.2, 2);
  auto cfg = fast_config();
  cfg.l2_grid = {0.0, 0.1, 10.0};
  std::vector<double> trace;
  const auto model = fit_logreg(train.x, train.y, cfg, &val.x, val.y, &trace);
  ASSERT_TRUE(model->meta().selected_l2.has_value());
  EXPECT_NE(*model->meta().selected_l2, 10.0);
  EXPECT_FALSE(trace.empty());
  EXPECT_LT(trace.back(), trace.front());
  EXPECT_GT(roc_auc(model->predict_proba(val.x), val.y), 0.9);
}

TEST(Knn, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> coarse(0, 3);  // many exact distance ties
  std::vector<double> values;
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) {
    values.push_back(coarse(rng));
    values.push_back(coarse(rng));
    y.push_back(i % 3 == 0);
  }
  const auto train = FeatureMatrix::from_rows(FeatureLayout::kSequence, 2, values);
  for (int q = 0; q < 30; ++q) {
    const std::vector<double> query{double(coarse(rng)), double(coarse(rng))};
    std::vector<std::pair<double, int>> d;
    for (int i = 0; i < 60; ++i) {
      const double dx = train.at(i, 0) - query[0], dy = train.at(i, 1) - query[1];
      d.push_back({dx * dx + dy * dy, i});
    }
    std::sort(d.begin(), d.end());
    for (std::size_t k : {1u, 5u, 7u}) {
      double hypo = 0;
      for (std::size_t j = 0; j < k; ++j) hypo += y[d[j].second];
      EXPECT_DOUBLE_EQ(knn_score_one(train, y, k, query), hypo / double(k));
    }
  }
  auto cfg = fast_config();
  cfg.knn_k = 100;
  EXPECT_THROW(fit_knn(train, y, cfg), ConfigError);
}

TEST(Trees, BinsAndMidpointThresholds) {
  const std::vector<double> v{1, 2, 2, 3, 10};
  const auto bins = bin_features(v, 5, 1);
  ASSERT_EQ(bins.bins[0].size(), 4u);
  EXPECT_EQ(bins.at(1, 0), bins.at(2, 0));
  EXPECT_EQ(bins.bins[0].code(2.5), bins.at(3, 0));
  EXPECT_EQ(bins.bins[0].code(100.0), 3);

  const std::vector<int> y{0, 0, 0, 1, 1};
  const std::vector<double> w(5, 1.0);
  GiniCriterion crit{y, w};
  const Tree t = grow_tree(bins, {0, 1, 2, 3, 4}, crit, TreeOptions{});
  ASSERT_EQ(t.nodes.size(), 3u);
  EXPECT_DOUBLE_EQ(t.nodes[0].threshold, 2.5);
  EXPECT_EQ(t.predict(std::vector<double>{2.4}), 0.0);
  EXPECT_EQ(t.predict(std::vector<double>{2.6}), 1.0);
  EXPECT_EQ(t.depth(), 1u);
}

TEST(Trees, QuantileBinsCapped) {
  std::vector<double> v(5000);
  std::iota(v.begin(), v.end(), 0.0);
  const auto bins = bin_features(v, 5000, 1, 16);
  EXPECT_LE(bins.bins[0].size(), 16u);
  for (std::size_t b = 1; b < bins.bins[0].size(); ++b) EXPECT_LT(bins.bins[0].hi[b - 1], bins.bins[0].lo[b]);
}

TEST(Trees, NewtonLeafValue) {
  const std::vector<double> v{0, 0, 0, 0};
  const auto bins = bin_features(v, 4, 1);
  const std::vector<double> g{0.5, 0.5, -0.1, 0.3}, h{0.25, 0.25, 0.25, 0.25};
  NewtonCriterion crit{g, h, 1.0, 0.0, 0.3};
  const Tree t = grow_tree(bins, {0, 1, 2, 3}, crit, TreeOptions{});
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_DOUBLE_EQ(t.nodes[0].value, -0.3 * 1.2 / 2.0);
}

TEST(Forest, DeterministicAndProbabilistic) {
  const auto toy = make_toy(500, 0.2, 7);
  const auto cfg = fast_config();
  const auto a = fit_random_forest(toy.x, toy.y, cfg);
  const auto b = fit_random_forest(toy.x, toy.y, cfg);
  EXPECT_EQ(a->trees(), b->trees());
  EXPECT_EQ(a->trees().size(), 20u);
  for (double p : a->predict_proba(toy.x)) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
  for (const auto& t : a->trees()) EXPECT_LE(t.depth(), cfg.max_depth);
  auto other = cfg;
  other.seed = 4;
  EXPECT_NE(fit_random_forest(toy.x, toy.y, other)->trees(), a->trees());
  const auto test = make_toy(300, 0.2, 8);
  EXPECT_GT(roc_auc(a->predict_proba(test.x), test.y), 0.85);
}

TEST(Forest, SingleClassTrainingIsAllowed) {
  auto toy = make_toy(50, 0.0, 1);
  const auto model = fit_random_forest(toy.x, toy.y, fast_config());
  for (double p : model->predict_proba(toy.x)) EXPECT_EQ(p, 0.0);
}

TEST(Gbdt, InitialScoreAndEarlyStop) {
  const std::vector<int> y{1, 0, 0, 0};
  EXPECT_DOUBLE_EQ(gbdt_initial_score(y, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(gbdt_initial_score(y, 1.0), std::log(1.0 / 3.0));
  EXPECT_THROW(gbdt_initial_score(std::vector<int>{0, 0}, 1.0), InsufficientClassError);

  const auto train = make_toy(600, 0.1, 3);
  const auto val = make_toy(200, 0.1, 4);
  auto cfg = fast_config();
  cfg.gbdt_rounds = 300;
  cfg.gbdt_patience = 5;
  const auto m = fit_gbdt(train.x, train.y, cfg, val.x, val.y);
  EXPECT_LE(m->meta().best_epoch, m->meta().epochs_run);
  EXPECT_EQ(m->trees().size(), m->meta().best_epoch);
  EXPECT_GT(roc_auc(m->predict_proba(val.x), val.y), 0.85);
  const auto again = fit_gbdt(train.x, train.y, cfg, val.x, val.y);
  EXPECT_EQ(again->predict_proba(val.x), m->predict_proba(val.x));
}

class NetworkGradient : public ::testing::TestWithParam<std::tuple<Architecture, std::uint64_t>> {};

TEST_P(NetworkGradient, MatchesFiniteDifferences) {
  const auto [arch, seed] = GetParam();
  TrainConfig cfg;
  cfg.mlp_hidden1 = 6;
  cfg.mlp_hidden2 = 4;
  cfg.cnn_channels1 = 3;
  cfg.cnn_channels2 = 4;
  cfg.lstm_hidden = 4;
  cfg.lstm_dense = 3;
  Network net(NetworkSpec::from(arch, 12, cfg), seed);
  testing::jitter_biases(net, seed);
  const auto toy = make_toy(8, 0.5, seed);
  std::vector<double> y(toy.y.begin(), toy.y.end()), w(8, 1.0);
  w[0] = 3.0;
  EXPECT_LT(testing::network_gradient_error(net, toy.x.to_matrix(), y, w), 1e-4);
}

INSTANTIATE_TEST_SUITE_P(
    Archs, NetworkGradient,
    ::testing::Combine(::testing::Values(Architecture::kMlp, Architecture::kCnn,
                                         Architecture::kLstm),
                       ::testing::Values(1, 2)));

TEST(Network, LstmReluVariantGradient) {
  TrainConfig cfg;
  cfg.lstm_hidden = 4;
  cfg.lstm_relu_on_output = true;
  Network net(NetworkSpec::from(Architecture::kLstm, 12, cfg), 9);
  testing::jitter_biases(net, 9);
  EXPECT_EQ(net.params().size(), 5u);
  const auto toy = make_toy(6, 0.5, 9);
  std::vector<double> y(toy.y.begin(), toy.y.end()), w(6, 1.0);
  EXPECT_LT(testing::network_gradient_error(net, toy.x.to_matrix(), y, w), 1e-4);
}

TEST(Network, StaticInputIsReplicated) {
  TrainConfig cfg;
  Network net(NetworkSpec::from(Architecture::kCnn, 1, cfg), 1);
  ad::Matrix x(2, 1);
  x << 0.5, -1.0;
  const auto logits = net.logits(x);
  EXPECT_EQ(logits.rows(), 2);
  EXPECT_THROW(net.logits(ad::Matrix::Zero(2, 5)), ShapeError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ad::Matrix p = ad::Matrix::Constant(1, 2, 1.0);
  ad::Matrix g(1, 2);
  g << 0.5, -2.0;
  AdamState st;
  adam_step(p, g, st, {}, "w");
  EXPECT_NEAR(p(0, 0), 1.0 - 1e-3, 1e-9);
  EXPECT_NEAR(p(0, 1), 1.0 + 1e-3, 1e-9);
  g(0, 0) = NAN;
  EXPECT_THROW(adam_step(p, g, st, {}, "w"), NumericalError);
}

TEST(Neural, FitIsDeterministic) {
  const auto train = make_toy(400, 0.1, 11);
  const auto val = make_toy(100, 0.1, 12);
  auto cfg = fast_config();
  cfg.max_epochs = 3;
  const auto a = fit_mlp(train.x, train.y, cfg, val.x, val.y);
  const auto b = fit_mlp(train.x, train.y, cfg, val.x, val.y);
  EXPECT_EQ(a->predict_proba(val.x), b->predict_proba(val.x));
  EXPECT_GE(a->meta().best_epoch, 1u);
  EXPECT_TRUE(a->meta().balanced_batches);
  EXPECT_EQ(a->meta().weights, "balanced");
}

class Persistence : public ::testing::TestWithParam<Family> {};

TEST_P(Persistence, RoundTripPredictsIdentically) {
  const Family family = GetParam();
  const auto train = make_toy(300, 0.2, 21);
  const auto val = make_toy(80, 0.2, 22);
  auto cfg = fast_config();
  cfg.max_epochs = 2;
  const auto model = fit_model(family, train.x, train.y, cfg, val.x, val.y);
  const std::string bytes = save_model(*model, "abc123");
  EXPECT_EQ(bytes.substr(0, 16), "HYPOGSR-MODEL v1");
  const auto loaded = load_model(bytes, "abc123");
  EXPECT_TRUE(loaded.digest_matches);
  EXPECT_EQ(loaded.model->family(), family);
  EXPECT_EQ(loaded.model->meta(), model->meta());
  EXPECT_EQ(loaded.model->predict_proba(val.x), model->predict_proba(val.x));
  EXPECT_FALSE(load_model(bytes, "other").digest_matches);
  EXPECT_THROW(load_model(bytes.substr(0, bytes.size() - 3)), ParseError);
  EXPECT_THROW(load_model("garbage"), ParseError);
}

INSTANTIATE_TEST_SUITE_P(AllFamilies, Persistence, ::testing::ValuesIn(kAllFamilies),
                         [](const auto& info) { return std::string(family_name(info.param)); });

TEST(Predict, ThresholdAndShapeChecks) {
  const auto train = make_toy(200, 0.3, 1);
  const auto model = fit_knn(train.x, train.y, fast_config());
  const auto preds = predict(*model, train.x, 0.5);
  for (const auto& p : preds)
    EXPECT_EQ(p.predicted_label,
              p.probability_hypo >= 0.5 ? GlycemicLabel::kHypo : GlycemicLabel::kNormo);
  const auto st = make_toy(10, 0.3, 1, FeatureLayout::kStatic);
  EXPECT_THROW(model->predict_proba(st.x), ShapeError);
}

}  // namespace
}  // namespace hypogsr
