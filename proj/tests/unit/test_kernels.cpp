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

#include <random>

#include "hypogsr/error.hpp"
#include "hypogsr/kernels.hpp"

namespace hypogsr {
namespace {

SynthConfig small_synth() {
  SynthConfig cfg;
  cfg.n_subjects = 3;
  cfg.steps_per_subject = 800;
  cfg.seed = 5;
  return cfg;
}

TEST(Kernels, CohortAndPreprocessAgree) {
  const auto a = kernels::serial::generate_cohort(small_synth());
  const auto b = kernels::omp::generate_cohort(small_synth());
  EXPECT_EQ(a.subjects, b.subjects);
  const auto sa = kernels::serial::preprocess_cohort(a, {});
  const auto sb = kernels::omp::preprocess_cohort(a, {});
  ASSERT_EQ(sa.size(), sb.size());
  for (std::size_t i = 0; i < sa.size(); ++i) {
    EXPECT_EQ(sa[i].gsr, sb[i].gsr);
    EXPECT_EQ(sa[i].glucose, sb[i].glucose);
  }
}

TEST(Kernels, KnnAndForestAgree) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n;
  std::vector<double> values(400 * 4), q(50 * 4);
  for (auto& v : values) v = n(rng);
  for (auto& v : q) v = n(rng);
  std::vector<int> y(400);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = values[i * 4] > 0.8;
  const auto train = FeatureMatrix::from_rows(FeatureLayout::kSequence, 4, values);
  const auto queries = FeatureMatrix::from_rows(FeatureLayout::kSequence, 4, q);
  EXPECT_EQ(kernels::serial::knn_scores(train, y, 5, queries),
            kernels::omp::knn_scores(train, y, 5, queries));

  const auto binned = bin_features(values, 400, 4);
  ForestInputs in;
  in.binned = &binned;
  in.labels = y;
  in.weights = class_weights(y);
  in.features_per_node = 2;
  in.seed = 8;
  EXPECT_EQ(kernels::serial::grow_forest(in, 12), kernels::omp::grow_forest(in, 12));
}

TEST(Kernels, BootstrapAgree) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  std::vector<double> s(300);
  std::vector<int> y(300), p(300);
  for (std::size_t i = 0; i < s.size(); ++i) {
    y[i] = u(rng) < 0.3;
    s[i] = 0.4 * y[i] + 0.6 * u(rng);
    p[i] = s[i] >= 0.5;
  }
  BootstrapPlan plan(s, p, y);
  const auto a = kernels::serial::bootstrap_replicates(plan, 4, 64);
  const auto b = kernels::omp::bootstrap_replicates(plan, 4, 64);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].value, b[i].value);
    EXPECT_EQ(a[i].defined, b[i].defined);
  }
}

TEST(Kernels, LowestIndexExceptionWins) {
  for (auto* each : {&kernels::serial::for_each_index, &kernels::omp::for_each_index}) {
    try {
      each(20, [&](std::size_t i) {
        if (i == 7) throw ParseError("seven");
        if (i == 13) throw SchemaError("thirteen");
      });
      FAIL();
    } catch (const ParseError& e) {
      EXPECT_EQ(e.message(), "seven");
    }
  }
}

}  // namespace
}  // namespace hypogsr
