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

#ifndef HYPOGSR_TREE_HPP_
#define HYPOGSR_TREE_HPP_

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "hypogsr/seed.hpp"

namespace hypogsr {

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;     // go left when x <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at 0

  double predict(std::span<const double> row) const;
  std::size_t depth() const;
  friend bool operator==(const Tree&, const Tree&) = default;
};

// Per-feature quantization into at most max_bins bins: one bin per distinct
// value when there are few enough, else quantile cut points. Each bin keeps the
// smallest and largest training value it received.
struct FeatureBins {
  std::vector<double> cuts;  // bin b holds v <= cuts[b]; the last bin is open
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t size() const { return lo.size(); }
  std::uint8_t code(double v) const;
};

struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> codes;  // column-major
  std::vector<FeatureBins> bins;

  std::uint8_t at(std::size_t r, std::size_t c) const { return codes[c * rows + r]; }
};

// values: row-major rows x cols.
BinnedMatrix bin_features(std::span<const double> values, std::size_t rows, std::size_t cols,
                          std::size_t max_bins = 255);

struct TreeOptions {
  std::size_t max_depth = 6;
  double min_gain = 1e-12;
};

// Split scores take the form score(L) + score(R) - score(parent).
struct GiniCriterion {
  struct Stats {
    double pos = 0.0;
    double neg = 0.0;
    Stats& operator+=(const Stats& o) {
      pos += o.pos;
      neg += o.neg;
      return *this;
    }
    Stats operator-(const Stats& o) const { return {pos - o.pos, neg - o.neg}; }
  };

  std::span<const int> labels;
  std::span<const double> weights;

  Stats stats(std::size_t i) const {
    return labels[i] == 1 ? Stats{weights[i], 0.0} : Stats{0.0, weights[i]};
  }
  static double score(const Stats& s) {
    const double w = s.pos + s.neg;
    return w > 0.0 ? (s.pos * s.pos + s.neg * s.neg) / w : 0.0;
  }
  static bool admissible(const Stats& left, const Stats& right) {
    return left.pos + left.neg > 0.0 && right.pos + right.neg > 0.0;
  }
  static bool pure(const Stats& s) { return s.pos == 0.0 || s.neg == 0.0; }
  static double leaf(const Stats& s) {
    const double w = s.pos + s.neg;
    return w > 0.0 ? s.pos / w : 0.0;
  }
};

struct NewtonCriterion {
  struct Stats {
    double g = 0.0;
    double h = 0.0;
    Stats& operator+=(const Stats& o) {
      g += o.g;
      h += o.h;
      return *this;
    }
    Stats operator-(const Stats& o) const { return {g - o.g, h - o.h}; }
  };

  std::span<const double> grad;
  std::span<const double> hess;
  double lambda = 1.0;
  double min_child_weight = 1.0;
  double eta = 0.1;

  Stats stats(std::size_t i) const { return {grad[i], hess[i]}; }
  double score(const Stats& s) const { return s.g * s.g / (s.h + lambda); }
  bool admissible(const Stats& left, const Stats& right) const {
    return left.h >= min_child_weight && right.h >= min_child_weight;
  }
  static bool pure(const Stats&) { return false; }
  double leaf(const Stats& s) const { return -eta * s.g / (s.h + lambda); }
};

// Grows one tree over `samples` (repeats allowed through weights, not
// duplicates). With a feature RNG, each node draws `features_per_node`
// candidates; otherwise every feature is tried.
template <typename Criterion>
Tree grow_tree(const BinnedMatrix& x, std::vector<std::uint32_t> samples, const Criterion& crit,
               const TreeOptions& options, Rng* feature_rng = nullptr,
               std::size_t features_per_node = 0);

}  // namespace hypogsr

#include "hypogsr/tree_impl.hpp"

#endif  // HYPOGSR_TREE_HPP_
