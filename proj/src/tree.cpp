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

#include "hypogsr/tree.hpp"

#include <algorithm>
#include <cmath>

#include "hypogsr/error.hpp"

namespace hypogsr {

double Tree::predict(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left
                                                                                         : n.right);
  }
  return nodes[i].value;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::uint8_t FeatureBins::code(double v) const {
  return static_cast<std::uint8_t>(std::lower_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
}

BinnedMatrix bin_features(std::span<const double> values, std::size_t rows, std::size_t cols,
                          std::size_t max_bins) {
  if (values.size() != rows * cols) throw ShapeError("bin_features: value count mismatch");
  if (max_bins < 2 || max_bins > 256) throw ConfigError("max_bins must lie in [2, 256]");
  BinnedMatrix out;
  out.rows = rows;
  out.cols = cols;
  out.codes.resize(rows * cols);
  out.bins.resize(cols);
  std::vector<double> column(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) column[r] = values[r * cols + c];
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    auto& fb = out.bins[c];
    if (distinct.size() <= max_bins) {
      fb.cuts.assign(distinct.begin(), distinct.empty() ? distinct.end() : distinct.end() - 1);
    } else {
      for (std::size_t i = 1; i < max_bins; ++i) {
        const double q = sorted[i * rows / max_bins];
        if (fb.cuts.empty() || q > fb.cuts.back()) fb.cuts.push_back(q);
      }
      if (!fb.cuts.empty() && fb.cuts.back() >= sorted.back()) fb.cuts.pop_back();
    }
    const std::size_t n_bins = fb.cuts.size() + 1;
    fb.lo.assign(n_bins, std::numeric_limits<double>::infinity());
    fb.hi.assign(n_bins, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < rows; ++r) {
      const auto b = fb.code(column[r]);
      out.codes[c * rows + r] = b;
      fb.lo[b] = std::min(fb.lo[b], column[r]);
      fb.hi[b] = std::max(fb.hi[b], column[r]);
    }
  }
  return out;
}

}  // namespace hypogsr
