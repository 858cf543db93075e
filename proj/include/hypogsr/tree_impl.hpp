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

#ifndef HYPOGSR_TREE_IMPL_HPP_
#define HYPOGSR_TREE_IMPL_HPP_

#include <algorithm>
#include <numeric>

namespace hypogsr {
namespace tree_detail {

template <typename Criterion>
class Builder {
 public:
  using Stats = typename Criterion::Stats;

  Builder(const BinnedMatrix& x, const Criterion& crit, const TreeOptions& options, Rng* rng,
          std::size_t features_per_node)
      : x_(x), crit_(crit), options_(options), rng_(rng), features_per_node_(features_per_node),
        features_(x.cols) {
    std::iota(features_.begin(), features_.end(), 0);
  }

  Tree build(std::vector<std::uint32_t> samples) {
    Tree tree;
    tree.nodes.emplace_back();
    grow(tree, 0, samples, 0, samples.size(), 0);
    return tree;
  }

 private:
  struct Split {
    std::size_t feature = 0;
    std::size_t last_left_bin = 0;
    double threshold = 0.0;
    double gain = 0.0;
  };

  void grow(Tree& tree, std::size_t node, std::vector<std::uint32_t>& samples, std::size_t begin,
            std::size_t end, std::size_t depth) {
    Stats total{};
    for (std::size_t i = begin; i < end; ++i) total += crit_.stats(samples[i]);
    tree.nodes[node].value = crit_.leaf(total);
    if (depth >= options_.max_depth || end - begin < 2 || crit_.pure(total)) return;

    const auto split = best_split(samples, begin, end, total);
    if (!split) return;

    const auto mid_it = std::stable_partition(
        samples.begin() + static_cast<std::ptrdiff_t>(begin),
        samples.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::uint32_t s) { return x_.at(s, split->feature) <= split->last_left_bin; });
    const auto mid = static_cast<std::size_t>(mid_it - samples.begin());

    const auto left = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    tree.nodes[node].feature = static_cast<std::int32_t>(split->feature);
    tree.nodes[node].threshold = split->threshold;
    tree.nodes[node].left = left;
    tree.nodes[node].right = left + 1;
    grow(tree, static_cast<std::size_t>(left), samples, begin, mid, depth + 1);
    grow(tree, static_cast<std::size_t>(left) + 1, samples, mid, end, depth + 1);
  }

  std::optional<Split> best_split(const std::vector<std::uint32_t>& samples, std::size_t begin,
                                  std::size_t end, const Stats& total) {
    std::size_t n_candidates = x_.cols;
    if (rng_ != nullptr && features_per_node_ > 0 && features_per_node_ < x_.cols) {
      // Partial Fisher-Yates: the first n_candidates entries are the draw.
      std::iota(features_.begin(), features_.end(), 0);
      for (std::size_t i = 0; i < features_per_node_; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, x_.cols - 1);
        std::swap(features_[i], features_[pick(*rng_)]);
      }
      n_candidates = features_per_node_;
      std::sort(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(n_candidates));
    }
    const double parent_score = crit_.score(total);
    std::optional<Split> best;
    for (std::size_t fi = 0; fi < n_candidates; ++fi) {
      const std::size_t f = features_[fi];
      const auto& bins = x_.bins[f];
      hist_.assign(bins.size(), Stats{});
      present_.assign(bins.size(), 0);
      for (std::size_t i = begin; i < end; ++i) {
        const auto b = x_.at(samples[i], f);
        hist_[b] += crit_.stats(samples[i]);
        present_[b] = 1;
      }
      Stats left{};
      std::ptrdiff_t prev = -1;
      for (std::size_t b = 0; b < bins.size(); ++b) {
        if (!present_[b]) continue;
        if (prev >= 0) {
          const Stats right = total - left;
          if (crit_.admissible(left, right)) {
            const double gain = crit_.score(left) + crit_.score(right) - parent_score;
            if (gain > options_.min_gain && (!best || gain > best->gain)) {
              const double lo = bins.hi[static_cast<std::size_t>(prev)];
              const double hi = bins.lo[b];
              double thr = lo + (hi - lo) / 2.0;
              if (!(thr < hi)) thr = lo;
              best = Split{f, static_cast<std::size_t>(prev), thr, gain};
            }
          }
        }
        left += hist_[b];
        prev = static_cast<std::ptrdiff_t>(b);
      }
    }
    return best;
  }

  const BinnedMatrix& x_;
  const Criterion& crit_;
  const TreeOptions& options_;
  Rng* rng_;
  std::size_t features_per_node_;
  std::vector<std::size_t> features_;
  std::vector<Stats> hist_;
  std::vector<char> present_;
};

}  // namespace tree_detail

template <typename Criterion>
Tree grow_tree(const BinnedMatrix& x, std::vector<std::uint32_t> samples, const Criterion& crit,
               const TreeOptions& options, Rng* feature_rng, std::size_t features_per_node) {
  tree_detail::Builder<Criterion> builder(x, crit, options, feature_rng, features_per_node);
  return builder.build(std::move(samples));
}

}  // namespace hypogsr

#endif  // HYPOGSR_TREE_IMPL_HPP_
