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

#ifndef HYPOGSR_KERNELS_HPP_
#define HYPOGSR_KERNELS_HPP_

// Data-parallel loops in two flavours. `serial` is the reference; `omp`
// spreads the same per-item work over OpenMP threads and must return
// identical results. Exceptions from items are rethrown after the loop,
// lowest index first.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hypogsr/dsp.hpp"
#include "hypogsr/eval.hpp"
#include "hypogsr/ingest.hpp"
#include "hypogsr/models.hpp"

namespace hypogsr::kernels {

#define HYPOGSR_KERNEL_DECLS                                                                 \
  std::vector<UniformSeries> preprocess_cohort(const Cohort& cohort,                         \
                                               const PreprocessOptions& options);            \
  Cohort generate_cohort(const SynthConfig& cfg);                                            \
  std::vector<double> knn_scores(const FeatureMatrix& train, std::span<const int> labels,    \
                                 std::size_t k, const FeatureMatrix& queries);               \
  std::vector<Tree> grow_forest(const ForestInputs& inputs, std::size_t n_trees);            \
  std::vector<BootstrapPlan::Replicate> bootstrap_replicates(                                \
      const BootstrapPlan& plan, std::uint64_t seed, std::size_t iterations);                \
  void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn);

namespace serial {
HYPOGSR_KERNEL_DECLS
}  // namespace serial

namespace omp {
HYPOGSR_KERNEL_DECLS
}  // namespace omp

#undef HYPOGSR_KERNEL_DECLS

}  // namespace hypogsr::kernels

#endif  // HYPOGSR_KERNELS_HPP_
