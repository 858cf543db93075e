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

#include "hypogsr/kernels.hpp"

#include <exception>

#include "hypogsr/error.hpp"

namespace hypogsr::kernels {

namespace {

void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

template <typename Fn>
void run_serial(std::size_t n, Fn&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

template <typename Fn>
void run_omp(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  rethrow_first(errors);
}

// For loops whose items keep per-thread scratch state.
template <typename Scratch, typename Fn>
void run_omp_scratch(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
  {
    Scratch scratch;
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      try {
        fn(static_cast<std::size_t>(i), scratch);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  }
  rethrow_first(errors);
}

}  // namespace

#define HYPOGSR_KERNEL_DEFS(RUN, RUN_SCRATCH)                                                 \
  std::vector<UniformSeries> preprocess_cohort(const Cohort& cohort,                          \
                                               const PreprocessOptions& options) {            \
    std::vector<UniformSeries> out(cohort.subjects.size());                                   \
    RUN(out.size(), [&](std::size_t i) { out[i] = preprocess_subject(cohort.subjects[i], options); }); \
    return out;                                                                               \
  }                                                                                           \
  Cohort generate_cohort(const SynthConfig& cfg) {                                            \
    cfg.validate();                                                                           \
    Cohort c;                                                                                 \
    c.subjects.resize(cfg.n_subjects);                                                        \
    RUN(cfg.n_subjects,                                                                       \
        [&](std::size_t i) { c.subjects[i] = generate_synthetic_subject(cfg, i); });          \
    return c;                                                                                 \
  }                                                                                           \
  std::vector<double> knn_scores(const FeatureMatrix& train, std::span<const int> labels,     \
                                 std::size_t k, const FeatureMatrix& queries) {               \
    if (queries.cols != train.cols) throw ShapeError("knn query width differs from training"); \
    std::vector<double> out(queries.rows);                                                    \
    RUN(queries.rows,                                                                         \
        [&](std::size_t i) { out[i] = knn_score_one(train, labels, k, queries.row(i)); });    \
    return out;                                                                               \
  }                                                                                           \
  std::vector<Tree> grow_forest(const ForestInputs& inputs, std::size_t n_trees) {            \
    std::vector<Tree> out(n_trees);                                                           \
    RUN(n_trees, [&](std::size_t i) { out[i] = grow_forest_tree(inputs, i); });               \
    return out;                                                                               \
  }                                                                                           \
  std::vector<BootstrapPlan::Replicate> bootstrap_replicates(                                 \
      const BootstrapPlan& plan, std::uint64_t seed, std::size_t iterations) {                \
    std::vector<BootstrapPlan::Replicate> out(iterations);                                    \
    RUN_SCRATCH(iterations, [&](std::size_t i, std::vector<std::uint32_t>& scratch) {         \
      out[i] = plan.replicate(seed, i, scratch);                                              \
    });                                                                                       \
    return out;                                                                               \
  }                                                                                           \
  void for_each_index(std::size_t n, const std::function<void(std::size_t)>& fn) { RUN(n, fn); }

namespace serial {
namespace {
template <typename Fn>
void run_serial_scratch(std::size_t n, Fn&& fn) {
  std::vector<std::uint32_t> scratch;
  for (std::size_t i = 0; i < n; ++i) fn(i, scratch);
}
}  // namespace
HYPOGSR_KERNEL_DEFS(run_serial, run_serial_scratch)
}  // namespace serial

namespace omp {
namespace {
template <typename Fn>
void run_omp_vec_scratch(std::size_t n, Fn&& fn) {
  run_omp_scratch<std::vector<std::uint32_t>>(n, std::forward<Fn>(fn));
}
}  // namespace
HYPOGSR_KERNEL_DEFS(run_omp, run_omp_vec_scratch)
}  // namespace omp

#undef HYPOGSR_KERNEL_DEFS

}  // namespace hypogsr::kernels
