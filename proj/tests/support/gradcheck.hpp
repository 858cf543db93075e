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

#ifndef HYPOGSR_TESTS_GRADCHECK_HPP_
#define HYPOGSR_TESTS_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "hypogsr/autodiff.hpp"
#include "hypogsr/models.hpp"

namespace hypogsr::testing {

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

// Central differences over every entry of every parameter. `loss` must leave
// the parameter values untouched and not depend on their grads.
inline double max_param_error(std::vector<ad::Parameter>& params,
                              const std::function<double()>& loss,
                              const std::vector<ad::Matrix>& analytic, double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& value = params[p].value;
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      const double orig = value.data()[i];
      value.data()[i] = orig + h;
      const double up = loss();
      value.data()[i] = orig - h;
      const double down = loss();
      value.data()[i] = orig;
      worst = std::max(worst, relative_error(analytic[p].data()[i], (up - down) / (2.0 * h)));
    }
  }
  return worst;
}

// Freshly initialised biases are exactly zero, which can park a ReLU input on
// its kink; checks run at a point with small non-zero biases instead.
inline void jitter_biases(Network& net, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (auto& p : net.params()) {
    if (p.name.size() < 2 || p.name.compare(p.name.size() - 2, 2, "_b") != 0) continue;
    for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] += u(rng);
  }
}

// Gradient check of a full network's weighted BCE on (x, y, w).
inline double network_gradient_error(Network& net, const ad::Matrix& x,
                                     const std::vector<double>& y,
                                     const std::vector<double>& w) {
  net.loss(x, y, w, false, 0, true);
  std::vector<ad::Matrix> analytic;
  for (const auto& p : net.params()) analytic.push_back(p.grad);
  return max_param_error(net.params(), [&] { return net.loss(x, y, w, false, 0, false); },
                         analytic);
}

}  // namespace hypogsr::testing

#endif  // HYPOGSR_TESTS_GRADCHECK_HPP_
