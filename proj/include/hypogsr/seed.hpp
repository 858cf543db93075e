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

#ifndef HYPOGSR_SEED_HPP_
#define HYPOGSR_SEED_HPP_

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace hypogsr {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t hash = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

// Stage seeds: derive_seed(master, "split") = splitmix64(master ^ splitmix64(fnv1a64("split"))).
// Every stage of the pipeline draws from its own keyed stream, so re-running one
// stage never shifts the random numbers seen by another.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view stage) noexcept {
  return splitmix64(master ^ splitmix64(fnv1a64(stage)));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(master ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

std::string hex_digest(std::uint64_t value);

}  // namespace hypogsr

#endif  // HYPOGSR_SEED_HPP_
