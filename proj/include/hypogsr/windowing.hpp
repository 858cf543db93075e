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

#ifndef HYPOGSR_WINDOWING_HPP_
#define HYPOGSR_WINDOWING_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hypogsr/dsp.hpp"
#include "hypogsr/seed.hpp"

namespace hypogsr {

enum class GlycemicLabel : std::uint8_t { kNormo = 0, kHypo = 1 };

inline constexpr double kHypoThresholdMgDl = 70.0;

// Hypo iff g < threshold. Throws InvalidGlucoseError for g <= 0 or non-finite g.
GlycemicLabel label_glucose(double glucose_mg_dl, double threshold = kHypoThresholdMgDl);

inline int to_binary(GlycemicLabel label) { return label == GlycemicLabel::kHypo ? 1 : 0; }

struct LabeledWindow {
  std::string subject_id;
  std::size_t start_index = 0;
  std::vector<double> gsr_seq;  // standardized GSR, `width` entries
  double glucose_final = 0.0;   // mg/dL at the last step
  GlycemicLabel label = GlycemicLabel::kNormo;

  std::size_t width() const { return gsr_seq.size(); }
  friend bool operator==(const LabeledWindow&, const LabeledWindow&) = default;
};

struct WindowOptions {
  std::size_t width = 12;
  std::size_t stride = 1;
  double hypo_threshold = kHypoThresholdMgDl;
};

// Windows whose GSR entries and final glucose are all present. Requires a
// standardized series.
std::vector<LabeledWindow> make_windows(const UniformSeries& series,
                                        const WindowOptions& options = {});

double static_feature(const LabeledWindow& window);

std::vector<int> binary_labels(std::span<const LabeledWindow> windows);

struct SplitOptions {
  std::array<double, 3> fractions{0.8, 0.1, 0.1};  // train, validation, test
  // Target windows per leakage block; consecutive blocks of a subject are
  // separated by width-1 discarded windows.
  std::size_t block_windows = 96;
};

struct SplitAssignment {
  std::vector<std::size_t> train, val, test;  // indices into the input, ascending
  std::vector<std::size_t> discarded;         // guard windows between blocks
  std::uint64_t seed = 0;
  std::size_t n_blocks = 0;
  std::size_t max_block_windows = 0;
};

// Per-subject contiguous blocks sharing no grid index with any other block,
// handed out by a seeded deficit round-robin that tracks both the split
// fractions and the class balance.
SplitAssignment stratified_split(std::span<const LabeledWindow> windows,
                                 const SplitOptions& options, std::uint64_t seed);

struct ClassWeights {
  double w_hypo = 1.0;
  double w_normo = 1.0;
  double scale_pos_weight = 1.0;

  static ClassWeights unit() { return {}; }
  double weight(int label) const { return label == 1 ? w_hypo : w_normo; }
};

// w_c = N / (2 N_c); scale_pos_weight = N_normo / N_hypo.
ClassWeights class_weights(std::span<const int> labels);

// Majority windows once per epoch in shuffled order, topped up in every batch
// with floor(batch_size * min_minority_fraction) minority windows drawn with
// replacement. Only ever yields indices of real windows.
class BalancedBatchSampler {
 public:
  BalancedBatchSampler(std::span<const int> labels, std::size_t batch_size,
                       double min_minority_fraction, std::uint64_t seed);

  std::vector<std::vector<std::size_t>> next_epoch();

  int minority_label() const { return minority_label_; }
  std::size_t minority_per_batch() const { return minority_per_batch_; }

 private:
  std::vector<std::size_t> majority_;
  std::vector<std::size_t> minority_;
  std::size_t batch_size_;
  std::size_t minority_per_batch_;
  int minority_label_;
  Rng rng_;
};

// Plain shuffled batches over every index, used when balancing is off.
class ShuffledBatchSampler {
 public:
  ShuffledBatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed);
  std::vector<std::vector<std::size_t>> next_epoch();

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  Rng rng_;
};

// `subject_id,start_index,gsr_0..gsr_{w-1},glucose_final,label`
std::string write_windows_csv(std::span<const LabeledWindow> windows);
std::vector<LabeledWindow> read_windows_csv(std::string_view bytes);

// Compact little-endian binary form used by the window cache.
std::string encode_windows(std::span<const LabeledWindow> windows);
std::vector<LabeledWindow> decode_windows(std::string_view bytes);

// FNV-1a over the encoded form.
std::uint64_t windows_digest(std::span<const LabeledWindow> windows);

}  // namespace hypogsr

#endif  // HYPOGSR_WINDOWING_HPP_
