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

#ifndef HYPOGSR_DSP_HPP_
#define HYPOGSR_DSP_HPP_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hypogsr/ingest.hpp"

namespace hypogsr {

using OptionalSeries = std::vector<std::optional<double>>;

inline constexpr std::chrono::seconds kGridPeriod{300};

// Stages only move forward, in this order.
enum class SeriesStage { kAligned = 0, kMasked = 1, kFiltered = 2, kStandardized = 3 };
std::string_view stage_name(SeriesStage stage);

struct UniformSeries {
  std::string subject_id;
  Timestamp start{};
  OptionalSeries glucose;  // mg/dL, never transformed
  OptionalSeries gsr;      // microsiemens until standardized
  SeriesStage stage = SeriesStage::kAligned;

  std::size_t size() const { return glucose.size(); }
};

struct FilterSpec {
  int order = 2;
  double cutoff = 0.1;  // fraction of the sampling rate, in (0, 0.5)

  void validate() const;
};

struct PreprocessOptions {
  FilterSpec filter;
  std::size_t max_gap = 3;  // grid steps bridged by linear interpolation
  double iqr_k = 1.5;
};

// Glucose defines the grid (anchor = first glucose timestamp, 5-minute period).
// GSR bins hold the mean of samples in [bin, bin + 5min); interior gaps of at
// most `max_gap` bins are linearly interpolated. Glucose bins take the CGM
// reading nearest the bin start within +-2.5 minutes.
UniformSeries align_to_grid(std::span<const TimedSample> glucose,
                            std::span<const TimedSample> gsr, std::size_t max_gap,
                            std::string subject_id = {});

// Linear-interpolation quantile on sorted data, position p*(n-1).
double quantile_sorted(std::span<const double> sorted, double p);

// Values outside [Q1 - k*IQR, Q3 + k*IQR] become missing.
OptionalSeries iqr_mask(const OptionalSeries& values, double k = 1.5);

// One second-order section, transposed direct form II, a0 == 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
};

// Cascaded sections of a digital Butterworth low-pass: analog prototype,
// pre-warped cutoff, bilinear transform. An odd order adds a first-order
// section (b2 = a2 = 0).
std::vector<Biquad> design_butterworth_lowpass(const FilterSpec& spec);

// Single causal pass. `initial_value` seeds every section at the steady state
// of a constant input of that value; nullopt starts from rest.
std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x,
                            std::optional<double> initial_value = std::nullopt);

// Forward-backward (zero-phase) filtering of one contiguous segment. The
// segment is extended at both ends (odd reflection, then a constant run long
// enough for the slowest pole to decay) so the result does not depend on the
// direction of the first pass.
std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x);

// Each maximal non-missing run is filtered on its own; runs shorter than
// 3*order pass through.
OptionalSeries butterworth_lowpass(const OptionalSeries& values, const FilterSpec& spec);

// (x - mean) / population sd over the non-missing entries.
OptionalSeries zscore_per_subject(const OptionalSeries& values);

// Stage-advancing wrappers over UniformSeries. GSR only; glucose stays raw.
UniformSeries mask_outliers(UniformSeries series, double k);
UniformSeries smooth(UniformSeries series, const FilterSpec& spec);
UniformSeries standardize(UniformSeries series);

// align -> IQR mask -> low-pass -> z-score. Errors carry the subject id.
UniformSeries preprocess_subject(const SubjectRecord& record, const PreprocessOptions& options);

// `timestamp,glucose,gsr,stage`, empty cells for missing values.
std::string write_series_csv(const UniformSeries& series);

}  // namespace hypogsr

#endif  // HYPOGSR_DSP_HPP_
