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

#include "hypogsr/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "hypogsr/error.hpp"
#include "hypogsr/text.hpp"

namespace hypogsr {

std::string_view stage_name(SeriesStage stage) {
  switch (stage) {
    case SeriesStage::kAligned:
      return "aligned";
    case SeriesStage::kMasked:
      return "masked";
    case SeriesStage::kFiltered:
      return "filtered";
    case SeriesStage::kStandardized:
      return "standardized";
  }
  return "unknown";
}

void FilterSpec::validate() const {
  if (order < 1) throw ConfigError("filter order must be >= 1, got " + std::to_string(order));
  if (!(cutoff > 0.0 && cutoff < 0.5))
    throw ConfigError("filter cutoff must lie in (0, 0.5) of the sampling rate, got " +
                      format_double(cutoff));
}

UniformSeries align_to_grid(std::span<const TimedSample> glucose,
                            std::span<const TimedSample> gsr, std::size_t max_gap,
                            std::string subject_id) {
  if (glucose.empty()) throw EmptyChannelError("no glucose samples to define the grid");

  const long period = kGridPeriod.count();
  const long half = period / 2;
  UniformSeries out;
  out.subject_id = std::move(subject_id);
  out.start = glucose.front().timestamp;
  const long span_seconds = (glucose.back().timestamp - out.start).count();
  const std::size_t len = 1 + static_cast<std::size_t>(span_seconds / period);
  out.glucose.assign(len, std::nullopt);
  out.gsr.assign(len, std::nullopt);

  std::vector<long> best_offset(len, half + 1);
  auto offer = [&](std::size_t bin, long offset, double value) {
    if (bin >= len || offset > half || offset >= best_offset[bin]) return;
    best_offset[bin] = offset;
    out.glucose[bin] = value;
  };
  for (const auto& s : glucose) {
    const long d = (s.timestamp - out.start).count();
    if (d < 0) continue;
    const auto k = static_cast<std::size_t>(d / period);
    const long r = d - static_cast<long>(k) * period;
    offer(k, r, s.value);
    offer(k + 1, period - r, s.value);
  }

  std::vector<double> sum(len, 0.0);
  std::vector<std::size_t> count(len, 0);
  for (const auto& s : gsr) {
    const long d = (s.timestamp - out.start).count();
    if (d < 0) continue;
    const auto k = static_cast<std::size_t>(d / period);
    if (k >= len) continue;
    sum[k] += s.value;
    ++count[k];
  }
  for (std::size_t k = 0; k < len; ++k)
    if (count[k] > 0) out.gsr[k] = sum[k] / static_cast<double>(count[k]);

  // Bridge short interior gaps.
  for (std::size_t i = 0; i < len;) {
    if (out.gsr[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < len && !out.gsr[j]) ++j;
    if (i > 0 && j < len && j - i <= max_gap) {
      const double a = *out.gsr[i - 1], b = *out.gsr[j];
      const double steps = static_cast<double>(j - i + 1);
      for (std::size_t m = i; m < j; ++m)
        out.gsr[m] = a + (b - a) * static_cast<double>(m - i + 1) / steps;
    }
    i = j;
  }
  out.stage = SeriesStage::kAligned;
  return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - static_cast<double>(lo));
}

OptionalSeries iqr_mask(const OptionalSeries& values, double k) {
  std::vector<double> present;
  present.reserve(values.size());
  for (const auto& v : values)
    if (v) present.push_back(*v);
  if (present.size() < 4)
    throw InsufficientDataError("IQR masking needs at least 4 values, got " +
                                std::to_string(present.size()));
  std::sort(present.begin(), present.end());
  const double q1 = quantile_sorted(present, 0.25);
  const double q3 = quantile_sorted(present, 0.75);
  const double lower = q1 - k * (q3 - q1);
  const double upper = q3 + k * (q3 - q1);
  OptionalSeries out = values;
  for (auto& v : out)
    if (v && (*v < lower || *v > upper)) v.reset();
  return out;
}

std::vector<Biquad> design_butterworth_lowpass(const FilterSpec& spec) {
  spec.validate();
  const int n = spec.order;
  const double k = std::tan(std::numbers::pi * spec.cutoff);
  const double k2 = k * k;
  std::vector<Biquad> sections;
  // Conjugate prototype pole pairs give s^2 + 2 sin(theta) s + 1.
  for (int i = 1; i <= n / 2; ++i) {
    const double theta = static_cast<double>(2 * i - 1) * std::numbers::pi / (2.0 * n);
    const double damping = 2.0 * std::sin(theta);
    const double d = 1.0 + damping * k + k2;
    sections.push_back({k2 / d, 2.0 * k2 / d, k2 / d, 2.0 * (k2 - 1.0) / d,
                        (1.0 - damping * k + k2) / d});
  }
  if (n % 2 == 1) sections.push_back({k / (1.0 + k), k / (1.0 + k), 0.0, (k - 1.0) / (k + 1.0), 0.0});
  return sections;
}

std::vector<double> sosfilt(std::span<const Biquad> sections, std::span<const double> x,
                            std::optional<double> initial_value) {
  std::vector<double> y(x.begin(), x.end());
  for (const auto& s : sections) {
    double z1 = 0.0, z2 = 0.0;
    if (initial_value) {
      z2 = (s.b2 - s.a2) * *initial_value;
      z1 = (s.b1 - s.a1) * *initial_value + z2;
    }
    for (double& v : y) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
  return y;
}

namespace {

double max_pole_radius(std::span<const Biquad> sections) {
  double r = 0.0;
  for (const auto& s : sections) {
    // Roots of z^2 + a1 z + a2.
    const std::complex<double> disc = std::sqrt(std::complex<double>(s.a1 * s.a1 - 4.0 * s.a2));
    r = std::max({r, std::abs((-s.a1 + disc) / 2.0), std::abs((-s.a1 - disc) / 2.0)});
  }
  return r;
}

// Samples for the slowest mode to fall below double precision.
std::size_t settle_length(std::span<const Biquad> sections) {
  const double r = max_pole_radius(sections);
  if (r <= 0.0) return 1;
  if (r >= 1.0) throw NumericalError("unstable filter section");
  const double len = std::ceil(std::log(1e-17) / std::log(r));
  return static_cast<std::size_t>(std::clamp(len, 1.0, 1e6));
}

}  // namespace

std::vector<double> sosfiltfilt(std::span<const Biquad> sections, std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  const std::size_t odd = std::min(n - 1, 3 * (2 * sections.size() + 1));
  const std::size_t tail = settle_length(sections);

  std::vector<double> ext;
  ext.reserve(n + 2 * (odd + tail));
  const double left = 2.0 * x[0] - x[odd];
  const double right = 2.0 * x[n - 1] - x[n - 1 - odd];
  ext.insert(ext.end(), tail, left);
  for (std::size_t j = odd; j >= 1; --j) ext.push_back(2.0 * x[0] - x[j]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t j = 1; j <= odd; ++j) ext.push_back(2.0 * x[n - 1] - x[n - 1 - j]);
  ext.insert(ext.end(), tail, right);

  auto y = sosfilt(sections, ext, ext.front());
  std::reverse(y.begin(), y.end());
  y = sosfilt(sections, y, y.front());
  std::reverse(y.begin(), y.end());
  const auto first = y.begin() + static_cast<std::ptrdiff_t>(tail + odd);
  return {first, first + static_cast<std::ptrdiff_t>(n)};
}

OptionalSeries butterworth_lowpass(const OptionalSeries& values, const FilterSpec& spec) {
  const auto sections = design_butterworth_lowpass(spec);
  const auto min_len = static_cast<std::size_t>(3 * spec.order);
  OptionalSeries out = values;
  std::vector<double> segment;
  for (std::size_t i = 0; i < values.size();) {
    if (!values[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    segment.clear();
    while (j < values.size() && values[j]) segment.push_back(*values[j++]);
    if (segment.size() >= min_len) {
      const auto filtered = sosfiltfilt(sections, segment);
      for (std::size_t m = 0; m < filtered.size(); ++m) out[i + m] = filtered[m];
    }
    i = j;
  }
  return out;
}

OptionalSeries zscore_per_subject(const OptionalSeries& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values)
    if (v) {
      sum += *v;
      ++n;
    }
  if (n < 2)
    throw InsufficientDataError("z-score needs at least 2 values, got " + std::to_string(n));
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto& v : values)
    if (v) ss += (*v - mean) * (*v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 1e-10 * std::max(1.0, std::abs(mean))))
    throw DegenerateSignalError("GSR is constant (sd = " + format_double(sd) +
                                "), sensor failure suspected");
  OptionalSeries out = values;
  for (auto& v : out)
    if (v) v = (*v - mean) / sd;
  return out;
}

namespace {

void require_stage(const UniformSeries& series, SeriesStage expected, SeriesStage next) {
  if (series.stage != expected)
    throw StageError("cannot move series '" + series.subject_id + "' from stage " +
                     std::string(stage_name(series.stage)) + " to " +
                     std::string(stage_name(next)));
}

}  // namespace

UniformSeries mask_outliers(UniformSeries series, double k) {
  require_stage(series, SeriesStage::kAligned, SeriesStage::kMasked);
  series.gsr = iqr_mask(series.gsr, k);
  series.stage = SeriesStage::kMasked;
  return series;
}

UniformSeries smooth(UniformSeries series, const FilterSpec& spec) {
  require_stage(series, SeriesStage::kMasked, SeriesStage::kFiltered);
  series.gsr = butterworth_lowpass(series.gsr, spec);
  series.stage = SeriesStage::kFiltered;
  return series;
}

UniformSeries standardize(UniformSeries series) {
  require_stage(series, SeriesStage::kFiltered, SeriesStage::kStandardized);
  series.gsr = zscore_per_subject(series.gsr);
  series.stage = SeriesStage::kStandardized;
  return series;
}

UniformSeries preprocess_subject(const SubjectRecord& record, const PreprocessOptions& options) {
  try {
    auto series = align_to_grid(record.glucose, record.gsr, options.max_gap, record.subject_id);
    series = mask_outliers(std::move(series), options.iqr_k);
    series = smooth(std::move(series), options.filter);
    return standardize(std::move(series));
  } catch (Error& e) {
    e.add_context("subject " + record.subject_id);
    throw;
  }
}

std::string write_series_csv(const UniformSeries& series) {
  std::string out = "timestamp,glucose,gsr,stage\n";
  const std::string stage(stage_name(series.stage));
  for (std::size_t i = 0; i < series.size(); ++i) {
    out += format_timestamp(series.start + kGridPeriod * static_cast<long>(i));
    out += ',';
    if (series.glucose[i]) out += format_double(*series.glucose[i]);
    out += ',';
    if (series.gsr[i]) out += format_double(*series.gsr[i]);
    out += ',';
    out += stage;
    out += '\n';
  }
  return out;
}

}  // namespace hypogsr
