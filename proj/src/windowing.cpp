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

#include "hypogsr/windowing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "hypogsr/error.hpp"
#include "hypogsr/text.hpp"

namespace hypogsr {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

GlycemicLabel label_glucose(double glucose_mg_dl, double threshold) {
  if (!std::isfinite(glucose_mg_dl) || glucose_mg_dl <= 0.0)
    throw InvalidGlucoseError("glucose must be finite and positive, got " +
                              format_double(glucose_mg_dl));
  return glucose_mg_dl < threshold ? GlycemicLabel::kHypo : GlycemicLabel::kNormo;
}

std::vector<LabeledWindow> make_windows(const UniformSeries& series, const WindowOptions& options) {
  if (series.stage != SeriesStage::kStandardized)
    throw StageError("windows need a standardized series, '" + series.subject_id + "' is " +
                     std::string(stage_name(series.stage)));
  if (options.width < 1 || options.stride < 1)
    throw ConfigError("window width and stride must be >= 1");
  std::vector<LabeledWindow> out;
  const std::size_t n = series.size();
  const std::size_t w = options.width;
  for (std::size_t s = 0; s + w <= n; s += options.stride) {
    const auto& final_glucose = series.glucose[s + w - 1];
    if (!final_glucose) continue;
    bool complete = true;
    for (std::size_t i = s; i < s + w && complete; ++i) complete = series.gsr[i].has_value();
    if (!complete) continue;
    LabeledWindow win;
    win.subject_id = series.subject_id;
    win.start_index = s;
    win.gsr_seq.reserve(w);
    for (std::size_t i = s; i < s + w; ++i) win.gsr_seq.push_back(*series.gsr[i]);
    win.glucose_final = *final_glucose;
    win.label = label_glucose(*final_glucose, options.hypo_threshold);
    out.push_back(std::move(win));
  }
  return out;
}

double static_feature(const LabeledWindow& window) {
  double sum = 0.0;
  for (double v : window.gsr_seq) sum += v;
  return sum / static_cast<double>(window.gsr_seq.size());
}

std::vector<int> binary_labels(std::span<const LabeledWindow> windows) {
  std::vector<int> y(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) y[i] = to_binary(windows[i].label);
  return y;
}

namespace {

struct Block {
  std::vector<std::size_t> members;
  std::array<std::size_t, 2> class_count{0, 0};  // normo, hypo
};

}  // namespace

SplitAssignment stratified_split(std::span<const LabeledWindow> windows,
                                 const SplitOptions& options, std::uint64_t seed) {
  const auto& f = options.fractions;
  if (std::any_of(f.begin(), f.end(), [](double x) { return !(x >= 0.0); }) ||
      std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9)
    throw ConfigError("split fractions must be non-negative and sum to 1");
  if (options.block_windows < 1) throw ConfigError("block_windows must be >= 1");

  std::array<std::size_t, 2> totals{0, 0};
  for (const auto& w : windows) ++totals[to_binary(w.label)];
  if (totals[0] < 10 || totals[1] < 10)
    throw InsufficientClassError("stratified split needs >= 10 windows per class, got " +
                                 std::to_string(totals[1]) + " hypo and " +
                                 std::to_string(totals[0]) + " normo");

  // Group by subject in order of first appearance.
  std::vector<std::string> subject_order;
  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    auto [it, inserted] = by_subject.try_emplace(windows[i].subject_id);
    if (inserted) subject_order.push_back(windows[i].subject_id);
    it->second.push_back(i);
  }

  SplitAssignment result;
  result.seed = seed;
  std::vector<Block> blocks;
  for (const auto& subject : subject_order) {
    auto& members = by_subject[subject];
    std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return windows[a].start_index < windows[b].start_index;
    });
    Block current;
    std::size_t current_last = 0;
    bool have_closed = false;
    std::size_t closed_last = 0;
    auto close = [&] {
      if (current.members.empty()) return;
      closed_last = current_last;
      have_closed = true;
      blocks.push_back(std::move(current));
      current = Block{};
    };
    for (std::size_t idx : members) {
      const std::size_t s = windows[idx].start_index;
      const std::size_t w = windows[idx].width();
      if (current.members.empty()) {
        if (have_closed && s < closed_last + w) {
          result.discarded.push_back(idx);
          continue;
        }
      } else if (s >= current_last + w) {
        close();
      } else if (current.members.size() >= options.block_windows) {
        close();
        result.discarded.push_back(idx);
        continue;
      }
      current.members.push_back(idx);
      ++current.class_count[to_binary(windows[idx].label)];
      current_last = s;
    }
    close();
  }

  std::array<std::size_t, 2> usable{0, 0};
  for (const auto& b : blocks) {
    usable[0] += b.class_count[0];
    usable[1] += b.class_count[1];
    result.max_block_windows = std::max(result.max_block_windows, b.members.size());
  }
  result.n_blocks = blocks.size();

  // Shuffle, then hand out hypo-rich blocks first and, among equals, large
  // blocks before small ones so the tail can fill gaps; each block goes to the
  // split with the largest relative deficit, each class weighted by the
  // block's share of it.
  std::vector<std::size_t> order(blocks.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (blocks[a].class_count[1] != blocks[b].class_count[1])
      return blocks[a].class_count[1] > blocks[b].class_count[1];
    return blocks[a].members.size() > blocks[b].members.size();
  });

  std::array<std::array<double, 2>, 3> assigned{};
  std::array<std::vector<std::size_t>*, 3> targets{&result.train, &result.val, &result.test};
  for (std::size_t bi : order) {
    const auto& block = blocks[bi];
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < 3; ++s) {
      if (f[s] <= 0.0) continue;
      double score = 0.0;
      for (int c = 0; c < 2; ++c) {
        if (usable[c] == 0) continue;
        const double total = static_cast<double>(usable[c]);
        const double target = f[s] * total;
        score += static_cast<double>(block.class_count[c]) / total * (target - assigned[s][c]) /
                 target;
      }
      if (score > best_score) {
        best_score = score;
        best = s;
      }
    }
    for (int c = 0; c < 2; ++c) assigned[best][c] += static_cast<double>(block.class_count[c]);
    targets[best]->insert(targets[best]->end(), block.members.begin(), block.members.end());
  }
  for (auto* t : targets) std::sort(t->begin(), t->end());
  std::sort(result.discarded.begin(), result.discarded.end());
  return result;
}

ClassWeights class_weights(std::span<const int> labels) {
  std::size_t hypo = 0;
  for (int y : labels) hypo += y == 1 ? 1 : 0;
  const std::size_t normo = labels.size() - hypo;
  if (hypo == 0 || normo == 0)
    throw InsufficientClassError("class weights need both classes, got " + std::to_string(hypo) +
                                 " hypo and " + std::to_string(normo) + " normo");
  const double n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(hypo)), n / (2.0 * static_cast<double>(normo)),
          static_cast<double>(normo) / static_cast<double>(hypo)};
}

BalancedBatchSampler::BalancedBatchSampler(std::span<const int> labels, std::size_t batch_size,
                                           double min_minority_fraction, std::uint64_t seed)
    : batch_size_(batch_size), rng_(seed) {
  if (!(min_minority_fraction >= 0.0 && min_minority_fraction < 1.0))
    throw ConfigError("min_minority_fraction must lie in [0, 1), got " +
                      format_double(min_minority_fraction));
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i] == 1 ? 1 : 0].push_back(i);
  if (by_class[0].empty() || by_class[1].empty())
    throw InsufficientClassError("balanced batches need both classes in the training set");
  minority_label_ = by_class[1].size() <= by_class[0].size() ? 1 : 0;
  minority_ = std::move(by_class[minority_label_]);
  majority_ = std::move(by_class[1 - minority_label_]);
  minority_per_batch_ = static_cast<std::size_t>(
      std::floor(static_cast<double>(batch_size) * min_minority_fraction));
  if (minority_per_batch_ >= batch_size)
    throw ConfigError("min_minority_fraction leaves no room for majority windows");
}

std::vector<std::vector<std::size_t>> BalancedBatchSampler::next_epoch() {
  std::shuffle(majority_.begin(), majority_.end(), rng_);
  const std::size_t per_batch = batch_size_ - minority_per_batch_;
  std::uniform_int_distribution<std::size_t> pick(0, minority_.size() - 1);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < majority_.size(); i += per_batch) {
    const std::size_t end = std::min(majority_.size(), i + per_batch);
    std::vector<std::size_t> batch(majority_.begin() + static_cast<std::ptrdiff_t>(i),
                                   majority_.begin() + static_cast<std::ptrdiff_t>(end));
    for (std::size_t m = 0; m < minority_per_batch_; ++m) batch.push_back(minority_[pick(rng_)]);
    batches.push_back(std::move(batch));
  }
  return batches;
}

ShuffledBatchSampler::ShuffledBatchSampler(std::size_t n, std::size_t batch_size,
                                           std::uint64_t seed)
    : order_(n), batch_size_(batch_size), rng_(seed) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  std::iota(order_.begin(), order_.end(), 0);
}

std::vector<std::vector<std::size_t>> ShuffledBatchSampler::next_epoch() {
  std::shuffle(order_.begin(), order_.end(), rng_);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < order_.size(); i += batch_size_) {
    const std::size_t end = std::min(order_.size(), i + batch_size_);
    batches.emplace_back(order_.begin() + static_cast<std::ptrdiff_t>(i),
                         order_.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::string write_windows_csv(std::span<const LabeledWindow> windows) {
  std::string out = "subject_id,start_index";
  const std::size_t w = windows.empty() ? 0 : windows.front().width();
  for (std::size_t i = 0; i < w; ++i) out += ",gsr_" + std::to_string(i);
  out += ",glucose_final,label\n";
  for (const auto& win : windows) {
    out += win.subject_id;
    out += ',';
    out += std::to_string(win.start_index);
    for (double v : win.gsr_seq) {
      out += ',';
      out += format_double(v);
    }
    out += ',';
    out += format_double(win.glucose_final);
    out += win.label == GlycemicLabel::kHypo ? ",hypo\n" : ",normo\n";
  }
  return out;
}

std::vector<LabeledWindow> read_windows_csv(std::string_view bytes) {
  const auto lines = split_lines(bytes);
  if (lines.empty()) throw SchemaError("window CSV has no header");
  const auto header = split_csv_row(lines.front());
  if (header.size() < 5) throw SchemaError("window CSV header too short");
  const std::size_t width = header.size() - 4;
  std::vector<LabeledWindow> out;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const auto cells = split_csv_row(lines[li]);
    if (cells.size() != header.size())
      throw SchemaError("window CSV line " + std::to_string(li + 1) + " has " +
                        std::to_string(cells.size()) + " cells");
    LabeledWindow w;
    w.subject_id = cells[0];
    const auto start = parse_double(cells[1]);
    if (!start) throw SchemaError("window CSV line " + std::to_string(li + 1) + ": bad start");
    w.start_index = static_cast<std::size_t>(*start);
    for (std::size_t i = 0; i < width; ++i) {
      const auto v = parse_double(cells[2 + i]);
      if (!v) throw SchemaError("window CSV line " + std::to_string(li + 1) + ": bad value");
      w.gsr_seq.push_back(*v);
    }
    const auto g = parse_double(cells[2 + width]);
    if (!g) throw SchemaError("window CSV line " + std::to_string(li + 1) + ": bad glucose");
    w.glucose_final = *g;
    w.label = trim(cells[3 + width]) == "hypo" ? GlycemicLabel::kHypo : GlycemicLabel::kNormo;
    out.push_back(std::move(w));
  }
  return out;
}

namespace {

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T get(std::string_view& in) {
  if (in.size() < sizeof(T)) throw ParseError("truncated window cache");
  T value;
  std::memcpy(&value, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return value;
}

constexpr std::string_view kWindowMagic = "HGSRWIN1";

}  // namespace

std::string encode_windows(std::span<const LabeledWindow> windows) {
  std::string out(kWindowMagic);
  put<std::uint64_t>(out, windows.size());
  for (const auto& w : windows) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(w.subject_id.size()));
    out += w.subject_id;
    put<std::uint64_t>(out, w.start_index);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(w.gsr_seq.size()));
    for (double v : w.gsr_seq) put<double>(out, v);
    put<double>(out, w.glucose_final);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(w.label));
  }
  return out;
}

std::vector<LabeledWindow> decode_windows(std::string_view in) {
  if (in.substr(0, kWindowMagic.size()) != kWindowMagic) throw ParseError("not a window cache");
  in.remove_prefix(kWindowMagic.size());
  const auto n = get<std::uint64_t>(in);
  std::vector<LabeledWindow> out(n);
  for (auto& w : out) {
    const auto id_len = get<std::uint32_t>(in);
    if (in.size() < id_len) throw ParseError("truncated window cache");
    w.subject_id = std::string(in.substr(0, id_len));
    in.remove_prefix(id_len);
    w.start_index = get<std::uint64_t>(in);
    w.gsr_seq.resize(get<std::uint32_t>(in));
    for (double& v : w.gsr_seq) v = get<double>(in);
    w.glucose_final = get<double>(in);
    w.label = static_cast<GlycemicLabel>(get<std::uint8_t>(in));
  }
  return out;
}

std::uint64_t windows_digest(std::span<const LabeledWindow> windows) {
  return fnv1a64(encode_windows(windows));
}

}  // namespace hypogsr
