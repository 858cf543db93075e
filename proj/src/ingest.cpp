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

#include "hypogsr/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "hypogsr/error.hpp"
#include "hypogsr/seed.hpp"
#include "hypogsr/text.hpp"

namespace hypogsr {
namespace {

using namespace std::chrono;

bool read_digits(std::string_view s, std::size_t pos, std::size_t len, int* out) {
  if (pos + len > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  *out = v;
  return true;
}

std::optional<Timestamp> make_timestamp(int y, int mo, int d, int h, int mi, int sec) {
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

// DD-MM-YYYY HH:MM:SS
std::optional<Timestamp> parse_ohio(std::string_view s) {
  if (s.size() != 19 || s[2] != '-' || s[5] != '-' || s[10] != ' ' || s[13] != ':' ||
      s[16] != ':')
    return std::nullopt;
  int d, mo, y, h, mi, sec;
  if (!read_digits(s, 0, 2, &d) || !read_digits(s, 3, 2, &mo) || !read_digits(s, 6, 4, &y) ||
      !read_digits(s, 11, 2, &h) || !read_digits(s, 14, 2, &mi) || !read_digits(s, 17, 2, &sec))
    return std::nullopt;
  return make_timestamp(y, mo, d, h, mi, sec);
}

// YYYY-MM-DDTHH:MM:SS[Z]
std::optional<Timestamp> parse_iso(std::string_view s) {
  if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':' || s[16] != ':')
    return std::nullopt;
  int d, mo, y, h, mi, sec;
  if (!read_digits(s, 0, 4, &y) || !read_digits(s, 5, 2, &mo) || !read_digits(s, 8, 2, &d) ||
      !read_digits(s, 11, 2, &h) || !read_digits(s, 14, 2, &mi) || !read_digits(s, 17, 2, &sec))
    return std::nullopt;
  return make_timestamp(y, mo, d, h, mi, sec);
}

enum class Channel { kGlucose, kGsr, kOther };

Channel classify_channel(std::string_view name) {
  if (name == "glucose_level" || name == "glucose") return Channel::kGlucose;
  if (name == "basis_gsr" || name == "gsr" || name == "galvanic_skin_response")
    return Channel::kGsr;
  return Channel::kOther;
}

// Sorts by timestamp and averages samples that share one.
void collapse_duplicates(std::vector<TimedSample>& samples) {
  std::stable_sort(samples.begin(), samples.end(),
                   [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  std::vector<TimedSample> out;
  out.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < samples.size() && samples[j].timestamp == samples[i].timestamp) {
      sum += samples[j].value;
      ++j;
    }
    out.push_back({samples[i].timestamp, sum / static_cast<double>(j - i)});
    i = j;
  }
  samples = std::move(out);
}

void finalize_record(SubjectRecord& record) {
  collapse_duplicates(record.glucose);
  collapse_duplicates(record.gsr);
  if (record.glucose.empty())
    throw SchemaError("subject '" + record.subject_id + "' has no glucose samples");
  if (record.gsr.empty())
    throw SchemaError("subject '" + record.subject_id + "' has no GSR samples");
}

void check_value(Channel channel, double value, const std::string& where) {
  if (!std::isfinite(value)) throw SchemaError(where + ": non-finite value");
  if (channel == Channel::kGlucose && value <= 0.0)
    throw SchemaError(where + ": glucose must be positive, got " + format_double(value));
}

}  // namespace

std::optional<Timestamp> try_parse_timestamp(std::string_view text) {
  text = trim(text);
  if (auto ts = parse_ohio(text)) return ts;
  return parse_iso(text);
}

std::string format_timestamp(Timestamp ts) {
  const auto day_point = floor<days>(ts);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{ts - day_point};
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

std::string_view source_suffix(SourceTag tag) {
  switch (tag) {
    case SourceTag::kOhio2018:
      return "2018";
    case SourceTag::kOhio2020:
      return "2020";
    case SourceTag::kSynthetic:
      return "synth";
  }
  return "unknown";
}

SubjectRecord parse_subject_xml(std::string_view bytes, SourceTag tag, std::string fallback_id) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in{std::string(bytes)};
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(std::string("malformed XML: ") + e.what());
  }

  const pt::ptree* root = nullptr;
  std::string root_name;
  for (const auto& [name, child] : tree) {
    if (name == "<xmlcomment>" || name == "<xmlattr>") continue;
    root = &child;
    root_name = name;
    break;
  }
  if (root == nullptr) throw ParseError("XML document has no root element");

  SubjectRecord record;
  record.source_tag = tag;
  record.subject_id = root->get<std::string>("<xmlattr>.id", fallback_id);
  if (record.subject_id.empty()) record.subject_id = root_name;

  for (const auto& [name, channel_node] : *root) {
    const Channel channel = classify_channel(name);
    if (channel == Channel::kOther) continue;
    auto& target = channel == Channel::kGlucose ? record.glucose : record.gsr;
    std::size_t index = 0;
    for (const auto& [event_name, event] : channel_node) {
      if (event_name != "event") continue;
      const std::string where = name + "/event[" + std::to_string(index++) + "]";
      const auto ts_text = event.get_optional<std::string>("<xmlattr>.ts");
      const auto value_text = event.get_optional<std::string>("<xmlattr>.value");
      if (!ts_text || !value_text) throw SchemaError(where + ": missing ts or value attribute");
      const auto ts = try_parse_timestamp(*ts_text);
      if (!ts) throw SchemaError(where + ": unparseable timestamp '" + *ts_text + "'");
      const auto value = parse_double(*value_text);
      if (!value) throw SchemaError(where + ": non-numeric value '" + *value_text + "'");
      check_value(channel, *value, where);
      target.push_back({*ts, *value});
    }
  }
  finalize_record(record);
  return record;
}

CsvSchema CsvSchema::wide(std::string timestamp, std::string glucose, std::string gsr) {
  CsvSchema schema;
  schema.timestamp_column = std::move(timestamp);
  schema.glucose_column = std::move(glucose);
  schema.gsr_column = std::move(gsr);
  return schema;
}

CsvParseResult parse_subject_csv(std::string_view bytes, const CsvSchema& schema,
                                 std::string subject_id, SourceTag tag) {
  CsvParseResult result;
  result.record.subject_id = std::move(subject_id);
  result.record.source_tag = tag;

  const auto lines = split_lines(bytes);
  if (lines.empty()) throw SchemaError("CSV has no header row");
  const auto header = split_csv_row(lines.front());
  auto column = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (trim(header[i]) == name) return i;
    throw SchemaError("CSV is missing column '" + name + "'");
  };

  const std::size_t ts_col = column(schema.timestamp_column);
  std::size_t channel_col = 0, value_col = 0, glucose_col = 0, gsr_col = 0;
  if (schema.is_wide()) {
    glucose_col = column(schema.glucose_column);
    gsr_col = column(schema.gsr_column);
  } else {
    channel_col = column(schema.channel_column);
    value_col = column(schema.value_column);
  }

  std::size_t data_rows = 0;
  auto take = [&](Channel channel, std::string_view cell, Timestamp ts, std::size_t line_no) {
    cell = trim(cell);
    if (cell.empty()) {
      ++result.skipped_count;
      return;
    }
    const auto value = parse_double(cell);
    const std::string where = "line " + std::to_string(line_no);
    if (!value || !std::isfinite(*value)) {
      result.row_errors.push_back(where + ": non-numeric value '" + std::string(cell) + "'");
      return;
    }
    check_value(channel, *value, where);
    (channel == Channel::kGlucose ? result.record.glucose : result.record.gsr)
        .push_back({ts, *value});
  };

  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    ++data_rows;
    const auto cells = split_csv_row(lines[li]);
    const std::size_t line_no = li + 1;
    auto cell = [&](std::size_t col) -> std::string_view {
      return col < cells.size() ? std::string_view(cells[col]) : std::string_view{};
    };
    const auto ts = try_parse_timestamp(cell(ts_col));
    if (!ts)
      throw SchemaError("line " + std::to_string(line_no) + ": unparseable timestamp '" +
                        std::string(cell(ts_col)) + "'");
    if (schema.is_wide()) {
      take(Channel::kGlucose, cell(glucose_col), *ts, line_no);
      take(Channel::kGsr, cell(gsr_col), *ts, line_no);
    } else {
      const Channel channel = classify_channel(trim(cell(channel_col)));
      if (channel == Channel::kOther) continue;
      take(channel, cell(value_col), *ts, line_no);
    }
  }

  if (data_rows > 0 && static_cast<double>(result.row_errors.size()) >
                           schema.max_bad_row_fraction * static_cast<double>(data_rows)) {
    throw ParseError(std::to_string(result.row_errors.size()) + " of " +
                     std::to_string(data_rows) + " rows have non-numeric values (first: " +
                     result.row_errors.front() + ")");
  }
  finalize_record(result.record);
  return result;
}

std::string write_subject_csv(const SubjectRecord& record) {
  std::string out = "timestamp,channel,value\n";
  auto emit = [&](std::string_view channel, const std::vector<TimedSample>& samples) {
    for (const auto& s : samples) {
      out += format_timestamp(s.timestamp);
      out += ',';
      out += channel;
      out += ',';
      out += format_double(s.value);
      out += '\n';
    }
  };
  emit("glucose", record.glucose);
  emit("gsr", record.gsr);
  return out;
}

SourceTag infer_source_tag(const std::filesystem::path& path) {
  return path.string().find("2020") != std::string::npos ? SourceTag::kOhio2020
                                                         : SourceTag::kOhio2018;
}

SubjectRecord load_subject_file(const std::filesystem::path& path, SourceTag tag,
                                const CsvSchema& schema) {
  const std::string bytes = read_file(path);
  try {
    if (path.extension() == ".xml")
      return parse_subject_xml(bytes, tag, path.stem().string());
    return parse_subject_csv(bytes, schema, path.stem().string(), tag).record;
  } catch (Error& e) {
    e.add_context(path.string());
    throw;
  }
}

Cohort merge_cohorts(Cohort a, Cohort b) {
  std::set<std::string> ids_a, ids_b;
  for (const auto& s : a.subjects) ids_a.insert(s.subject_id);
  for (const auto& s : b.subjects) ids_b.insert(s.subject_id);

  Cohort merged;
  merged.subjects = std::move(a.subjects);
  merged.subjects.insert(merged.subjects.end(), std::make_move_iterator(b.subjects.begin()),
                         std::make_move_iterator(b.subjects.end()));
  for (auto& s : merged.subjects) {
    if (ids_a.count(s.subject_id) && ids_b.count(s.subject_id))
      s.subject_id += "-" + std::string(source_suffix(s.source_tag));
  }
  // Same id and same source on both sides: fall back to a counter.
  std::set<std::string> seen;
  for (auto& s : merged.subjects) {
    if (seen.insert(s.subject_id).second) continue;
    for (int n = 2;; ++n) {
      std::string candidate = s.subject_id + "-" + std::to_string(n);
      if (seen.insert(candidate).second) {
        s.subject_id = std::move(candidate);
        break;
      }
    }
  }
  merged.total_steps = 0;
  return merged;
}

// ---------------------------------------------------------------------------
// Synthetic cohorts

namespace {

constexpr std::size_t kMinExcursion = 3;
constexpr std::size_t kMaxExcursion = 9;
constexpr std::size_t kRamp = 3;
constexpr double kResponseAmplitude = 2.0;  // microsiemens at coupling 1
constexpr double kRiseMinutes = 4.0;
constexpr double kDecayMinutes = 20.0;

std::size_t margin_before(const SynthConfig& cfg) { return cfg.lead + kRamp + 1; }
std::size_t margin_after() { return kRamp + 1; }

std::size_t planned_hypo_steps(const SynthConfig& cfg) {
  return static_cast<std::size_t>(
      std::llround(cfg.target_prevalence * static_cast<double>(cfg.steps_per_subject)));
}

}  // namespace

void SynthConfig::validate() const {
  if (n_subjects < 1 || steps_per_subject < 1)
    throw ConfigError("synthetic cohort needs at least one subject and one step");
  if (!(target_prevalence > 0.0 && target_prevalence < 1.0))
    throw ConfigError("target_prevalence must lie in (0, 1), got " +
                      format_double(target_prevalence));
  if (!(coupling >= 0.0 && coupling <= 1.0))
    throw ConfigError("coupling must lie in [0, 1], got " + format_double(coupling));
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
    throw ConfigError("noise_sd must be a finite non-negative number");
  if (target_prevalence * static_cast<double>(steps_per_subject) < 1.0)
    throw ConfigError("infeasible prevalence: " + format_double(target_prevalence) + " x " +
                      std::to_string(steps_per_subject) +
                      " steps gives fewer than one expected hypoglycemic step per subject");
  // Worst case number of excursions is one per kMinExcursion steps, plus a remainder.
  const std::size_t max_events = planned_hypo_steps(*this) / kMinExcursion + 1;
  const std::size_t slot = steps_per_subject / max_events;
  if (slot < kMaxExcursion + margin_before(*this) + margin_after())
    throw ConfigError("infeasible prevalence: " + format_double(target_prevalence) +
                      " leaves no room between hypoglycemic excursions in " +
                      std::to_string(steps_per_subject) + " steps");
}

SubjectRecord generate_synthetic_subject(const SynthConfig& cfg, std::size_t index) {
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(index)));
  std::normal_distribution<double> normal(0.0, 1.0);
  auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };

  const std::size_t steps = cfg.steps_per_subject;

  // Excursion plan: lengths summing exactly to the planned number of hypo steps,
  // one excursion per equal slot of the timeline.
  std::vector<std::size_t> lengths;
  std::uniform_int_distribution<std::size_t> length_dist(kMinExcursion, kMaxExcursion);
  for (std::size_t remaining = planned_hypo_steps(cfg); remaining > 0;) {
    const std::size_t len = std::min(length_dist(rng), remaining);
    lengths.push_back(len);
    remaining -= len;
  }
  std::shuffle(lengths.begin(), lengths.end(), rng);
  const std::size_t slot = steps / lengths.size();
  std::vector<std::size_t> starts(lengths.size());
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    const std::size_t free = slot - lengths[k] - margin_before(cfg) - margin_after();
    starts[k] = k * slot + margin_before(cfg) +
                std::uniform_int_distribution<std::size_t>(0, free)(rng);
  }

  // Glucose: mean-reverting walk reflected into [80, 380], then the excursions.
  std::vector<double> glucose(steps);
  glucose[0] = uniform(100.0, 180.0);
  for (std::size_t t = 1; t < steps; ++t) {
    double g = glucose[t - 1] + 0.03 * (140.0 - glucose[t - 1]) + 5.0 * normal(rng);
    if (g < 80.0) g = 160.0 - g;
    if (g > 380.0) g = 760.0 - g;
    glucose[t] = g;
  }
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    const std::size_t s = starts[k], len = lengths[k];
    for (std::size_t j = 1; j <= kRamp; ++j) {
      const double w = static_cast<double>(kRamp + 1 - j) / static_cast<double>(kRamp + 1);
      glucose[s - j] += (72.0 - glucose[s - j]) * w;
    }
    const double depth = uniform(5.0, 25.0);
    for (std::size_t j = 0; j < len; ++j) {
      const double shape = std::sin(std::numbers::pi * static_cast<double>(j + 1) /
                                    static_cast<double>(len + 1));
      glucose[s + j] = std::min(69.0, std::round(69.5 - depth * shape));
    }
    for (std::size_t j = 0; j < kRamp && s + len + j < steps; ++j) {
      const double w = static_cast<double>(kRamp - j) / static_cast<double>(kRamp + 1);
      glucose[s + len + j] += (72.0 - glucose[s + len + j]) * w;
    }
  }
  for (double& g : glucose) g = std::round(g);

  // GSR response envelope per minute: rises `lead` steps before an excursion,
  // holds through it, decays afterwards.
  const std::size_t n_minutes = steps * 5;
  std::vector<double> response(n_minutes, 0.0);
  for (std::size_t k = 0; k < lengths.size(); ++k) {
    const std::size_t onset = (starts[k] - cfg.lead) * 5;
    const std::size_t end = (starts[k] + lengths[k]) * 5;
    for (std::size_t m = onset; m < end; ++m)
      response[m] = std::max(response[m],
                             1.0 - std::exp(-static_cast<double>(m - onset) / kRiseMinutes));
    const double at_end = 1.0 - std::exp(-static_cast<double>(end - 1 - onset) / kRiseMinutes);
    for (std::size_t m = end; m < std::min(n_minutes, end + 120); ++m)
      response[m] = std::max(
          response[m], at_end * std::exp(-static_cast<double>(m - end + 1) / kDecayMinutes));
  }

  const double level = uniform(3.0, 8.0);
  struct Wave {
    double period, amplitude, phase;
  };
  std::vector<Wave> drift(3);
  for (auto& w : drift)
    w = {uniform(360.0, 1440.0), uniform(0.4, 0.9), uniform(0.0, 2.0 * std::numbers::pi)};

  const Timestamp start =
      sys_days{year{2021} / January / 1} + days{static_cast<int>(index)};
  SubjectRecord record;
  char id[32];
  std::snprintf(id, sizeof(id), "synth-%02zu", index + 1);
  record.subject_id = id;
  record.source_tag = SourceTag::kSynthetic;
  record.glucose.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto jitter = t == 0 ? 0 : std::uniform_int_distribution<int>(-20, 20)(rng);
    record.glucose.push_back(
        {start + seconds{static_cast<long>(t) * 300 + jitter}, glucose[t]});
  }

  record.gsr.reserve(n_minutes);
  std::size_t gap_left = 0;
  for (std::size_t m = 0; m < n_minutes; ++m) {
    double value = level;
    for (const auto& w : drift)
      value += w.amplitude *
               std::sin(2.0 * std::numbers::pi * static_cast<double>(m) / w.period + w.phase);
    value += cfg.coupling * kResponseAmplitude * response[m];
    value += cfg.noise_sd * normal(rng);
    const double event = uniform(0.0, 1.0);
    if (gap_left > 0) {
      --gap_left;
      continue;
    }
    if (event < 1.0 / 2400.0) {  // sensor dropout, roughly one per 40 hours
      gap_left = std::uniform_int_distribution<std::size_t>(5, 40)(rng);
      continue;
    }
    if (event > 1.0 - 5e-4) value += uniform(20.0, 40.0);  // motion artifact
    record.gsr.push_back({start + minutes{static_cast<long>(m)}, std::max(0.05, value)});
  }
  return record;
}

Cohort generate_synthetic_cohort(const SynthConfig& cfg) {
  cfg.validate();
  Cohort cohort;
  cohort.subjects.resize(cfg.n_subjects);
  for (std::size_t i = 0; i < cfg.n_subjects; ++i)
    cohort.subjects[i] = generate_synthetic_subject(cfg, i);
  return cohort;
}

}  // namespace hypogsr
