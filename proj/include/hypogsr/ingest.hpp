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

#ifndef HYPOGSR_INGEST_HPP_
#define HYPOGSR_INGEST_HPP_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hypogsr {

using Timestamp = std::chrono::sys_seconds;

// Accepts `DD-MM-YYYY HH:MM:SS` first, then ISO-8601 (`YYYY-MM-DDTHH:MM:SS`,
// optional trailing `Z`, space allowed instead of `T`).
std::optional<Timestamp> try_parse_timestamp(std::string_view text);
// ISO-8601 `YYYY-MM-DDTHH:MM:SS`.
std::string format_timestamp(Timestamp ts);

struct TimedSample {
  Timestamp timestamp;
  double value = 0.0;  // mg/dL for glucose, microsiemens for GSR

  friend bool operator==(const TimedSample&, const TimedSample&) = default;
};

enum class SourceTag { kOhio2018, kOhio2020, kSynthetic };

std::string_view source_suffix(SourceTag tag);  // "2018", "2020", "synth"

struct SubjectRecord {
  std::string subject_id;
  std::vector<TimedSample> glucose;
  std::vector<TimedSample> gsr;
  SourceTag source_tag = SourceTag::kOhio2018;

  friend bool operator==(const SubjectRecord&, const SubjectRecord&) = default;
};

struct Cohort {
  std::vector<SubjectRecord> subjects;
  // Sum of per-subject aligned grid lengths; zero until the cohort is aligned.
  std::size_t total_steps = 0;
};

// OhioT1DM-style XML: a root element (usually <patient id="...">) whose channel
// children hold <event ts="..." value="..."/> entries. `glucose_level` and
// `basis_gsr` (or `gsr`, `galvanic_skin_response`) are kept; every other
// channel is parsed and dropped.
SubjectRecord parse_subject_xml(std::string_view bytes, SourceTag tag = SourceTag::kOhio2018,
                                std::string fallback_id = {});

struct CsvSchema {
  std::string timestamp_column = "timestamp";
  // Long layout (the canonical one): a row per sample.
  std::string channel_column = "channel";
  std::string value_column = "value";
  // Wide layout: a row per timestamp with one column per channel. Selected
  // when both names are non-empty.
  std::string glucose_column;
  std::string gsr_column;
  // Non-numeric value cells above this fraction of data rows abort the parse.
  double max_bad_row_fraction = 0.10;

  bool is_wide() const { return !glucose_column.empty() && !gsr_column.empty(); }
  static CsvSchema wide(std::string timestamp, std::string glucose, std::string gsr);
};

struct CsvParseResult {
  SubjectRecord record;
  std::size_t skipped_count = 0;         // blank value cells
  std::vector<std::string> row_errors;  // non-numeric cells, under the fatal threshold
};

CsvParseResult parse_subject_csv(std::string_view bytes, const CsvSchema& schema,
                                 std::string subject_id,
                                 SourceTag tag = SourceTag::kOhio2018);

// Canonical long-layout CSV (`timestamp,channel,value`), LF line endings,
// shortest round-trip float formatting.
std::string write_subject_csv(const SubjectRecord& record);

// Reads an .xml or .csv subject file. Subject id for CSV is the file stem.
SubjectRecord load_subject_file(const std::filesystem::path& path, SourceTag tag,
                                const CsvSchema& schema = {});

// Guesses the cohort from a path: anything mentioning 2020 is Ohio2020, else Ohio2018.
SourceTag infer_source_tag(const std::filesystem::path& path);

// a's subjects first; ids that collide get a `-<source>` suffix on both sides.
Cohort merge_cohorts(Cohort a, Cohort b);

struct SynthConfig {
  std::size_t n_subjects = 12;
  std::size_t steps_per_subject = 4200;  // 5-minute CGM steps
  double target_prevalence = 0.041;
  double coupling = 0.8;  // GSR response strength around hypoglycemia, [0, 1]
  double noise_sd = 0.3;  // microsiemens, per 1-minute GSR sample
  std::uint64_t seed = 7;
  std::size_t lead = 2;  // GSR rise starts this many steps before an excursion

  void validate() const;
};

Cohort generate_synthetic_cohort(const SynthConfig& cfg);
// One subject of the cohort above; subject `index` draws from derive_seed(seed, index).
SubjectRecord generate_synthetic_subject(const SynthConfig& cfg, std::size_t index);

}  // namespace hypogsr

#endif  // HYPOGSR_INGEST_HPP_
