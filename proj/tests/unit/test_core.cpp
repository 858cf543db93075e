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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "hypogsr/error.hpp"
#include "hypogsr/ingest.hpp"
#include "hypogsr/seed.hpp"
#include "hypogsr/text.hpp"

namespace hypogsr {
namespace {

TEST(Seed, FnvMatchesPublishedVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Seed, StageSeedsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(7, "split"), derive_seed(7, "split"));
  EXPECT_NE(derive_seed(7, "split"), derive_seed(7, "synth"));
  EXPECT_NE(derive_seed(7, "split"), derive_seed(8, "split"));
  EXPECT_NE(derive_seed(7, std::uint64_t{0}), derive_seed(7, std::uint64_t{1}));
  EXPECT_EQ(hex_digest(0xabcULL), "0000000000000abc");
}

TEST(Text, CsvRowQuoting) {
  const auto cells = split_csv_row(R"(a,"b,c","d""e",)");
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_EQ(cells[1], "b,c");
  EXPECT_EQ(cells[2], "d\"e");
  EXPECT_EQ(cells[3], "");
}

TEST(Text, DoubleRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 70.0}) {
    const auto parsed = parse_double(format_double(v));
    ASSERT_TRUE(parsed.has_value());
    EXPECT_EQ(*parsed, v);
  }
  EXPECT_FALSE(parse_double("1.5x").has_value());
  EXPECT_FALSE(parse_double("").has_value());
  EXPECT_EQ(format_fixed(0.12345, 3), "0.123");
}

TEST(Text, SplitLinesDropsCr) {
  const auto lines = split_lines("a\r\nb\nc");
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], "a");
  EXPECT_EQ(lines[2], "c");
}

TEST(Errors, CategoryAndContext) {
  SchemaError e("bad");
  e.add_context("file.xml");
  EXPECT_EQ(e.category(), ErrorCategory::kData);
  EXPECT_EQ(e.message(), "file.xml: bad");
  EXPECT_EQ(std::string(e.what()), "SchemaError: file.xml: bad");
  EXPECT_EQ(ConfigError("x").category(), ErrorCategory::kUser);
  EXPECT_EQ(NumericalError("x").category(), ErrorCategory::kInternal);
}

TEST(Timestamp, BothFormats) {
  const auto a = try_parse_timestamp("07-12-2021 01:17:00");
  const auto b = try_parse_timestamp("2021-12-07T01:17:00Z");
  const auto c = try_parse_timestamp("2021-12-07 01:17:00");
  ASSERT_TRUE(a && b && c);
  EXPECT_EQ(*a, *b);
  EXPECT_EQ(*b, *c);
  EXPECT_EQ(format_timestamp(*a), "2021-12-07T01:17:00");
  EXPECT_FALSE(try_parse_timestamp("yesterday"));
  EXPECT_FALSE(try_parse_timestamp("32-01-2021 00:00:00"));
}

constexpr const char* kXml = R"(<?xml version="1.0"?>
<patient id="559" weight="99">
  <glucose_level>
    <event ts="07-12-2021 01:17:00" value="101"/>
    <event ts="07-12-2021 01:22:00" value="98"/>
  </glucose_level>
  <finger_stick><event ts="07-12-2021 01:20:00" value="120"/></finger_stick>
  <basis_gsr>
    <event ts="07-12-2021 01:17:00" value="0.25"/>
    <event ts="07-12-2021 01:18:00" value="0.5"/>
  </basis_gsr>
</patient>)";

TEST(IngestXml, KeepsGlucoseAndGsr) {
  const auto rec = parse_subject_xml(kXml, SourceTag::kOhio2020);
  EXPECT_EQ(rec.subject_id, "559");
  EXPECT_EQ(rec.source_tag, SourceTag::kOhio2020);
  ASSERT_EQ(rec.glucose.size(), 2u);
  ASSERT_EQ(rec.gsr.size(), 2u);
  EXPECT_DOUBLE_EQ(rec.glucose[1].value, 98.0);
  EXPECT_DOUBLE_EQ(rec.gsr[1].value, 0.5);
}

TEST(IngestXml, MissingGlucoseIsSchemaError) {
  const std::string xml = R"(<patient id="1"><basis_gsr><event ts="07-12-2021 01:17:00" value="1"/></basis_gsr></patient>)";
  EXPECT_THROW(parse_subject_xml(xml), SchemaError);
}

TEST(IngestXml, MalformedIsParseError) {
  EXPECT_THROW(parse_subject_xml("<patient><glucose_level>"), ParseError);
}

TEST(IngestCsv, LongLayoutRoundTrip) {
  const auto rec = parse_subject_xml(kXml);
  const std::string csv = write_subject_csv(rec);
  const auto back = parse_subject_csv(csv, CsvSchema{}, rec.subject_id).record;
  EXPECT_EQ(back.glucose, rec.glucose);
  EXPECT_EQ(back.gsr, rec.gsr);
}

TEST(IngestCsv, WideLayoutWithBlanks) {
  const std::string csv =
      "time,bg,eda\n"
      "2021-01-01T00:00:00,100,0.3\n"
      "2021-01-01T00:05:00,,0.4\n"
      "2021-01-01T00:10:00,90,\n";
  const auto res = parse_subject_csv(csv, CsvSchema::wide("time", "bg", "eda"), "s1");
  EXPECT_EQ(res.record.glucose.size(), 2u);
  EXPECT_EQ(res.record.gsr.size(), 2u);
  EXPECT_EQ(res.skipped_count, 2u);
}

TEST(IngestCsv, BadRowsAboveThresholdAbort) {
  std::string csv = "timestamp,channel,value\n";
  for (int i = 0; i < 10; ++i)
    csv += "2021-01-01T00:0" + std::to_string(i) + ":00,glucose_level," +
           (i < 3 ? std::string("abc") : std::string("100")) + "\n";
  csv += "2021-01-01T00:00:00,basis_gsr,1\n";
  EXPECT_THROW(parse_subject_csv(csv, CsvSchema{}, "s"), ParseError);
  CsvSchema lenient;
  lenient.max_bad_row_fraction = 0.5;
  const auto res = parse_subject_csv(csv, lenient, "s");
  EXPECT_EQ(res.row_errors.size(), 3u);
  EXPECT_EQ(res.record.glucose.size(), 7u);
}

TEST(IngestCsv, MissingColumn) {
  EXPECT_THROW(parse_subject_csv("timestamp,value\n", CsvSchema{}, "s"), SchemaError);
}

TEST(Ingest, MergeSuffixesCollidingIds) {
  Cohort a, b;
  SubjectRecord r;
  r.subject_id = "559";
  r.source_tag = SourceTag::kOhio2018;
  a.subjects.push_back(r);
  r.source_tag = SourceTag::kOhio2020;
  b.subjects.push_back(r);
  r.subject_id = "600";
  b.subjects.push_back(r);
  const auto m = merge_cohorts(a, b);
  ASSERT_EQ(m.subjects.size(), 3u);
  EXPECT_EQ(m.subjects[0].subject_id, "559-2018");
  EXPECT_EQ(m.subjects[1].subject_id, "559-2020");
  EXPECT_EQ(m.subjects[2].subject_id, "600");
}

TEST(Ingest, SourceTagFromPath) {
  EXPECT_EQ(infer_source_tag("data/OhioT1DM-2020/540.xml"), SourceTag::kOhio2020);
  EXPECT_EQ(infer_source_tag("data/train/559.xml"), SourceTag::kOhio2018);
}

TEST(Synthetic, DeterministicPerSeed) {
  SynthConfig cfg;
  cfg.n_subjects = 2;
  cfg.steps_per_subject = 600;
  const auto a = generate_synthetic_cohort(cfg);
  const auto b = generate_synthetic_cohort(cfg);
  ASSERT_EQ(a.subjects.size(), 2u);
  EXPECT_EQ(a.subjects, b.subjects);
  EXPECT_EQ(generate_synthetic_subject(cfg, 1), a.subjects[1]);
  cfg.seed += 1;
  EXPECT_NE(generate_synthetic_cohort(cfg).subjects[0], a.subjects[0]);
}

TEST(Synthetic, HitsTargetPrevalence) {
  SynthConfig cfg;
  cfg.n_subjects = 4;
  std::size_t hypo = 0, total = 0;
  for (const auto& s : generate_synthetic_cohort(cfg).subjects) {
    EXPECT_EQ(s.glucose.size(), cfg.steps_per_subject);
    EXPECT_GE(s.gsr.size(), 4 * cfg.steps_per_subject);
    for (const auto& g : s.glucose) {
      ++total;
      hypo += g.value < 70.0 ? 1 : 0;
      EXPECT_GT(g.value, 0.0);
    }
  }
  EXPECT_NEAR(static_cast<double>(hypo) / static_cast<double>(total), cfg.target_prevalence, 0.01);
}

TEST(Synthetic, RejectsBadConfig) {
  SynthConfig cfg;
  cfg.coupling = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SynthConfig{};
  cfg.target_prevalence = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace hypogsr
