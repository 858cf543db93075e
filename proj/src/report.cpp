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

#include <algorithm>
#include <cmath>

#include "hypogsr/error.hpp"
#include "hypogsr/eval.hpp"
#include "hypogsr/text.hpp"

namespace hypogsr {

using nlohmann::json;

std::string CellResult::key() const {
  return std::string(family_name(family)) + "_" + std::string(layout_name(mode));
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "markdown" || name == "md") return ReportFormat::kMarkdown;
  throw ConfigError("unknown report format '" + std::string(name) +
                    "', expected json, csv or markdown");
}

std::string_view report_extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::kJson:
      return "json";
    case ReportFormat::kCsv:
      return "csv";
    case ReportFormat::kMarkdown:
      return "md";
  }
  return "txt";
}

namespace {

json estimate_json(const MetricEstimate& e) {
  json j;
  j["value"] = e.value;
  j["undefined"] = e.undefined;
  if (e.ci) {
    j["ci"] = {{"low", e.ci->low},
               {"high", e.ci->high},
               {"level", e.ci->level},
               {"iterations", e.ci->iterations},
               {"undefined_iterations", e.ci->undefined_iterations},
               {"seed", e.ci->seed}};
  } else {
    j["ci"] = nullptr;
  }
  j["ci_note"] = e.ci_note;
  return j;
}

MetricEstimate estimate_from(const json& j) {
  MetricEstimate e;
  e.value = j.at("value").get<double>();
  e.undefined = j.at("undefined").get<bool>();
  if (!j.at("ci").is_null()) {
    const auto& c = j["ci"];
    e.ci = ConfidenceInterval{c.at("low").get<double>(),
                              c.at("high").get<double>(),
                              c.at("level").get<double>(),
                              c.at("iterations").get<std::size_t>(),
                              c.at("undefined_iterations").get<std::size_t>(),
                              c.at("seed").get<std::uint64_t>()};
  }
  e.ci_note = j.at("ci_note").get<std::string>();
  return e;
}

json class_json(const ClassMetrics& c) {
  return {{"precision", estimate_json(c.precision)},
          {"recall", estimate_json(c.recall)},
          {"f1", estimate_json(c.f1)},
          {"auc", estimate_json(c.auc)}};
}

ClassMetrics class_from(const json& j) {
  return {estimate_from(j.at("precision")), estimate_from(j.at("recall")),
          estimate_from(j.at("f1")), estimate_from(j.at("auc"))};
}

json split_json(const SplitMetrics& s) {
  return {{"n", s.n},
          {"n_hypo", s.n_hypo},
          {"confusion",
           {{"tp", s.confusion.tp}, {"fp", s.confusion.fp}, {"fn", s.confusion.fn},
            {"tn", s.confusion.tn}}},
          {"accuracy", estimate_json(s.accuracy)},
          {"hypo", class_json(s.hypo)},
          {"normo", class_json(s.normo)}};
}

SplitMetrics split_from(const json& j) {
  SplitMetrics s;
  s.n = j.at("n").get<std::size_t>();
  s.n_hypo = j.at("n_hypo").get<std::size_t>();
  const auto& c = j.at("confusion");
  s.confusion = {c.at("tp").get<std::size_t>(), c.at("fp").get<std::size_t>(),
                 c.at("fn").get<std::size_t>(), c.at("tn").get<std::size_t>()};
  s.accuracy = estimate_from(j.at("accuracy"));
  s.hypo = class_from(j.at("hypo"));
  s.normo = class_from(j.at("normo"));
  return s;
}

void require_cells(const EvaluationReport& report) {
  if (report.cells.empty()) throw EmptyReportError("report has no model results");
}

std::string fixed3(double v) { return format_fixed(v, 3); }

std::string md_cell(const MetricEstimate& e, bool with_ci) {
  std::string s = fixed3(e.value);
  if (e.undefined) s += " (undefined)";
  if (with_ci) {
    if (e.ci) s += " [" + fixed3(e.ci->low) + ", " + fixed3(e.ci->high) + "]";
    else if (!e.ci_note.empty()) s += " [unstable]";
  }
  return s;
}

std::string md_label(const CellResult& c) {
  return std::string(family_title(c.family)) + " (" + std::string(layout_name(c.mode)) + ")";
}

std::string csv_opt(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

void add_rows(std::vector<ReportCsvRow>& rows, const CellResult& cell, const std::string& split,
              const SplitMetrics& m) {
  const std::string family(family_name(cell.family));
  const std::string mode(layout_name(cell.mode));
  auto push = [&](const std::string& cls, const std::string& metric, const MetricEstimate& e) {
    ReportCsvRow r{family, mode, cell.status, split, cls, metric, e.value, {}, {}, e.undefined};
    if (e.ci) {
      r.low = e.ci->low;
      r.high = e.ci->high;
    }
    rows.push_back(std::move(r));
  };
  push("all", "accuracy", m.accuracy);
  for (const auto& [cls, cm] : {std::pair<std::string, const ClassMetrics*>{"hypo", &m.hypo},
                                {"normo", &m.normo}}) {
    push(cls, "precision", cm->precision);
    push(cls, "recall", cm->recall);
    push(cls, "f1", cm->f1);
    push(cls, "auc", cm->auc);
  }
}

}  // namespace

json report_to_json(const EvaluationReport& r) {
  json j;
  j["config"] = r.config;
  j["config_digest"] = r.config_digest;
  j["master_seed"] = r.master_seed;
  j["stage_seeds"] = r.stage_seeds;
  j["dataset"] = {{"digest", r.dataset_digest},
                  {"n_subjects", r.n_subjects},
                  {"total_steps", r.total_steps},
                  {"n_windows", r.n_windows},
                  {"n_hypo", r.n_hypo},
                  {"discarded_windows", r.discarded_windows}};
  j["splits"] = json::array();
  for (const auto& s : r.splits)
    j["splits"].push_back(
        {{"name", s.name}, {"windows", s.windows}, {"hypo", s.hypo}, {"subjects", s.subjects}});
  j["cells"] = json::array();
  for (const auto& c : r.cells) {
    json cj;
    cj["family"] = family_name(c.family);
    cj["mode"] = layout_name(c.mode);
    cj["status"] = c.status;
    cj["error"] = c.error;
    cj["meta"] = c.meta ? to_json(*c.meta) : json(nullptr);
    cj["test"] = c.test ? split_json(*c.test) : json(nullptr);
    cj["validation"] = c.validation ? split_json(*c.validation) : json(nullptr);
    j["cells"].push_back(std::move(cj));
  }
  return j;
}

EvaluationReport report_from_json(const json& j) {
  try {
    EvaluationReport r;
    r.config = j.at("config");
    r.config_digest = j.at("config_digest").get<std::string>();
    r.master_seed = j.at("master_seed").get<std::uint64_t>();
    r.stage_seeds = j.at("stage_seeds").get<std::map<std::string, std::uint64_t>>();
    const auto& d = j.at("dataset");
    r.dataset_digest = d.at("digest").get<std::string>();
    r.n_subjects = d.at("n_subjects").get<std::size_t>();
    r.total_steps = d.at("total_steps").get<std::size_t>();
    r.n_windows = d.at("n_windows").get<std::size_t>();
    r.n_hypo = d.at("n_hypo").get<std::size_t>();
    r.discarded_windows = d.at("discarded_windows").get<std::size_t>();
    for (const auto& s : j.at("splits"))
      r.splits.push_back({s.at("name").get<std::string>(), s.at("windows").get<std::size_t>(),
                          s.at("hypo").get<std::size_t>(),
                          s.at("subjects").get<std::map<std::string, std::size_t>>()});
    for (const auto& cj : j.at("cells")) {
      CellResult c;
      c.family = parse_family(cj.at("family").get<std::string>());
      c.mode = parse_layout(cj.at("mode").get<std::string>());
      c.status = cj.at("status").get<std::string>();
      c.error = cj.at("error").get<std::string>();
      if (!cj.at("meta").is_null()) c.meta = training_meta_from_json(cj["meta"]);
      if (!cj.at("test").is_null()) c.test = split_from(cj["test"]);
      if (!cj.at("validation").is_null()) c.validation = split_from(cj["validation"]);
      r.cells.push_back(std::move(c));
    }
    return r;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("report JSON: ") + e.what());
  }
}

EvaluationReport parse_report_json(std::string_view bytes) {
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    throw ParseError(std::string("report JSON: ") + e.what());
  }
  return report_from_json(j);
}

std::vector<ReportCsvRow> report_csv_rows(const EvaluationReport& report) {
  std::vector<ReportCsvRow> rows;
  for (const auto& cell : report.cells) {
    if (!cell.ok() || !cell.test) {
      rows.push_back({std::string(family_name(cell.family)), std::string(layout_name(cell.mode)),
                      cell.status, "", "", "", {}, {}, {}, false});
      continue;
    }
    add_rows(rows, cell, "test", *cell.test);
    if (cell.validation) add_rows(rows, cell, "validation", *cell.validation);
  }
  return rows;
}

std::vector<ReportCsvRow> parse_report_csv(std::string_view bytes) {
  const auto lines = split_lines(bytes);
  if (lines.empty()) throw SchemaError("report CSV has no header");
  std::vector<ReportCsvRow> rows;
  auto opt = [](const std::string& cell) -> std::optional<double> {
    if (cell.empty()) return std::nullopt;
    const auto v = parse_double(cell);
    if (!v) throw SchemaError("report CSV: bad number '" + cell + "'");
    return v;
  };
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto c = split_csv_row(lines[i]);
    if (c.size() != 10) throw SchemaError("report CSV line " + std::to_string(i + 1));
    rows.push_back({c[0], c[1], c[2], c[3], c[4], c[5], opt(c[6]), opt(c[7]), opt(c[8]),
                    c[9] == "1"});
  }
  return rows;
}

std::string emit_report(const EvaluationReport& report, ReportFormat format) {
  require_cells(report);
  switch (format) {
    case ReportFormat::kJson:
      return report_to_json(report).dump(2) + "\n";
    case ReportFormat::kCsv: {
      std::string out = "family,mode,status,split,class,metric,value,ci_low,ci_high,undefined\n";
      for (const auto& r : report_csv_rows(report)) {
        out += r.family + "," + r.mode + "," + r.status + "," + r.split + "," + r.cls + "," +
               r.metric + "," + csv_opt(r.value) + "," + csv_opt(r.low) + "," + csv_opt(r.high) +
               "," + (r.undefined ? "1" : "0") + "\n";
      }
      return out;
    }
    case ReportFormat::kMarkdown: {
      std::string out = "# Evaluation report\n\n";
      out += "- master seed: " + std::to_string(report.master_seed) + "\n";
      out += "- config digest: " + report.config_digest + "\n";
      out += "- dataset: " + std::to_string(report.n_windows) + " windows (" +
             std::to_string(report.n_hypo) + " hypo) from " + std::to_string(report.n_subjects) +
             " subjects, digest " + report.dataset_digest + "\n";
      for (const auto& s : report.splits)
        out += "- " + s.name + ": " + std::to_string(s.windows) + " windows, " +
               std::to_string(s.hypo) + " hypo, " + std::to_string(s.subjects.size()) +
               " subjects\n";

      auto table = [&](const std::string& title, bool with_accuracy, bool with_ci, auto pick) {
        out += "\n## " + title + "\n\n";
        out += with_accuracy ? "| Model | Accuracy | Recall | F1-score | AUC |\n|---|---|---|---|---|\n"
                             : "| Model | Recall | F1-score | AUC |\n|---|---|---|---|\n";
        for (const auto& c : report.cells) {
          const SplitMetrics* m = pick(c);
          out += "| " + md_label(c) + " | ";
          if (!c.ok() || m == nullptr) {
            out += with_accuracy ? "failed | failed | failed | failed |\n"
                                 : "failed | failed | failed |\n";
            continue;
          }
          const ClassMetrics& cm = title.starts_with("Normo") ? m->normo : m->hypo;
          if (with_accuracy) out += md_cell(m->accuracy, with_ci) + " | ";
          out += md_cell(cm.recall, with_ci) + " | " + md_cell(cm.f1, with_ci) + " | " +
                 md_cell(cm.auc, with_ci) + " |\n";
        }
      };
      auto test = [](const CellResult& c) { return c.test ? &*c.test : nullptr; };
      auto val = [](const CellResult& c) { return c.validation ? &*c.validation : nullptr; };
      table("Hypoglycemia (test, 95% bootstrap CI)", true, true, test);
      table("Normoglycemia (test, 95% bootstrap CI)", false, true, test);
      table("Hypoglycemia (validation)", true, false, val);
      out += "\n";
      bool any_failed = false;
      for (const auto& c : report.cells) {
        if (c.ok()) continue;
        if (!any_failed) out += "## Failed cells\n\n";
        any_failed = true;
        out += "- " + md_label(c) + ": " + c.error + "\n";
      }
      return out;
    }
  }
  throw ConfigError("unknown report format");
}

std::string emit_roc_csv(std::span<const RocPoint> points) {
  std::string out = "fpr,tpr,threshold\n";
  for (const auto& p : points)
    out += format_double(p.fpr) + "," + format_double(p.tpr) + "," +
           (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) + "\n";
  return out;
}

}  // namespace hypogsr
