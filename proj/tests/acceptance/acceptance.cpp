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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gradcheck.hpp"
#include "hypogsr/cli.hpp"
#include "hypogsr/config.hpp"
#include "hypogsr/dsp.hpp"
#include "hypogsr/eval.hpp"
#include "hypogsr/experiment.hpp"
#include "hypogsr/kernels.hpp"
#include "hypogsr/text.hpp"
#include "hypogsr/windowing.hpp"

namespace fs = std::filesystem;
using namespace hypogsr;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string num(double v, int digits = 4) { return format_fixed(v, digits); }

fs::path g_work;

// ---------------------------------------------------------------------------

Outcome labeling_exactness() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> wide(1e-6, 600.0);
  std::uniform_real_distribution<double> near(69.0, 71.0);
  std::vector<double> values;
  values.reserve(1'000'000);
  values.push_back(70.0);
  values.push_back(std::nextafter(70.0, 0.0));
  values.push_back(std::nextafter(70.0, 1000.0));
  values.push_back(std::numeric_limits<double>::denorm_min());
  values.push_back(std::numeric_limits<double>::max());
  while (values.size() < 1'000'000) {
    switch (rng() % 4) {
      case 0:
        values.push_back(wide(rng));
        break;
      case 1:
        values.push_back(near(rng));
        break;
      case 2:
        values.push_back(static_cast<double>(1 + rng() % 400));
        break;
      default: {
        double v = 70.0;
        for (int k = static_cast<int>(rng() % 64); k > 0; --k)
          v = std::nextafter(v, (rng() & 1) ? 0.0 : 1000.0);
        values.push_back(v);
      }
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t wrong = 0, thrown = 0, hypo = 0;
  for (double v : values) {
    try {
      const bool is_hypo = label_glucose(v) == GlycemicLabel::kHypo;
      hypo += is_hypo;
      wrong += is_hypo != (v < 70.0);
    } catch (const std::exception&) {
      ++thrown;
    }
  }
  const double secs = elapsed(t0);
  return {wrong == 0 && thrown == 0 && secs < 1.0,
          std::to_string(values.size()) + " values, " + std::to_string(hypo) + " hypo, " +
              std::to_string(wrong) + " mislabeled, " + std::to_string(thrown) +
              " exceptions, " + num(secs, 3) + " s"};
}

// ---------------------------------------------------------------------------

// Steady-state amplitude of a unit sinusoid after one causal filter pass,
// from a least-squares sin/cos fit over the second half of the output.
double measured_gain(std::span<const Biquad> sos, double f) {
  const std::size_t n = 40000;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2 * std::numbers::pi * f * double(i));
  const auto y = sosfilt(sos, x);
  double ss = 0, cc = 0, sc = 0, ys = 0, yc = 0;
  for (std::size_t i = n / 2; i < n; ++i) {
    const double s = std::sin(2 * std::numbers::pi * f * double(i));
    const double c = std::cos(2 * std::numbers::pi * f * double(i));
    ss += s * s;
    cc += c * c;
    sc += s * c;
    ys += y[i] * s;
    yc += y[i] * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (ys * cc - yc * sc) / det;
  const double b = (yc * ss - ys * sc) / det;
  return std::hypot(a, b);
}

double db(double gain) { return 20.0 * std::log10(gain); }

Outcome filter_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::ostringstream detail;
  // Cutoff attenuation at the default cutoff and at a low one.
  for (int order : {2, 4}) {
    for (double fc : {0.1, 0.01}) {
      const auto sos = design_butterworth_lowpass({order, fc});
      const double at_cut = db(measured_gain(sos, fc));
      const bool pass = std::abs(at_cut - (-3.0103)) <= 0.1;
      ok = ok && pass;
      detail << "n=" << order << " fc=" << fc << ": " << num(at_cut, 3) << " dB at cutoff; ";
    }
  }
  // Analytic magnitude curve at five probes around a low cutoff, where the
  // bilinear frequency warping stays far below the tolerance.
  const double fc = 0.01;
  for (int order : {2, 4}) {
    const auto sos = design_butterworth_lowpass({order, fc});
    double worst = 0.0;
    for (double r : {0.25, 0.5, 1.0, 1.5, 2.0}) {
      const double f = r * fc;
      const double analytic = 1.0 / std::sqrt(1.0 + std::pow(f / fc, 2.0 * order));
      worst = std::max(worst, std::abs(db(measured_gain(sos, f)) - db(analytic)));
    }
    ok = ok && worst <= 0.5;
    detail << "n=" << order << " worst probe deviation " << num(worst, 3) << " dB; ";
  }
  const double secs = elapsed(t0);
  ok = ok && secs < 5.0;
  detail << num(secs, 2) << " s";
  return {ok, detail.str()};
}

// ---------------------------------------------------------------------------

Outcome normalization() {
  ConfigOverrides o;
  o.out = (g_work / "normalization").string();
  const auto cfg = config_from_yaml("", o);
  const auto series = preprocess_cohort(load_cohort(cfg), cfg);
  double worst_mean = 0, worst_sd = 0;
  for (const auto& s : series) {
    double sum = 0, n = 0;
    for (const auto& v : s.gsr)
      if (v) {
        sum += *v;
        ++n;
      }
    const double mean = sum / n;
    double sq = 0;
    for (const auto& v : s.gsr)
      if (v) sq += (*v - mean) * (*v - mean);
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_sd = std::max(worst_sd, std::abs(std::sqrt(sq / n) - 1.0));
  }
  std::ostringstream d;
  d << series.size() << " subjects, max |mean| " << worst_mean << ", max |sd-1| " << worst_sd;
  return {!series.empty() && worst_mean < 1e-9 && worst_sd < 1e-6, d.str()};
}

// ---------------------------------------------------------------------------

Outcome split_integrity() {
  double worst_prev = 0, worst_frac_blocks = 0;
  std::size_t shared = 0, overlap = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ConfigOverrides o;
    o.seed = seed;
    o.out = (g_work / "split").string();
    o.force = true;
    const auto cfg = config_from_yaml("", o);
    const auto data = prepare_dataset(cfg);
    const auto& windows = data.windows;
    const auto& split = data.split;
    const std::array<const std::vector<std::size_t>*, 3> parts{&split.train, &split.val, &split.test};

    std::set<std::size_t> seen;
    for (const auto* p : parts)
      for (auto i : *p) overlap += seen.insert(i).second ? 0 : 1;

    std::map<std::pair<std::string, std::size_t>, int> owner;
    for (int s = 0; s < 3; ++s)
      for (auto i : *parts[s])
        for (std::size_t g = 0; g < windows[i].width(); ++g) {
          auto [it, inserted] = owner.try_emplace({windows[i].subject_id, windows[i].start_index + g}, s);
          if (it->second != s) ++shared;
        }

    std::size_t hypo_all = 0;
    for (const auto& w : windows) hypo_all += w.label == GlycemicLabel::kHypo;
    const double prevalence = double(hypo_all) / double(windows.size());
    const double used = double(split.train.size() + split.val.size() + split.test.size());
    for (int s = 0; s < 3; ++s) {
      std::size_t h = 0;
      for (auto i : *parts[s]) h += windows[i].label == GlycemicLabel::kHypo;
      worst_prev = std::max(worst_prev, std::abs(double(h) / double(parts[s]->size()) - prevalence));
      const double off = std::abs(double(parts[s]->size()) - cfg.split.fractions[s] * used);
      worst_frac_blocks = std::max(worst_frac_blocks, off / double(split.max_block_windows));
    }
  }
  const bool ok = overlap == 0 && shared == 0 && worst_prev <= 0.01 && worst_frac_blocks <= 1.0;
  std::ostringstream d;
  d << "20 seeds: " << overlap << " shared windows, " << shared << " shared grid indices, "
    << "worst hypo-fraction gap " << num(100 * worst_prev, 3) << " pp, worst size error "
    << num(worst_frac_blocks, 2) << " blocks";
  return {ok, d.str()};
}

// ---------------------------------------------------------------------------

Outcome gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, double> worst;
  const TrainConfig cfg;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    const std::size_t batch = 16;
    ad::Matrix x(batch, 12);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
    std::vector<double> y(batch), w(batch);
    for (std::size_t i = 0; i < batch; ++i) {
      y[i] = i % 4 == 0 ? 1.0 : 0.0;
      w[i] = y[i] == 1.0 ? 2.0 : 0.67;
    }
    for (auto [arch, name] : {std::pair{Architecture::kMlp, "mlp"}, {Architecture::kCnn, "cnn"},
                              {Architecture::kLstm, "lstm"}}) {
      Network net(NetworkSpec::from(arch, 12, cfg), derive_seed(seed, name));
      testing::jitter_biases(net, seed);
      worst[name] = std::max(worst[name], testing::network_gradient_error(net, x, y, w));
    }

    std::vector<double> values(x.data(), x.data() + x.size());
    const auto fm = FeatureMatrix::from_rows(FeatureLayout::kSequence, 12, values);
    std::vector<int> yi(y.begin(), y.end());
    const auto cw = class_weights(yi);
    std::vector<double> coef(12);
    for (auto& c : coef) c = n(rng);
    const double b = n(rng);
    std::vector<double> gw;
    double gb = 0;
    logreg_objective(fm, yi, cw, 0.01, coef, b, &gw, &gb);
    const double h = 1e-5;
    for (std::size_t j = 0; j <= coef.size(); ++j) {
      auto cp = coef, cm = coef;
      double bp = b, bm = b;
      if (j < coef.size()) {
        cp[j] += h;
        cm[j] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double num = (logreg_objective(fm, yi, cw, 0.01, cp, bp, nullptr, nullptr) -
                          logreg_objective(fm, yi, cw, 0.01, cm, bm, nullptr, nullptr)) /
                         (2 * h);
      worst["logreg"] = std::max(worst["logreg"],
                                 testing::relative_error(j < coef.size() ? gw[j] : gb, num));
    }
  }
  const double secs = elapsed(t0);
  bool ok = secs < 60.0;
  std::ostringstream d;
  d << "5 seeds, max relative error:";
  for (const auto& [name, err] : worst) {
    ok = ok && err < 1e-4;
    d << " " << name << "=" << err;
  }
  d << ", " << num(secs, 1) << " s";
  return {ok, d.str()};
}

// ---------------------------------------------------------------------------

Outcome auc_oracle() {
  std::mt19937_64 rng(77);
  std::size_t mismatches = 0, tie_heavy = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    const bool ties = trial % 2 == 0;
    const int levels = ties ? 1 + static_cast<int>(rng() % 5) : 1'000'000;
    tie_heavy += ties;
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % static_cast<std::uint64_t>(levels)) / 13.0;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[rng() % n] = 1;
    if (std::count(y.begin(), y.end(), 0) == 0) y[rng() % n] = 0;
    if (std::count(y.begin(), y.end(), 1) == 0) y[0] = 1, y[1] = 0;
    std::uint64_t wins2 = 0, pos = 0, neg = 0;
    for (std::size_t i = 0; i < n; ++i) {
      pos += y[i] == 1;
      neg += y[i] == 0;
      for (std::size_t j = 0; j < n; ++j)
        if (y[i] == 1 && y[j] == 0) wins2 += s[i] > s[j] ? 2 : (s[i] == s[j] ? 1 : 0);
    }
    const double brute = static_cast<double>(wins2) / (2.0 * double(pos) * double(neg));
    if (auc_twice_u(s, y) != wins2 || roc_auc(s, y) != brute) ++mismatches;
  }
  return {mismatches == 0, "500 instances (" + std::to_string(tie_heavy) + " tie-heavy), " +
                               std::to_string(mismatches) + " mismatches"};
}

// ---------------------------------------------------------------------------

Outcome bootstrap_coverage() {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t covered = 0;
  ConfidenceInterval first;
  std::vector<double> first_scores;
  std::vector<int> first_pred, first_y;
  for (int trial = 0; trial < 200; ++trial) {
    std::mt19937_64 rng(derive_seed(1234, static_cast<std::uint64_t>(trial)));
    std::bernoulli_distribution hypo(0.3), correct(0.8);
    std::uniform_real_distribution<double> u;
    std::vector<int> y(1000), pred(1000);
    std::vector<double> scores(1000);
    for (std::size_t i = 0; i < 1000; ++i) {
      y[i] = hypo(rng);
      pred[i] = correct(rng) ? y[i] : 1 - y[i];
      scores[i] = 0.5 * pred[i] + 0.5 * u(rng);
    }
    const auto ci = stratified_bootstrap_ci(scores, pred, y, Metric::kAccuracy,
                                            PositiveClass::kHypo, 1000, 0.95, 555 + trial);
    covered += ci.low <= 0.8 && 0.8 <= ci.high;
    if (trial == 0) {
      first = ci;
      first_scores = scores;
      first_pred = pred;
      first_y = y;
    }
  }
  const auto again = stratified_bootstrap_ci(first_scores, first_pred, first_y, Metric::kAccuracy,
                                             PositiveClass::kHypo, 1000, 0.95, 555);
  const double secs = elapsed(t0);
  const double rate = double(covered) / 200.0;
  return {rate >= 0.9 && again == first && secs < 120.0,
          "coverage " + num(rate, 3) + " over 200 trials, repeat seed " +
              (again == first ? "identical" : "DIFFERENT") + ", " + num(secs, 1) + " s"};
}

// ---------------------------------------------------------------------------

RunConfig experiment_config(const std::string& name, ConfigOverrides o) {
  o.out = (g_work / name).string();
  o.force = true;
  o.sets.push_back("eval.bootstrap_iterations=1000");
  return config_from_yaml("", o);
}

const CellResult* find_cell(const EvaluationReport& r, Family f, FeatureLayout m) {
  for (const auto& c : r.cells)
    if (c.family == f && c.mode == m) return &c;
  return nullptr;
}

Outcome ablation_direction() {
  ConfigOverrides o;
  o.seed = 7;
  o.models = "lstm,cnn";
  o.feature_mode = "both";
  o.sets = {"data.synth.coupling=0.9"};
  const auto cfg = experiment_config("ablation", o);
  const auto data = prepare_dataset(cfg);
  const auto report = run_experiment(cfg, data);
  write_outputs(cfg, report);
  bool ok = true;
  std::ostringstream d;
  for (Family f : {Family::kLstm, Family::kCnn}) {
    const auto* seq = find_cell(report, f, FeatureLayout::kSequence);
    const auto* st = find_cell(report, f, FeatureLayout::kStatic);
    if (!seq || !st || !seq->ok() || !st->ok()) {
      ok = false;
      d << family_name(f) << ": cell failed; ";
      continue;
    }
    const double a = seq->test->hypo.auc.value, b = st->test->hypo.auc.value;
    ok = ok && a - b >= 0.05;
    d << family_name(f) << " sequence " << num(a) << " vs static " << num(b) << " (+"
      << num(a - b) << "); ";
  }
  return {ok, d.str()};
}

// ---------------------------------------------------------------------------

Outcome imbalance_mechanics() {
  auto run = [](const std::string& name, bool handled) {
    ConfigOverrides o;
    o.seed = 7;
    o.models = "lstm";
    o.feature_mode = "sequence";
    if (!handled) o.sets = {"train.class_weights=false", "train.balanced_batches=false"};
    const auto cfg = experiment_config(name, o);
    const auto data = prepare_dataset(cfg);
    return run_cell(cfg, data, {Family::kLstm, FeatureLayout::kSequence});
  };
  const auto with = run("imbalance_weighted", true);
  const auto without = run("imbalance_plain", false);
  if (!with.ok() || !without.ok())
    return {false, "cell failed: " + with.error + without.error};
  const double r1 = with.test->hypo.recall.value, r0 = without.test->hypo.recall.value;
  return {r1 >= 0.5 && r0 < r1, "hypo recall weighted+balanced " + num(r1) +
                                    ", unweighted+unbalanced " + num(r0) + ", test prevalence " +
                                    num(double(with.test->n_hypo) / double(with.test->n))};
}

// ---------------------------------------------------------------------------

Outcome no_signal_control() {
  ConfigOverrides o;
  o.seed = 7;
  o.sets = {"data.synth.coupling=0"};
  const auto cfg = experiment_config("no_signal", o);
  const auto data = prepare_dataset(cfg);
  const auto report = run_experiment(cfg, data);
  write_outputs(cfg, report);
  bool ok = true;
  std::ostringstream d;
  std::size_t contained = 0;
  for (const auto& c : report.cells) {
    if (!c.ok() || !c.test->hypo.auc.ci) {
      ok = false;
      d << c.key() << " has no AUC interval; ";
      continue;
    }
    const auto& ci = *c.test->hypo.auc.ci;
    const bool in = ci.low <= 0.5 && 0.5 <= ci.high;
    contained += in;
    ok = ok && in;
    if (!in) d << c.key() << " [" << num(ci.low) << ", " << num(ci.high) << "] excludes 0.5; ";
  }
  d << contained << "/" << report.cells.size() << " AUC intervals contain 0.5";
  return {ok, d.str()};
}

// ---------------------------------------------------------------------------

Outcome end_to_end() {
  std::vector<std::string> bytes;
  std::vector<double> secs;
  for (const char* name : {"e2e_a", "e2e_b"}) {
    const std::string out = (g_work / name).string();
    fs::remove_all(out);
    const auto t0 = std::chrono::steady_clock::now();
    const int code = run_cli({"hypogsr", "evaluate", "--synthetic", "--seed", "7", "--out", out,
                              "--force", "--log-level", "warn"});
    secs.push_back(elapsed(t0));
    if (code != 0) return {false, std::string(name) + " exited with " + std::to_string(code)};
    bytes.push_back(read_file(fs::path(out) / "report.json"));
  }
  const auto report = parse_report_json(bytes[0]);
  std::size_t ok_cells = 0;
  for (const auto& c : report.cells) ok_cells += c.ok();
  const bool same = bytes[0] == bytes[1];
  const bool pass = same && secs[0] < 600 && secs[1] < 600 && report.cells.size() == 14 &&
                    ok_cells == 14;
  return {pass, std::to_string(report.n_windows) + " windows, " + std::to_string(ok_cells) +
                    "/14 cells ok, runs " + num(secs[0], 1) + " s and " + num(secs[1], 1) +
                    " s, report.json " + (same ? "byte-identical" : "DIFFERS")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hypogsr acceptance suite"};
  std::string work = (fs::temp_directory_path() / "hypogsr_acceptance").string();
  std::vector<int> only;
  app.add_option("--work-dir", work, "scratch directory for experiment outputs");
  app.add_option("--only", only, "run only these criterion numbers");
  CLI11_PARSE(app, argc, argv);
  g_work = work;
  fs::create_directories(g_work);
  spdlog::set_level(spdlog::level::warn);

  const std::vector<Criterion> criteria{
      {1, "labeling exactness", labeling_exactness},
      {2, "filter correctness", filter_correctness},
      {3, "normalization post-conditions", normalization},
      {4, "split integrity", split_integrity},
      {5, "gradient oracle", gradient_oracle},
      {6, "auc oracle", auc_oracle},
      {7, "bootstrap coverage", bootstrap_coverage},
      {8, "sequence beats static", ablation_direction},
      {9, "imbalance mechanics", imbalance_mechanics},
      {10, "no-signal control", no_signal_control},
      {11, "end-to-end determinism and scale", end_to_end},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << std::setw(2) << c.id << " " << c.name
              << ": " << o.detail << " [" << num(elapsed(t0), 1) << " s]" << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
