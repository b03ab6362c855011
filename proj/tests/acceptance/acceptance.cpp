/*
 * Copyright 2026 The unisel Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance checks, one PASS/FAIL/SKIP line per criterion.
//
//   acceptance --group core    oracle suites and the synthetic blob contrast
//   acceptance --group odds    desk-scale benchmark datasets read from
//                              $UNISEL_DATA_DIR (default <repo>/data)
//
// Exit status: 1 if any criterion fails, 77 if none failed but some were
// skipped, 0 otherwise.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>

#include "oracles.hpp"
#include "unisel/active.hpp"
#include "unisel/data.hpp"
#include "unisel/harness.hpp"
#include "unisel/kmeans.hpp"
#include "unisel/metrics.hpp"
#include "unisel/selection.hpp"

namespace fs = std::filesystem;
using namespace unisel;

namespace {

// Tolerances. Bands are centre +/- width unless noted.
constexpr int kLloydInstances = 150;
constexpr int kFuzzCases = 20000;
constexpr std::size_t kTrials = 10;
constexpr std::uint64_t kMasterSeed = 20240601;

constexpr double kMuskCentre = 1.000, kMuskSelectionWidth = 0.05, kMuskBaselineWidth = 0.02;
constexpr double kThyroidAlLow = 0.80, kThyroidAlHigh = 1.00;
constexpr double kThyroidBaselineCentre = 0.882, kThyroidBaselineWidth = 0.10;
constexpr double kSatimageAlLow = 0.85, kSatimageAlHigh = 1.00;
constexpr double kSatimageUniselRfM10Min = 0.45;
constexpr double kRandomRatioBand = 0.01;
constexpr double kBaselineBand = 0.15;  // absolute F1, i.e. 15 percentage points

constexpr std::size_t kBlobN = 2000;
constexpr double kBlobOutlierFraction = 0.03;
constexpr std::size_t kBlobDimension = 10;
constexpr std::size_t kBlobM = 100;
constexpr double kBlobUniselMin = 0.9, kBlobMargin = 0.2;

const std::vector<std::string> kDeskDatasets{"musk",     "thyroid",   "satimage-2", "vowels",
                                             "pendigits", "optdigits", "mammography"};

enum class Status { kPass, kFail, kSkip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::kPass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::kFail, std::move(d)}; }
Outcome check(bool ok, std::string d) { return {ok ? Status::kPass : Status::kFail, std::move(d)}; }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

bool within(double v, double centre, double width) { return std::abs(v - centre) <= width + 1e-12; }

// ---- core group -----------------------------------------------------------

Outcome elkan_matches_lloyd() {
  std::mt19937_64 rng(kMasterSeed);
  for (int c = 0; c < kLloydInstances; ++c) {
    const std::size_t n = 2 + rng() % 199, d = 1 + rng() % 8;
    const auto x = unisel::testing::random_matrix(rng, n, d, rng() % 2 == 0);
    const std::size_t k = 1 + rng() % std::min<std::size_t>(10, count_distinct_rows(x));
    const auto init = kmeans_pp_init(x, k, rng());
    const auto elkan = kmeans_fit_from(x, init, 300, 1e-4);
    const auto lloyd = unisel::testing::lloyd_reference(x, init, 300, 1e-4);
    if (elkan.assignments != lloyd.assignments || !(elkan.centroids == lloyd.centroids)) {
      return fail(fmt("instance %d (n=%zu d=%zu k=%zu) differs", c, n, d, k));
    }
  }
  return pass(fmt("%d random instances, n<=200 d<=8 k<=10, identical assignments and centroids", kLloydInstances));
}

Outcome unisel_prototype_property() {
  const auto four = unisel_select(Matrix::from_rows({{0}, {1}, {10}, {11}}), 2, 1).indices;
  const std::set<std::size_t> got(four.begin(), four.end());
  if (got != std::set<std::size_t>{0, 2}) return fail("{0,1,10,11} with m=2 did not select {0,2}");
  std::mt19937_64 rng(kMasterSeed + 1);
  int fits = 0;
  for (; fits < 100; ++fits) {
    const auto x = unisel::testing::random_matrix(rng, 10 + rng() % 190, 1 + rng() % 8, fits % 2 == 0);
    const std::size_t m = 1 + rng() % std::min<std::size_t>(20, count_distinct_rows(x));
    const auto model = kmeans_fit(x, {.k = m, .n_init = 3, .seed = rng()});
    const auto protos = cluster_prototypes(x, model);
    for (std::size_t c = 0; c < m; ++c) {
      std::size_t best = x.rows();
      double best_d = 0;
      for (std::size_t j = 0; j < x.rows(); ++j) {
        if (model.assignments[j] != c) continue;
        const double dj = squared_distance(x.row(j), model.centroids.row(c));
        if (best == x.rows() || dj < best_d) best = j, best_d = dj;
      }
      if (protos[c] != best) return fail(fmt("fit %d cluster %zu: prototype %zu, scan %zu", fits, c, protos[c], best));
    }
  }
  return pass(fmt("{0,1,10,11} -> {0,2}; %d fits match the exhaustive within-cluster scan", fits));
}

Outcome select_query_matches_brute_force() {
  std::mt19937_64 rng(kMasterSeed + 2);
  for (int t = 0; t < kFuzzCases; ++t) {
    const std::size_t n = 1 + rng() % 16;
    std::set<std::size_t> uniq;
    while (uniq.size() < n) uniq.insert(rng() % 64);
    IndexList c(uniq.begin(), uniq.end());
    std::shuffle(c.begin(), c.end(), rng);
    std::vector<double> p(n);
    for (auto& v : p) v = static_cast<double>(rng() % 21) / 20.0;
    if (select_query(p, c) != unisel::testing::argmin_uncertainty_oracle(p, c)) return fail(fmt("case %d", t));
  }
  return pass(fmt("%d fuzzed cases agree, ties to the lowest index", kFuzzCases));
}

Outcome f1_matches_oracle() {
  std::mt19937_64 rng(kMasterSeed + 3);
  for (int t = 0; t < kFuzzCases; ++t) {
    const std::size_t n = 1 + rng() % 50;
    const unsigned density = 1 + rng() % 8;
    std::vector<Label> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) a[i] = rng() % density == 0, b[i] = rng() % density == 0;
    if (std::abs(f1_score(a, b) - unisel::testing::f1_oracle(a, b)) > 1e-12) return fail(fmt("case %d", t));
  }
  if (f1_score(std::vector<Label>{0, 0, 0}, std::vector<Label>{0, 0, 0}) != 0.0) return fail("0/0 is not 0");
  if (f1_score(std::vector<Label>{1, 1, 0}, std::vector<Label>{0, 0, 0}) != 0.0) return fail("no positives predicted");
  return pass(fmt("%d fuzzed cases agree within 1e-12; zero denominators give 0", kFuzzCases));
}

Outcome determinism() {
  const Dataset ds = generate_synthetic(two_blob_outlier_spec(600, 0.04), kMasterSeed);
  ExperimentConfig config;
  config.m_values = {10, 40};
  config.trials = 3;
  config.master_seed = kMasterSeed;
  config.options.forest.n_trees = 30;
  const auto results = run_experiment({ds}, config);
  const auto rows = parse_trials_csv(format_trials_csv(results.trials));
  for (const auto& r : rows) {
    const auto again = r.technique == Technique::kBaseline ? run_baseline(ds, r.seed, config.options)
                                                           : run_trial(ds, r.technique, r.m, r.seed, config.options);
    if (again.f1 != r.f1 || !(again.confusion == r.confusion)) {
      return fail(fmt("%s m=%zu seed=%llu: %.17g vs %.17g", std::string(to_string(r.technique)).c_str(), r.m,
                      static_cast<unsigned long long>(r.seed), again.f1, r.f1));
    }
  }
  return pass(fmt("%zu persisted trials re-run from their seeds reproduce F1 bit-for-bit", rows.size()));
}

// Normal clusters at +-4 on feature 0; the outlier cluster sits about 9.8
// normal SDs away along the other nine features, with twice the spread, so
// no single feature separates it.
SyntheticSpec blob_spec() {
  SyntheticSpec spec;
  spec.name = "blobs";
  spec.dimension = kBlobDimension;
  spec.n_outlier = static_cast<std::size_t>(std::lround(kBlobN * kBlobOutlierFraction));
  spec.n_normal = kBlobN - spec.n_outlier;
  std::vector<double> left(kBlobDimension, 0.0), right(kBlobDimension, 0.0);
  left[0] = -4.0;
  right[0] = 4.0;
  spec.cluster_centers = {left, right};
  spec.cluster_spread = {1.0, 1.0};
  spec.outlier_center.assign(kBlobDimension, 3.0);
  spec.outlier_center[0] = 0.0;
  spec.outlier_spread = 2.0;
  return spec;
}

Outcome synthetic_blobs() {
  const Dataset ds = generate_synthetic(blob_spec(), kMasterSeed);
  std::vector<double> uni, rnd;
  for (std::size_t t = 0; t < kTrials; ++t) {
    uni.push_back(run_trial(ds, Technique::kUniselRf, kBlobM,
                            derive_trial_seed(kMasterSeed, ds.name(), Technique::kUniselRf, kBlobM, t))
                      .f1);
    rnd.push_back(run_trial(ds, Technique::kRandomRf, kBlobM,
                            derive_trial_seed(kMasterSeed, ds.name(), Technique::kRandomRf, kBlobM, t))
                      .f1);
  }
  const auto u = aggregate(uni), r = aggregate(rnd);
  return check(u.mean >= kBlobUniselMin && u.mean - r.mean >= kBlobMargin,
               fmt("n=%zu, d=%zu, %.0f%% outliers, m=%zu: UNISEL+RF %.3f (%.3f), Random+RF %.3f (%.3f); need >= %.2f and "
                   "margin >= %.2f",
                   kBlobN, kBlobDimension, kBlobOutlierFraction * 100, kBlobM, u.mean, u.sd, r.mean, r.sd, kBlobUniselMin, kBlobMargin));
}

// ---- odds group -----------------------------------------------------------

struct GridRun {
  std::optional<ExperimentResults> results;
  std::vector<std::string> missing;
};

GridRun run_odds_grid(const fs::path& dir, std::size_t threads) {
  GridRun run;
  ExperimentConfig config;
  config.trials = kTrials;
  config.master_seed = kMasterSeed;
  config.threads = threads;
  for (const auto& name : kDeskDatasets) {
    const auto path = dir / (name + ".csv");
    if (fs::exists(path)) {
      config.datasets.push_back(path);
    } else {
      run.missing.push_back(path.string());
    }
  }
  if (!run.missing.empty()) return run;
  const auto start = std::chrono::steady_clock::now();
  run.results = run_experiment(config);
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60;
  std::printf("# odds grid: %zu trials, %zu errors, %.1f min on %zu thread(s)\n", run.results->trials.size(),
              run.results->errors.size(), minutes, threads);
  if (const char* out = std::getenv("UNISEL_ACCEPTANCE_OUT")) write_results(*run.results, config, out);
  return run;
}

double mean_of(const ExperimentResults& r, const std::string& ds, Technique t, std::size_t m) {
  const auto* s = r.find(ds, t, m);
  return s && s->f1.trial_count == kTrials ? s->f1.mean : std::nan("");
}

double baseline_of(const ExperimentResults& r, const std::string& ds) {
  const auto* s = r.baseline(ds);
  return s && s->f1.trial_count == kTrials ? s->f1.mean : std::nan("");
}

Outcome musk(const ExperimentResults& r) {
  const double rf = mean_of(r, "musk", Technique::kUniselRf, 50), al = mean_of(r, "musk", Technique::kUniselAl, 50);
  const double base = baseline_of(r, "musk");
  return check(within(rf, kMuskCentre, kMuskSelectionWidth) && within(al, kMuskCentre, kMuskSelectionWidth) &&
                   within(base, kMuskCentre, kMuskBaselineWidth),
               fmt("UNISEL+RF@50 %.3f, UNISEL+AL@50 %.3f (need 1.000+-%.2f); baseline %.3f (need 1.000+-%.2f)", rf, al,
                   kMuskSelectionWidth, base, kMuskBaselineWidth));
}

Outcome thyroid(const ExperimentResults& r) {
  const double al = mean_of(r, "thyroid", Technique::kUniselAl, 50), base = baseline_of(r, "thyroid");
  return check(al >= kThyroidAlLow && al <= kThyroidAlHigh && within(base, kThyroidBaselineCentre, kThyroidBaselineWidth),
               fmt("UNISEL+AL@50 %.3f (need [%.2f, %.2f]); baseline %.3f (need %.3f+-%.2f)", al, kThyroidAlLow,
                   kThyroidAlHigh, base, kThyroidBaselineCentre, kThyroidBaselineWidth));
}

Outcome satimage(const ExperimentResults& r) {
  const double al = mean_of(r, "satimage-2", Technique::kUniselAl, 50);
  const double rf10 = mean_of(r, "satimage-2", Technique::kUniselRf, 10);
  return check(al >= kSatimageAlLow && al <= kSatimageAlHigh && rf10 >= kSatimageUniselRfM10Min,
               fmt("UNISEL+AL@50 %.3f (need [%.2f, %.2f]); UNISEL+RF@10 %.3f (need >= %.2f)", al, kSatimageAlLow,
                   kSatimageAlHigh, rf10, kSatimageUniselRfM10Min));
}

double cross_mean(const ExperimentResults& r, Technique t, std::size_t m) {
  const auto* c = r.cross(t, m);
  return c && c->datasets == kDeskDatasets.size() ? c->mean_of_means : std::nan("");
}

Outcome ordering(const ExperimentResults& r) {
  bool ok = true;
  std::string detail;
  for (std::size_t m : {50u, 100u}) {
    const double rr = cross_mean(r, Technique::kRandomRf, m), ur = cross_mean(r, Technique::kUniselRf, m);
    const double ra = cross_mean(r, Technique::kRandomAl, m), ua = cross_mean(r, Technique::kUniselAl, m);
    ok = ok && ua > rr && ur > rr;
    if (m == 50) ok = ok && ua > ur && ua > ra;
    detail += fmt("m=%zu RR %.3f UR %.3f RA %.3f UA %.3f; ", m, rr, ur, ra, ua);
  }
  return check(ok, detail + "need UA>RR, UR>RR at 50 and 100, UA top at 50");
}

Outcome ratio_differences(const ExperimentResults& r) {
  bool ok = true;
  std::string detail;
  for (std::size_t m : ExperimentConfig{}.m_values) {
    const auto* rr = r.cross(Technique::kRandomRf, m);
    const auto* ur = r.cross(Technique::kUniselRf, m);
    const double rv = rr ? rr->mean_ratio_diff : std::nan(""), uv = ur ? ur->mean_ratio_diff : std::nan("");
    ok = ok && std::abs(rv) <= kRandomRatioBand;
    if (m <= 100) ok = ok && uv > rv;
    detail += fmt("m=%zu RR %+.4f UR %+.4f; ", m, rv, uv);
  }
  return check(ok, detail + fmt("need |RR| <= %.2f everywhere and UR > RR for m <= 100", kRandomRatioBand));
}

Outcome convergence(const ExperimentResults& r) {
  std::string misses;
  int cells = 0, outside = 0;
  for (const auto& ds : kDeskDatasets) {
    const double base = baseline_of(r, ds);
    const bool hard = ds == "mammography" || ds == "vowels";
    for (Technique t : kSelectionTechniques) {
      if (hard && (t == Technique::kRandomRf || t == Technique::kUniselRf)) continue;
      ++cells;
      const double v = mean_of(r, ds, t, 1000);
      if (!(std::abs(v - base) <= kBaselineBand)) {
        ++outside;
        misses += fmt("%s%s/%s %.3f vs %.3f", misses.empty() ? "" : ", ", ds.c_str(),
                      std::string(to_string(t)).c_str(), v, base);
      }
    }
  }
  return check(misses.empty(), fmt("%d of %d cells at m=1000 within %.0f points of baseline", cells - outside, cells,
                                   kBaselineBand * 100) +
                                   (misses.empty() ? std::string() : "; outside: " + misses));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string group = "core";
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  std::string data_dir = std::getenv("UNISEL_DATA_DIR") ? std::getenv("UNISEL_DATA_DIR") : UNISEL_DEFAULT_DATA_DIR;
  app.add_option("--group", group)->check(CLI::IsMember({"core", "odds", "all"}));
  app.add_option("--threads", threads);
  app.add_option("--data-dir", data_dir);
  CLI11_PARSE(app, argc, argv);

  int failed = 0, skipped = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    const char* tag = o.status == Status::kPass ? "PASS" : o.status == Status::kFail ? "FAIL" : "SKIP";
    failed += o.status == Status::kFail;
    skipped += o.status == Status::kSkip;
    std::printf("%s  criterion %2d  %-28s %s\n", tag, id, name, o.detail.c_str());
    std::fflush(stdout);
  };
  auto guarded = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    try {
      report(id, name, fn());
    } catch (const std::exception& e) {
      report(id, name, fail(std::string("threw: ") + e.what()));
    }
  };

  if (group == "core" || group == "all") {
    guarded(1, "elkan_matches_lloyd", elkan_matches_lloyd);
    guarded(2, "unisel_prototypes", unisel_prototype_property);
    guarded(3, "uncertainty_argmin", select_query_matches_brute_force);
    guarded(4, "f1_oracle", f1_matches_oracle);
    guarded(5, "trial_determinism", determinism);
    guarded(12, "synthetic_blob_contrast", synthetic_blobs);
  }
  if (group == "odds" || group == "all") {
    const std::vector<std::pair<int, const char*>> ids{{6, "musk"},    {7, "thyroid"},           {8, "satimage-2"},
                                                       {9, "ordering"}, {10, "ratio_differences"}, {11, "baseline_convergence"}};
    GridRun run;
    try {
      run = run_odds_grid(data_dir, threads);
    } catch (const std::exception& e) {
      for (auto [id, name] : ids) report(id, name, fail(std::string("grid failed: ") + e.what()));
      return 1;
    }
    if (!run.results) {
      std::string missing;
      for (const auto& m : run.missing) missing += (missing.empty() ? "" : " ") + fs::path(m).filename().string();
      const std::string why = fmt("%zu of %zu dataset files missing from %s: ", run.missing.size(), kDeskDatasets.size(),
                                  data_dir.c_str()) + missing;
      for (auto [id, name] : ids) report(id, name, {Status::kSkip, why});
    } else {
      const auto& r = *run.results;
      guarded(6, ids[0].second, [&] { return musk(r); });
      guarded(7, ids[1].second, [&] { return thyroid(r); });
      guarded(8, ids[2].second, [&] { return satimage(r); });
      guarded(9, ids[3].second, [&] { return ordering(r); });
      guarded(10, ids[4].second, [&] { return ratio_differences(r); });
      guarded(11, ids[5].second, [&] { return convergence(r); });
    }
  }
  return failed ? 1 : skipped ? 77 : 0;
}
