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

#include "unisel/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "unisel/error.hpp"
#include "unisel/parallel.hpp"
#include "unisel/random.hpp"
#include "unisel/selection.hpp"

namespace unisel {

namespace {

using json = nlohmann::json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string normalized_name(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(c));
  }
  return out;
}

std::vector<LabeledInstance> truth_labels(const IndexList& indices, const std::vector<Label>& truth) {
  std::vector<LabeledInstance> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back({i, truth[i], LabelSource::kBatch});
  return out;
}

}  // namespace

std::string_view to_string(Technique t) {
  switch (t) {
    case Technique::kRandomRf: return "random_rf";
    case Technique::kUniselRf: return "unisel_rf";
    case Technique::kRandomAl: return "random_al";
    case Technique::kUniselAl: return "unisel_al";
    case Technique::kBaseline: return "baseline";
  }
  return "unknown";
}

Technique parse_technique(std::string_view name) {
  for (Technique t : {Technique::kRandomRf, Technique::kUniselRf, Technique::kRandomAl,
                      Technique::kUniselAl, Technique::kBaseline}) {
    if (to_string(t) == name) return t;
  }
  fail(ErrorCode::kInvalidArgument, "unknown technique '" + std::string(name) +
                                        "' (expected random_rf, unisel_rf, random_al, unisel_al, baseline)");
}

TrialSeeds trial_seeds(std::uint64_t trial_seed) {
  return {derive_seed(trial_seed, "split"), derive_seed(trial_seed, "selection"),
          derive_seed(trial_seed, "forest")};
}

std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::string_view dataset, Technique technique,
                                std::size_t m, std::size_t trial) {
  std::uint64_t s = derive_seed(master_seed, dataset);
  s = derive_seed(s, to_string(technique));
  s = derive_seed(s, static_cast<std::uint64_t>(m));
  return derive_seed(s, static_cast<std::uint64_t>(trial));
}

TrialDetail run_trial_detailed(const Dataset& ds, Technique technique, std::size_t m,
                               std::uint64_t trial_seed, const HarnessOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const TrialSeeds seeds = trial_seeds(trial_seed);

  TrialDetail detail;
  detail.split = stratified_split(ds, options.test_fraction, seeds.split);
  const IndexList& train = detail.split.train_indices;
  const IndexList& test = detail.split.test_indices;
  const Matrix pool = ds.features().select_rows(train);
  std::vector<Label> pool_truth(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) pool_truth[i] = ds.labels()[train[i]];

  if (technique == Technique::kBaseline) m = pool.rows();
  require(m >= 1, ErrorCode::kInvalidArgument, "trial: m must be >= 1");
  require(m <= pool.rows(), ErrorCode::kInvalidArgument,
          "trial: m=" + std::to_string(m) + " exceeds training size " + std::to_string(pool.rows()));

  ForestConfig forest = options.forest;
  forest.seed = seeds.forest;

  std::vector<LabeledInstance> labeled;
  ForestModel model;
  switch (technique) {
    case Technique::kBaseline: {
      IndexList all(pool.rows());
      for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
      labeled = truth_labels(all, pool_truth);
      model = train_on_labels(pool, labeled, forest);
      break;
    }
    case Technique::kRandomRf:
    case Technique::kUniselRf: {
      const auto selection = technique == Technique::kRandomRf
                                 ? random_select(pool.rows(), m, seeds.selection)
                                 : unisel_select(pool, m, seeds.selection, options.kmeans);
      labeled = truth_labels(selection.indices, pool_truth);
      model = train_on_labels(pool, labeled, forest);
      break;
    }
    case Technique::kRandomAl:
    case Technique::kUniselAl: {
      const std::size_t init_size = m / 2;
      IndexList init;
      if (init_size > 0) {
        init = technique == Technique::kRandomAl
                   ? random_select(pool.rows(), init_size, seeds.selection).indices
                   : unisel_select(pool, init_size, seeds.selection, options.kmeans).indices;
      }
      GroundTruthOracle oracle(pool_truth);
      auto al = run_active_learning(pool, oracle, m, init, forest);
      labeled = std::move(al.labeled);
      detail.trace = std::move(al.trace);
      model = std::move(al.model);
      break;
    }
  }

  const Matrix test_x = ds.features().select_rows(test);
  std::vector<Label> test_truth(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) test_truth[i] = ds.labels()[test[i]];
  detail.test_predictions = model.predict(test_x);

  for (const auto& l : labeled) {
    detail.selected.push_back(train[l.index]);
    detail.selected_labels.push_back(l.label);
  }

  TrialResult& r = detail.result;
  r.dataset = ds.name();
  r.technique = technique;
  r.m = m;
  r.seed = trial_seed;
  r.confusion = confusion(test_truth, detail.test_predictions);
  r.f1 = f1_score(r.confusion);
  const bool has_normal = std::find(detail.selected_labels.begin(), detail.selected_labels.end(), 0) !=
                          detail.selected_labels.end();
  r.ratio_diff = has_normal ? ratio_difference(ds.labels(), detail.selected_labels)
                            : std::numeric_limits<double>::quiet_NaN();
  r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return detail;
}

TrialResult run_trial(const Dataset& ds, Technique technique, std::size_t m, std::uint64_t trial_seed,
                      const HarnessOptions& options) {
  return run_trial_detailed(ds, technique, m, trial_seed, options).result;
}

TrialResult run_baseline(const Dataset& ds, std::uint64_t trial_seed, const HarnessOptions& options) {
  return run_trial(ds, Technique::kBaseline, 0, trial_seed, options);
}

Profile parse_profile(std::string_view name) {
  if (name == "desk") return Profile::kDesk;
  if (name == "full") return Profile::kFull;
  fail(ErrorCode::kInvalidArgument, "unknown profile '" + std::string(name) + "' (expected desk or full)");
}

bool is_large_dataset(std::string_view name) {
  const auto n = normalized_name(name);
  return n == "http" || n == "forestcover" || n == "cover" || n == "covertype";
}

ExperimentConfig parse_experiment_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  ExperimentConfig config;
  try {
    const json j = json::parse(json_text);
    for (const auto& p : j.at("datasets")) {
      std::filesystem::path path = p.get<std::string>();
      if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
      config.datasets.push_back(path);
    }
    if (j.contains("techniques")) {
      config.techniques.clear();
      for (const auto& t : j["techniques"]) config.techniques.push_back(parse_technique(t.get<std::string>()));
    }
    if (j.contains("m_values")) config.m_values = j["m_values"].get<std::vector<std::size_t>>();
    config.trials = j.value("trials", config.trials);
    config.master_seed = j.value("master_seed", config.master_seed);
    if (j.contains("output_dir")) {
      std::filesystem::path out = j["output_dir"].get<std::string>();
      if (out.is_relative() && !base_dir.empty()) out = base_dir / out;
      config.output_dir = out;
    }
    if (j.contains("profile")) config.profile = parse_profile(j["profile"].get<std::string>());
    config.threads = j.value("threads", config.threads);
    config.standardize = j.value("standardize", config.standardize);
    config.options.test_fraction = j.value("test_fraction", config.options.test_fraction);
    if (j.contains("forest")) {
      const auto& f = j["forest"];
      config.options.forest.n_trees = f.value("n_trees", config.options.forest.n_trees);
      config.options.forest.max_features = f.value("max_features", config.options.forest.max_features);
      config.options.forest.bootstrap = f.value("bootstrap", config.options.forest.bootstrap);
    }
    if (j.contains("kmeans")) {
      const auto& k = j["kmeans"];
      config.options.kmeans.n_init = k.value("n_init", config.options.kmeans.n_init);
      config.options.kmeans.max_iter = k.value("max_iter", config.options.kmeans.max_iter);
      config.options.kmeans.tol = k.value("tol", config.options.kmeans.tol);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("experiment config: ") + e.what());
  }
  require(config.trials >= 1, ErrorCode::kInvalidArgument, "experiment config: trials must be >= 1");
  for (std::size_t m : config.m_values) {
    require(m >= 1, ErrorCode::kInvalidArgument, "experiment config: m values must be positive");
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str(), path.parent_path());
}

const CombinationSummary* ExperimentResults::find(std::string_view dataset, Technique t, std::size_t m) const {
  for (const auto& c : combinations) {
    if (c.dataset == dataset && c.technique == t && c.m == m) return &c;
  }
  return nullptr;
}

const CombinationSummary* ExperimentResults::baseline(std::string_view dataset) const {
  for (const auto& c : baselines) {
    if (c.dataset == dataset) return &c;
  }
  return nullptr;
}

const CrossDatasetSummary* ExperimentResults::cross(Technique t, std::size_t m) const {
  for (const auto& c : cross_dataset) {
    if (c.technique == t && c.m == m) return &c;
  }
  return nullptr;
}

void summarize(ExperimentResults& results, const std::vector<std::string>& dataset_order,
               const ExperimentConfig& config) {
  results.combinations.clear();
  results.baselines.clear();
  results.cross_dataset.clear();
  results.percent_change.clear();

  auto collect = [&](const std::string& dataset, Technique t, std::optional<std::size_t> m) {
    CombinationSummary s;
    s.dataset = dataset;
    s.technique = t;
    std::vector<double> f1, ratio;
    double m_total = 0.0;
    for (const auto& r : results.trials) {
      if (r.dataset != dataset || r.technique != t || (m && r.m != *m)) continue;
      f1.push_back(r.f1);
      if (std::isfinite(r.ratio_diff)) ratio.push_back(r.ratio_diff);
      m_total += static_cast<double>(r.m);
    }
    for (const auto& e : results.errors) {
      if (e.dataset == dataset && e.technique == t && (!m || e.m == *m)) ++s.errors;
    }
    if (f1.empty() && s.errors == 0) return std::optional<CombinationSummary>{};
    if (f1.empty()) {
      // Every trial failed: keep the row so the failure shows in the tables.
      s.m = m.value_or(0);
      s.f1.mean = s.f1.sd = std::numeric_limits<double>::quiet_NaN();
      return std::optional<CombinationSummary>{s};
    }
    s.m = m ? *m : static_cast<std::size_t>(std::lround(m_total / static_cast<double>(f1.size())));
    s.f1 = aggregate(f1);
    if (!ratio.empty()) s.ratio_diff = aggregate(ratio);
    return std::optional<CombinationSummary>{s};
  };

  for (const auto& dataset : dataset_order) {
    for (Technique t : config.techniques) {
      if (t == Technique::kBaseline) {
        if (auto s = collect(dataset, t, std::nullopt)) results.baselines.push_back(*s);
        continue;
      }
      for (std::size_t m : config.m_values) {
        if (auto s = collect(dataset, t, m)) results.combinations.push_back(*s);
      }
    }
  }

  for (Technique t : config.techniques) {
    if (t == Technique::kBaseline) continue;
    for (std::size_t m : config.m_values) {
      CrossDatasetSummary c;
      c.technique = t;
      c.m = m;
      double ratio_sum = 0.0;
      std::size_t ratio_count = 0;
      for (const auto& s : results.combinations) {
        if (s.technique != t || s.m != m || s.f1.trial_count == 0) continue;
        c.mean_of_means += s.f1.mean;
        c.mean_of_sds += s.f1.sd;
        ++c.datasets;
        if (s.ratio_diff) {
          ratio_sum += s.ratio_diff->mean;
          ++ratio_count;
        }
      }
      if (c.datasets == 0) continue;
      c.mean_of_means /= static_cast<double>(c.datasets);
      c.mean_of_sds /= static_cast<double>(c.datasets);
      c.mean_ratio_diff = ratio_count ? ratio_sum / static_cast<double>(ratio_count)
                                      : std::numeric_limits<double>::quiet_NaN();
      results.cross_dataset.push_back(c);
    }
  }

  for (const auto& s : results.combinations) {
    const auto* base = results.baseline(s.dataset);
    if (!base || base->f1.trial_count == 0 || s.f1.trial_count == 0) continue;
    PercentChange p{s.dataset, s.technique, s.m, std::nullopt};
    if (base->f1.mean > 0.0) p.value = percent_change(s.f1.mean, base->f1.mean);
    results.percent_change.push_back(p);
  }
}

ExperimentResults run_experiment(const std::vector<Dataset>& datasets, const ExperimentConfig& config) {
  struct Job {
    const Dataset* ds;
    Technique technique;
    std::size_t m;  // 0 for baselines
    std::size_t trial;
  };
  std::vector<Job> jobs;
  std::vector<std::string> order;
  for (const auto& ds : datasets) {
    if (config.profile == Profile::kDesk && is_large_dataset(ds.name())) continue;
    order.push_back(ds.name());
    for (Technique t : config.techniques) {
      if (t == Technique::kBaseline) {
        for (std::size_t k = 0; k < config.trials; ++k) jobs.push_back({&ds, t, 0, k});
        continue;
      }
      for (std::size_t m : config.m_values) {
        for (std::size_t k = 0; k < config.trials; ++k) jobs.push_back({&ds, t, m, k});
      }
    }
  }

  std::vector<std::optional<TrialResult>> done(jobs.size());
  std::vector<std::optional<TrialError>> failed(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    const auto seed = derive_trial_seed(config.master_seed, job.ds->name(), job.technique, job.m, job.trial);
    try {
      TrialResult r = run_trial(*job.ds, job.technique, job.m, seed, config.options);
      r.trial = job.trial;
      done[i] = std::move(r);
    } catch (const std::exception& e) {
      failed[i] = TrialError{job.ds->name(), job.technique, job.m, job.trial, seed, e.what()};
    }
  });

  ExperimentResults results;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (done[i]) results.trials.push_back(std::move(*done[i]));
    if (failed[i]) results.errors.push_back(std::move(*failed[i]));
  }
  summarize(results, order, config);
  return results;
}

ExperimentResults run_experiment(const ExperimentConfig& config) {
  std::vector<Dataset> datasets;
  for (const auto& path : config.datasets) {
    Dataset ds = load_delimited(path);
    if (config.profile == Profile::kDesk && is_large_dataset(ds.name())) continue;
    if (config.standardize) ds = Dataset(ds.name(), standardize(ds.features()), ds.labels());
    datasets.push_back(std::move(ds));
  }
  return run_experiment(datasets, config);
}

std::string format_trial_row(const TrialResult& r) {
  std::string row = r.dataset;
  row += ',';
  row += to_string(r.technique);
  row += ',' + std::to_string(r.m) + ',' + std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',';
  row += fmt(r.f1) + ',' + std::to_string(r.confusion.tp) + ',' + std::to_string(r.confusion.fp) + ',' +
         std::to_string(r.confusion.tn) + ',' + std::to_string(r.confusion.fn) + ',';
  row += fmt(r.ratio_diff) + ',';
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.3f", r.wall_ms);
  row.append(buf, static_cast<std::size_t>(len));
  return row;
}

std::string format_trials_csv(const std::vector<TrialResult>& trials) {
  std::string out(kTrialCsvHeader);
  out += '\n';
  for (const auto& r : trials) {
    out += format_trial_row(r);
    out += '\n';
  }
  return out;
}

std::vector<TrialResult> parse_trials_csv(std::string_view text) {
  std::vector<TrialResult> out;
  std::istringstream in{std::string(text)};
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == kTrialCsvHeader, ErrorCode::kDataError,
          "trials csv: unexpected header");
  auto to_size = [](const std::string& s) { return static_cast<std::size_t>(std::stoull(s)); };
  auto to_double = [](const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    require(cells.size() == 12, ErrorCode::kDataError, "trials csv: expected 12 columns");
    TrialResult r;
    r.dataset = cells[0];
    r.technique = parse_technique(cells[1]);
    r.m = to_size(cells[2]);
    r.trial = to_size(cells[3]);
    r.seed = std::stoull(cells[4]);
    r.f1 = to_double(cells[5]);
    r.confusion = {to_size(cells[6]), to_size(cells[7]), to_size(cells[8]), to_size(cells[9])};
    r.ratio_diff = to_double(cells[10]);
    r.wall_ms = to_double(cells[11]);
    out.push_back(std::move(r));
  }
  return out;
}

std::string summary_json(const ExperimentResults& results, const ExperimentConfig& config) {
  json j;
  j["master_seed"] = config.master_seed;
  j["trials"] = config.trials;
  j["test_fraction"] = config.options.test_fraction;
  j["profile"] = config.profile == Profile::kDesk ? "desk" : "full";
  auto combo = [](const CombinationSummary& s) {
    json c{{"dataset", s.dataset},
           {"technique", to_string(s.technique)},
           {"m", s.m},
           {"mean", number_or_null(s.f1.mean)},
           {"sd", number_or_null(s.f1.sd)},
           {"trials", s.f1.trial_count},
           {"errors", s.errors}};
    c["ratio_diff"] = s.ratio_diff ? json(s.ratio_diff->mean) : json(nullptr);
    return c;
  };
  j["table"] = json::array();
  for (const auto& s : results.combinations) j["table"].push_back(combo(s));
  j["baseline"] = json::array();
  for (const auto& s : results.baselines) j["baseline"].push_back(combo(s));
  j["cross_dataset"] = json::array();
  for (const auto& c : results.cross_dataset) {
    j["cross_dataset"].push_back({{"technique", to_string(c.technique)},
                                  {"m", c.m},
                                  {"mean_of_means", c.mean_of_means},
                                  {"mean_of_sds", c.mean_of_sds},
                                  {"mean_ratio_diff", number_or_null(c.mean_ratio_diff)},
                                  {"datasets", c.datasets}});
  }
  j["percent_change"] = json::array();
  for (const auto& p : results.percent_change) {
    j["percent_change"].push_back({{"dataset", p.dataset},
                                   {"technique", to_string(p.technique)},
                                   {"m", p.m},
                                   {"value", p.value ? json(*p.value) : json(nullptr)}});
  }
  j["errors"] = json::array();
  for (const auto& e : results.errors) {
    j["errors"].push_back({{"dataset", e.dataset},
                           {"technique", to_string(e.technique)},
                           {"m", e.m},
                           {"trial", e.trial},
                           {"seed", e.seed},
                           {"message", e.message}});
  }
  return j.dump(2);
}

void write_results(const ExperimentResults& results, const ExperimentConfig& config,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "trials.csv");
    require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + (dir / "trials.csv").string());
    out << format_trials_csv(results.trials);
  }
  std::ofstream out(dir / "summary.json");
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot write " + (dir / "summary.json").string());
  out << summary_json(results, config) << '\n';
}

VisualizationOutput export_visualization(const Dataset& ds, Technique technique, std::size_t m,
                                         std::uint64_t seed, const std::filesystem::path& out_dir,
                                         const HarnessOptions& options) {
  const TrialDetail detail = run_trial_detailed(ds, technique, m, seed, options);
  const Matrix coords = pca_project(ds.features(), 2);
  std::filesystem::create_directories(out_dir);

  VisualizationOutput out;
  out.f1 = detail.result.f1;
  out.selected_rows = detail.selected.size();
  auto write_points = [&](const std::string& file, const IndexList& rows, const std::vector<Label>* labels) {
    const auto path = out_dir / file;
    std::ofstream f(path);
    require(static_cast<bool>(f), ErrorCode::kIoError, "cannot write " + path.string());
    f << (labels ? "index,pc1,pc2,label\n" : "index,pc1,pc2\n");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      f << rows[i] << ',' << fmt(coords(rows[i], 0)) << ',' << fmt(coords(rows[i], 1));
      if (labels) f << ',' << int((*labels)[i]);
      f << '\n';
    }
    out.files.push_back(path);
  };
  std::vector<Label> truth(detail.split.test_indices.size());
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = ds.labels()[detail.split.test_indices[i]];

  write_points("pool.csv", detail.split.train_indices, nullptr);
  write_points("selected.csv", detail.selected, &detail.selected_labels);
  write_points("test_predicted.csv", detail.split.test_indices, &detail.test_predictions);
  write_points("test_truth.csv", detail.split.test_indices, &truth);

  const auto meta = out_dir / "viz.json";
  std::ofstream f(meta);
  require(static_cast<bool>(f), ErrorCode::kIoError, "cannot write " + meta.string());
  f << json{{"dataset", ds.name()},
            {"technique", to_string(technique)},
            {"m", detail.result.m},
            {"seed", seed},
            {"f1", detail.result.f1}}
           .dump(2)
    << '\n';
  out.files.push_back(meta);
  return out;
}

}  // namespace unisel
