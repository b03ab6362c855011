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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unisel/active.hpp"
#include "unisel/data.hpp"
#include "unisel/forest.hpp"
#include "unisel/kmeans.hpp"
#include "unisel/metrics.hpp"

namespace unisel {

enum class Technique { kRandomRf, kUniselRf, kRandomAl, kUniselAl, kBaseline };

std::string_view to_string(Technique t);
Technique parse_technique(std::string_view name);
inline constexpr Technique kSelectionTechniques[] = {Technique::kRandomRf, Technique::kUniselRf,
                                                     Technique::kRandomAl, Technique::kUniselAl};

struct HarnessOptions {
  double test_fraction = 0.1;
  ForestConfig forest;   // seed is replaced per trial
  KMeansConfig kmeans;   // k and seed are replaced per selection
};

// Independent streams used inside one trial.
struct TrialSeeds {
  std::uint64_t split;
  std::uint64_t selection;
  std::uint64_t forest;
};
TrialSeeds trial_seeds(std::uint64_t trial_seed);

// Seed for trial t of (dataset, technique, m); baselines use m = 0.
std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::string_view dataset, Technique technique,
                                std::size_t m, std::size_t trial);

struct TrialResult {
  std::string dataset;
  Technique technique = Technique::kRandomRf;
  std::size_t m = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double f1 = 0.0;
  ConfusionCounts confusion;
  double ratio_diff = 0.0;  // NaN when the selected labels contain no normals
  double wall_ms = 0.0;
};

struct TrialDetail {
  TrialResult result;
  SplitIndices split;
  IndexList selected;  // dataset row indices, in acquisition order
  std::vector<Label> selected_labels;
  std::vector<Label> test_predictions;  // aligned with split.test_indices
  ALTrace trace;
};

TrialDetail run_trial_detailed(const Dataset& ds, Technique technique, std::size_t m,
                               std::uint64_t trial_seed, const HarnessOptions& options = {});
TrialResult run_trial(const Dataset& ds, Technique technique, std::size_t m, std::uint64_t trial_seed,
                      const HarnessOptions& options = {});
// Forest on the whole training partition; m is recorded as its size.
TrialResult run_baseline(const Dataset& ds, std::uint64_t trial_seed, const HarnessOptions& options = {});

enum class Profile { kDesk, kFull };
Profile parse_profile(std::string_view name);
// Datasets too large for the desk profile (http, forest cover).
bool is_large_dataset(std::string_view name);

struct ExperimentConfig {
  std::vector<std::filesystem::path> datasets;
  std::vector<Technique> techniques{Technique::kRandomRf, Technique::kUniselRf, Technique::kRandomAl,
                                    Technique::kUniselAl, Technique::kBaseline};
  std::vector<std::size_t> m_values{10, 50, 100, 500, 1000};
  std::size_t trials = 10;
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir = "results";
  Profile profile = Profile::kDesk;
  std::size_t threads = 1;
  bool standardize = false;
  HarnessOptions options;
};

// Relative dataset paths resolve against base_dir.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct TrialError {
  std::string dataset;
  Technique technique = Technique::kRandomRf;
  std::size_t m = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct CombinationSummary {
  std::string dataset;
  Technique technique = Technique::kRandomRf;
  std::size_t m = 0;
  AggregateResult f1;
  std::optional<AggregateResult> ratio_diff;
  std::size_t errors = 0;
};

struct CrossDatasetSummary {
  Technique technique = Technique::kRandomRf;
  std::size_t m = 0;
  double mean_of_means = 0.0;
  double mean_of_sds = 0.0;
  double mean_ratio_diff = 0.0;  // NaN when no dataset has a defined ratio
  std::size_t datasets = 0;
};

struct PercentChange {
  std::string dataset;
  Technique technique = Technique::kRandomRf;
  std::size_t m = 0;
  std::optional<double> value;  // absent when the baseline mean is 0
};

struct ExperimentResults {
  std::vector<TrialResult> trials;
  std::vector<TrialError> errors;
  std::vector<CombinationSummary> combinations;  // m-indexed techniques
  std::vector<CombinationSummary> baselines;     // technique = baseline, m = mean training size
  std::vector<CrossDatasetSummary> cross_dataset;
  std::vector<PercentChange> percent_change;

  const CombinationSummary* find(std::string_view dataset, Technique t, std::size_t m) const;
  const CombinationSummary* baseline(std::string_view dataset) const;
  const CrossDatasetSummary* cross(Technique t, std::size_t m) const;
};

ExperimentResults run_experiment(const std::vector<Dataset>& datasets, const ExperimentConfig& config);
ExperimentResults run_experiment(const ExperimentConfig& config);

// Summaries over a set of trial rows (used by run_experiment and to
// recompute from persisted rows).
void summarize(ExperimentResults& results, const std::vector<std::string>& dataset_order,
               const ExperimentConfig& config);

inline constexpr std::string_view kTrialCsvHeader =
    "dataset,technique,m,trial,seed,f1,tp,fp,tn,fn,ratio_diff,wall_ms";
std::string format_trial_row(const TrialResult& r);
std::string format_trials_csv(const std::vector<TrialResult>& trials);
std::vector<TrialResult> parse_trials_csv(std::string_view text);
std::string summary_json(const ExperimentResults& results, const ExperimentConfig& config);
void write_results(const ExperimentResults& results, const ExperimentConfig& config,
                   const std::filesystem::path& dir);

struct VisualizationOutput {
  double f1 = 0.0;
  std::size_t selected_rows = 0;
  std::vector<std::filesystem::path> files;
};

// Writes pool.csv, selected.csv, test_predicted.csv, test_truth.csv (all in
// 2-D PCA coordinates of the full dataset) and viz.json.
VisualizationOutput export_visualization(const Dataset& ds, Technique technique, std::size_t m,
                                         std::uint64_t seed, const std::filesystem::path& out_dir,
                                         const HarnessOptions& options = {});

}  // namespace unisel
