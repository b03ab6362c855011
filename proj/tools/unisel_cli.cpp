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

// Command-line front end for the experiment harness.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "unisel/data.hpp"
#include "unisel/error.hpp"
#include "unisel/harness.hpp"

namespace fs = std::filesystem;
using namespace unisel;

namespace {

struct TrialArgs {
  std::string dataset;
  std::string technique;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  bool standardize = false;
};

Dataset load_dataset(const TrialArgs& a) {
  Dataset ds = load_delimited(a.dataset);
  if (a.standardize) ds = Dataset(ds.name(), standardize(ds.features()), ds.labels());
  return ds;
}

void emit_trial(const TrialResult& r, const std::string& out) {
  const std::string csv = format_trials_csv({r});
  std::cout << csv;
  if (out.empty()) return;
  fs::create_directories(out);
  std::ofstream f(fs::path(out) / "trials.csv");
  require(static_cast<bool>(f), ErrorCode::kIoError, "cannot write " + (fs::path(out) / "trials.csv").string());
  f << csv;
}

void print_summary(const ExperimentResults& results) {
  std::printf("%-16s %-10s %6s %8s %8s %7s\n", "dataset", "technique", "m", "mean", "sd", "errors");
  auto row = [](const CombinationSummary& s) {
    std::printf("%-16s %-10s %6zu %8.3f %8.3f %7zu\n", s.dataset.c_str(), std::string(to_string(s.technique)).c_str(),
                s.m, s.f1.mean, s.f1.sd, s.errors);
  };
  for (const auto& s : results.combinations) row(s);
  for (const auto& s : results.baselines) row(s);
  if (!results.errors.empty()) std::fprintf(stderr, "%zu trial(s) failed; see summary.json\n", results.errors.size());
}

void add_trial_options(CLI::App* cmd, TrialArgs& a, bool with_technique) {
  cmd->add_option("--dataset", a.dataset, "Delimited file with a 0/1 label column")->required();
  if (with_technique) {
    cmd->add_option("--technique", a.technique, "random_rf, unisel_rf, random_al or unisel_al")->required();
    cmd->add_option("--m", a.m, "Labeling budget")->required();
  }
  cmd->add_option("--seed", a.seed, "Trial seed")->required();
  cmd->add_flag("--standardize", a.standardize, "Z-score features before the trial");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised instance selection for outlier detection experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string out;
  std::string profile = "desk";
  app.add_option("--out", out, "Output directory")->capture_default_str();
  auto* profile_opt = app.add_option("--profile", profile, "Dataset profile (overrides the run config)")
      ->check(CLI::IsMember({"desk", "full"}))
      ->capture_default_str();

  std::string config_path;
  std::size_t threads = 0;
  auto* run = app.add_subcommand("run", "Run the experiment grid from a JSON config");
  run->add_option("--config", config_path, "Experiment config")->required()->check(CLI::ExistingFile);
  run->add_option("--threads", threads, "Worker threads (overrides the config; 0 keeps it)");

  TrialArgs trial_args, baseline_args, viz_args;
  auto* trial = app.add_subcommand("trial", "Run one trial and print its result row");
  add_trial_options(trial, trial_args, true);
  auto* baseline = app.add_subcommand("baseline", "Train on the whole training partition");
  add_trial_options(baseline, baseline_args, false);
  auto* viz = app.add_subcommand("viz", "Export 2-D PCA point sets for one trial");
  add_trial_options(viz, viz_args, true);

  std::string spec_path, synth_out;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset from a JSON spec");
  synth->add_option("--spec", spec_path, "Synthetic spec")->required()->check(CLI::ExistingFile);
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--file", synth_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      ExperimentConfig config = load_experiment_config(config_path);
      if (profile_opt->count() > 0) config.profile = parse_profile(profile);
      if (!out.empty()) config.output_dir = out;
      if (threads > 0) config.threads = threads;
      const auto results = run_experiment(config);
      write_results(results, config, config.output_dir);
      print_summary(results);
      std::cout << "wrote " << (config.output_dir / "trials.csv").string() << " and "
                << (config.output_dir / "summary.json").string() << '\n';
    } else if (*trial) {
      const Technique t = parse_technique(trial_args.technique);
      require(t != Technique::kBaseline, ErrorCode::kInvalidArgument, "use the baseline subcommand");
      emit_trial(run_trial(load_dataset(trial_args), t, trial_args.m, trial_args.seed), out);
    } else if (*baseline) {
      emit_trial(run_baseline(load_dataset(baseline_args), baseline_args.seed), out);
    } else if (*viz) {
      const Technique t = parse_technique(viz_args.technique);
      require(t != Technique::kBaseline, ErrorCode::kInvalidArgument, "viz needs a selection technique");
      const fs::path dir = out.empty() ? fs::path("viz") : fs::path(out);
      const auto result = export_visualization(load_dataset(viz_args), t, viz_args.m, viz_args.seed, dir);
      std::cout << "f1=" << result.f1 << " selected=" << result.selected_rows << '\n';
      for (const auto& f : result.files) std::cout << f.string() << '\n';
    } else if (*synth) {
      std::ifstream in(spec_path);
      std::stringstream ss;
      ss << in.rdbuf();
      const Dataset ds = generate_synthetic(parse_synthetic_spec(ss.str()), synth_seed);
      write_delimited(ds, synth_out);
      std::cout << ds.size() << " rows (" << ds.outlier_count() << " outliers) -> " << synth_out << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "unisel: " << e.what() << '\n';
    return e.code() == ErrorCode::kInvalidArgument ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "unisel: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
