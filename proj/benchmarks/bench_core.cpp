#include <benchmark/benchmark.h>

#include "unisel/active.hpp"
#include "unisel/data.hpp"
#include "unisel/forest.hpp"
#include "unisel/kmeans.hpp"
#include "unisel/selection.hpp"

namespace {

using namespace unisel;

Dataset blobs(std::size_t n, std::size_t d) {
  return generate_synthetic(two_blob_outlier_spec(n, 0.03, d), 7);
}

void BM_KMeansFit(benchmark::State& state) {
  const auto ds = blobs(static_cast<std::size_t>(state.range(0)), 16);
  KMeansConfig cfg;
  cfg.k = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    cfg.seed++;
    benchmark::DoNotOptimize(kmeans_fit(ds.features(), cfg).inertia);
  }
}
BENCHMARK(BM_KMeansFit)->Args({5000, 10})->Args({5000, 100})->Args({5000, 500})->Unit(benchmark::kMillisecond);

void BM_UniselSelect(benchmark::State& state) {
  const auto ds = blobs(5000, 16);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(unisel_select(ds.features(), static_cast<std::size_t>(state.range(0)), ++seed));
  }
}
BENCHMARK(BM_UniselSelect)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_ForestFit(benchmark::State& state) {
  const auto ds = blobs(static_cast<std::size_t>(state.range(0)), 16);
  ForestConfig cfg;
  for (auto _ : state) {
    cfg.seed++;
    benchmark::DoNotOptimize(forest_fit(ds.features(), ds.labels(), cfg));
  }
}
BENCHMARK(BM_ForestFit)->Arg(100)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_ForestPredict(benchmark::State& state) {
  const auto ds = blobs(5000, 16);
  const auto model = forest_fit(ds.features(), ds.labels(), ForestConfig{});
  for (auto _ : state) benchmark::DoNotOptimize(model.predict_proba(ds.features()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ds.size()));
}
BENCHMARK(BM_ForestPredict)->Unit(benchmark::kMillisecond);

// One uncertainty-sampling step: retrain on the labeled set and score the rest.
void BM_ActiveLearningStep(benchmark::State& state) {
  const auto ds = blobs(5000, 16);
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto init = random_select(ds.size(), m / 2, 3).indices;
  for (auto _ : state) {
    state.PauseTiming();
    ActiveLearner learner(ds.features(), m, ForestConfig{});
    for (auto i : init) learner.add_initial(i, ds.labels()[i]);
    state.ResumeTiming();
    benchmark::DoNotOptimize(learner.propose());
  }
}
BENCHMARK(BM_ActiveLearningStep)->Arg(20)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
