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

#include "unisel/selection.hpp"

#include <limits>
#include <numeric>
#include <string>

#include "unisel/error.hpp"
#include "unisel/random.hpp"

namespace unisel {

std::string_view to_string(SelectionTechnique t) {
  return t == SelectionTechnique::kUnisel ? "unisel" : "random";
}

IndexList cluster_prototypes(const Matrix& pool, const KMeansModel& model) {
  const std::size_t k = model.centroids.rows();
  IndexList best(k, pool.rows());
  std::vector<double> best_sq(k, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < pool.rows(); ++i) {
    const std::size_t c = model.assignments[i];
    const double sq = squared_distance(pool.row(i), model.centroids.row(c));
    if (sq < best_sq[c]) {
      best_sq[c] = sq;
      best[c] = i;
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    require(best[c] < pool.rows(), ErrorCode::kFailedPrecondition,
            "unisel: cluster " + std::to_string(c) + " is empty");
  }
  return best;
}

SelectionResult unisel_select(const Matrix& pool, std::size_t m, std::uint64_t seed,
                              const KMeansConfig& kmeans) {
  require(m >= 1, ErrorCode::kInvalidArgument, "unisel: m must be >= 1");
  require(m <= pool.rows(), ErrorCode::kInvalidArgument,
          "unisel: m=" + std::to_string(m) + " exceeds pool size " + std::to_string(pool.rows()));
  require(m <= count_distinct_rows(pool), ErrorCode::kInvalidArgument,
          "unisel: m=" + std::to_string(m) + " exceeds the number of distinct pool rows");
  KMeansConfig config = kmeans;
  config.k = m;
  config.seed = seed;
  const auto model = kmeans_fit(pool, config);
  return {SelectionTechnique::kUnisel, cluster_prototypes(pool, model), seed};
}

SelectionResult random_select(std::size_t pool_size, std::size_t m, std::uint64_t seed) {
  require(m >= 1, ErrorCode::kInvalidArgument, "random selection: m must be >= 1");
  require(m <= pool_size, ErrorCode::kInvalidArgument,
          "random selection: m=" + std::to_string(m) + " exceeds pool size " +
              std::to_string(pool_size));
  IndexList all(pool_size);
  std::iota(all.begin(), all.end(), 0);
  Rng rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool_size - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(m);
  return {SelectionTechnique::kRandom, std::move(all), seed};
}

}  // namespace unisel
