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
#include <string_view>

#include "unisel/kmeans.hpp"
#include "unisel/matrix.hpp"

namespace unisel {

enum class SelectionTechnique { kRandom, kUnisel };

std::string_view to_string(SelectionTechnique t);

struct SelectionResult {
  SelectionTechnique technique = SelectionTechnique::kRandom;
  IndexList indices;  // into the pool
  std::uint64_t seed = 0;
};

// k-means with k = m on the pool, then the member nearest each centroid
// (ties to the lowest pool index). Indices are reported in cluster order.
// `kmeans` supplies n_init/max_iter/tol/threads; its k and seed are ignored.
SelectionResult unisel_select(const Matrix& pool, std::size_t m, std::uint64_t seed,
                              const KMeansConfig& kmeans = {});

// Prototype per cluster of an already fitted model.
IndexList cluster_prototypes(const Matrix& pool, const KMeansModel& model);

// m distinct indices drawn uniformly without replacement.
SelectionResult random_select(std::size_t pool_size, std::size_t m, std::uint64_t seed);

}  // namespace unisel
