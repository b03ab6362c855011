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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "unisel/matrix.hpp"

namespace unisel {

struct KMeansConfig {
  std::size_t k = 1;
  std::size_t n_init = 10;
  std::size_t max_iter = 300;
  double tol = 1e-4;  // on total squared centroid movement per iteration
  std::uint64_t seed = 0;
  std::size_t threads = 1;  // restarts run in parallel; 0 = hardware concurrency
};

struct KMeansModel {
  Matrix centroids;          // k x d
  IndexList assignments;     // cluster per instance
  double inertia = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> inertia_trace;  // inertia after each update step
};

// k-means++ seeding (D^2 weighting, one candidate per step). Rows already
// chosen have zero weight, so the k returned rows are distinct.
Matrix kmeans_pp_init(const Matrix& features, std::size_t k, std::uint64_t seed);

// Best of n_init Elkan runs (lowest inertia, ties to the earlier restart).
KMeansModel kmeans_fit(const Matrix& features, const KMeansConfig& config);

// One Elkan run from the given initial centroids.
KMeansModel kmeans_fit_from(const Matrix& features, const Matrix& initial_centroids,
                            std::size_t max_iter, double tol);

// Nearest centroid per row; ties go to the lowest centroid index.
IndexList kmeans_assign(const Matrix& centroids, const Matrix& features);

double kmeans_inertia(const Matrix& centroids, const Matrix& features, const IndexList& assignments);

}  // namespace unisel
