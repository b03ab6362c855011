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

#include "unisel/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "unisel/error.hpp"
#include "unisel/parallel.hpp"
#include "unisel/random.hpp"

namespace unisel {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRelativeSlack = 1e-9;

// Elkan's exact k-means. Bounds are kept in (non-squared) Euclidean distance;
// pruning only happens when a bound wins by a relative margin so rounding in
// the bounds never changes an assignment. Every assignment decision compares
// squared distances computed exactly like the brute-force scan, with ties to
// the lowest centroid index.
class ElkanRun {
 public:
  ElkanRun(const Matrix& x, Matrix centroids)
      : x_(x), c_(std::move(centroids)), n_(x.rows()), k_(c_.rows()) {
    assign_.assign(n_, 0);
    upper_.assign(n_, 0.0);
    lower_.assign(n_ * k_, 0.0);
    drift_.assign(k_, 0.0);
    stale_.assign(n_, 0);
    centre_dist_.assign(k_ * k_, 0.0);
    half_min_.assign(k_, kInf);
    double scale = 0.0;
    for (double v : x_.values()) scale = std::max(scale, std::abs(v));
    abs_slack_ = 1e-12 * (scale + 1.0) * std::sqrt(static_cast<double>(x_.cols()));
    rebase_drift_ = 64.0 * (scale + 1.0) * std::sqrt(static_cast<double>(x_.cols()));
  }

  KMeansModel run(std::size_t max_iter, double tol) {
    full_assign();
    KMeansModel model;
    std::vector<double> delta(k_, 0.0);
    while (model.iterations < max_iter) {
      repair_by_reassignment();
      const double shift = update_centroids(delta);
      ++model.iterations;
      bounded_assign(delta);
      model.inertia_trace.push_back(inertia());
      if (shift <= tol) {
        model.converged = true;
        break;
      }
    }
    finalize_empty_clusters();
    model.inertia = inertia();
    model.centroids = std::move(c_);
    model.assignments = std::move(assign_);
    return model;
  }

 private:
  bool clearly_less(double a, double b) const {
    return a + kRelativeSlack * (a + b) + abs_slack_ < b;
  }

  double& lower(std::size_t i, std::size_t j) { return lower_[i * k_ + j]; }

  void compute_centre_distances() {
    for (std::size_t a = 0; a < k_; ++a) {
      centre_dist_[a * k_ + a] = 0.0;
      for (std::size_t b = a + 1; b < k_; ++b) {
        const double dist = std::sqrt(squared_distance(c_.row(a), c_.row(b)));
        centre_dist_[a * k_ + b] = dist;
        centre_dist_[b * k_ + a] = dist;
      }
    }
    for (std::size_t a = 0; a < k_; ++a) {
      double best = kInf;
      for (std::size_t b = 0; b < k_; ++b) {
        if (b != a) best = std::min(best, centre_dist_[a * k_ + b]);
      }
      half_min_[a] = 0.5 * best;
    }
  }

  void full_assign() {
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t best = 0;
      double best_sq = kInf;
      for (std::size_t j = 0; j < k_; ++j) {
        const double sq = squared_distance(x_.row(i), c_.row(j));
        lower(i, j) = std::sqrt(sq);
        if (sq < best_sq) {
          best_sq = sq;
          best = j;
        }
      }
      assign_[i] = best;
      upper_[i] = std::sqrt(best_sq);
      stale_[i] = 0;
    }
  }

  // Smallest bound that clearly_less(u, bound) would accept, rounded up so
  // `bound > prune_limit(u)` never prunes a case clearly_less rejects.
  double prune_limit(double u) const {
    return (u * (1.0 + kRelativeSlack) + abs_slack_) / (1.0 - kRelativeSlack) * (1.0 + 1e-12);
  }

  void bounded_assign(const std::vector<double>& delta) {
    compute_centre_distances();
    // Lower bounds are stored offset by the centre's drift when they were
    // set, so shrinking them all by delta is a per-centre update.
    bool rebase = false;
    for (std::size_t j = 0; j < k_; ++j) {
      drift_[j] += delta[j];
      rebase = rebase || drift_[j] > rebase_drift_;
    }
    if (rebase) {
      // Keeps the offset small next to abs_slack_ so rounding in it stays covered.
      for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < k_; ++j) lower_[i * k_ + j] -= drift_[j];
      }
      std::fill(drift_.begin(), drift_.end(), 0.0);
    }
    for (std::size_t i = 0; i < n_; ++i) {
      upper_[i] += delta[assign_[i]];
      stale_[i] = 1;
    }
    for (std::size_t i = 0; i < n_; ++i) {
      std::size_t a = assign_[i];
      if (clearly_less(upper_[i], half_min_[a])) continue;
      double sq_a = 0.0;
      double limit = prune_limit(upper_[i]);
      double* low = &lower_[i * k_];
      for (std::size_t j = 0; j < k_; ++j) {
        if (j == a) continue;
        const double bound = std::max(low[j] - drift_[j], 0.5 * centre_dist_[a * k_ + j]);
        if (bound > limit) continue;
        if (stale_[i]) {
          sq_a = squared_distance(x_.row(i), c_.row(a));
          upper_[i] = std::sqrt(sq_a);
          low[a] = upper_[i] + drift_[a];
          stale_[i] = 0;
          limit = prune_limit(upper_[i]);
          if (bound > limit) continue;
        }
        const double sq_j = squared_distance(x_.row(i), c_.row(j));
        const double dist_j = std::sqrt(sq_j);
        low[j] = dist_j + drift_[j];
        if (sq_j < sq_a || (sq_j == sq_a && j < a)) {
          a = j;
          sq_a = sq_j;
          upper_[i] = dist_j;
          limit = prune_limit(upper_[i]);
        }
      }
      assign_[i] = a;
    }
  }

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(k_, 0);
    for (std::size_t a : assign_) ++sizes[a];
    return sizes;
  }

  // Farthest instance (squared distance to its centroid) among clusters that
  // can spare a member; ties to the lowest instance index.
  std::size_t farthest_donor(const std::vector<std::size_t>& sizes) const {
    std::size_t best = n_;
    double best_sq = -1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (sizes[assign_[i]] <= 1) continue;
      const double sq = squared_distance(x_.row(i), c_.row(assign_[i]));
      if (sq > best_sq) {
        best_sq = sq;
        best = i;
      }
    }
    require(best < n_, ErrorCode::kFailedPrecondition, "k-means: cannot repair empty cluster");
    return best;
  }

  void repair_by_reassignment() {
    auto sizes = cluster_sizes();
    for (std::size_t j = 0; j < k_; ++j) {
      if (sizes[j] != 0) continue;
      const std::size_t i = farthest_donor(sizes);
      --sizes[assign_[i]];
      assign_[i] = j;
      sizes[j] = 1;
      upper_[i] = kInf;
      stale_[i] = 1;
    }
  }

  double update_centroids(std::vector<double>& delta) {
    Matrix sums(k_, x_.cols(), 0.0);
    std::vector<std::size_t> counts(k_, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      auto s = sums.row(assign_[i]);
      const auto xi = x_.row(i);
      for (std::size_t t = 0; t < s.size(); ++t) s[t] += xi[t];
      ++counts[assign_[i]];
    }
    double shift = 0.0;
    for (std::size_t j = 0; j < k_; ++j) {
      auto s = sums.row(j);
      if (counts[j] == 0) {
        // Unreachable after repair; keep the centroid in place.
        std::copy(c_.row(j).begin(), c_.row(j).end(), s.begin());
      } else {
        for (double& v : s) v /= static_cast<double>(counts[j]);
      }
      const double sq = squared_distance(s, c_.row(j));
      delta[j] = std::sqrt(sq);
      shift += sq;
    }
    c_ = std::move(sums);
    return shift;
  }

  void finalize_empty_clusters() {
    std::vector<double> delta(k_, 0.0);
    for (std::size_t round = 0; round <= n_; ++round) {
      auto sizes = cluster_sizes();
      if (std::find(sizes.begin(), sizes.end(), 0) == sizes.end()) return;
      std::fill(delta.begin(), delta.end(), 0.0);
      for (std::size_t j = 0; j < k_; ++j) {
        if (sizes[j] != 0) continue;
        const std::size_t i = farthest_donor(sizes);
        --sizes[assign_[i]];
        sizes[j] = 1;
        const auto xi = x_.row(i);
        delta[j] += std::sqrt(squared_distance(xi, c_.row(j)));
        std::copy(xi.begin(), xi.end(), c_.row(j).begin());
      }
      bounded_assign(delta);
    }
    fail(ErrorCode::kFailedPrecondition, "k-means: empty cluster repair did not terminate");
  }

  double inertia() const { return kmeans_inertia(c_, x_, assign_); }

  const Matrix& x_;
  Matrix c_;
  std::size_t n_;
  std::size_t k_;
  IndexList assign_;
  std::vector<double> upper_;
  std::vector<double> lower_;  // lower bound + drift_ at the time it was set
  std::vector<double> drift_;  // cumulative movement per centre
  std::vector<char> stale_;
  std::vector<double> centre_dist_;
  std::vector<double> half_min_;
  double abs_slack_ = 0.0;
  double rebase_drift_ = 0.0;
};

}  // namespace

Matrix kmeans_pp_init(const Matrix& features, std::size_t k, std::uint64_t seed) {
  const std::size_t n = features.rows();
  require(k >= 1, ErrorCode::kInvalidArgument, "k-means++: k must be >= 1");
  require(k <= n, ErrorCode::kInvalidArgument, "k-means++: k exceeds the number of rows");
  require(k <= count_distinct_rows(features), ErrorCode::kInvalidArgument,
          "k-means++: k exceeds the number of distinct rows");

  Rng rng(seed);
  Matrix centroids(k, features.cols());
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t pick = first(rng);
  std::copy(features.row(pick).begin(), features.row(pick).end(), centroids.row(0).begin());

  std::vector<double> weight(n);
  for (std::size_t i = 0; i < n; ++i) weight[i] = squared_distance(features.row(i), centroids.row(0));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double w : weight) total += w;
    const double target = unit(rng) * total;
    double cumulative = 0.0;
    pick = n;
    std::size_t last_positive = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (weight[i] <= 0.0) continue;
      last_positive = i;
      cumulative += weight[i];
      if (cumulative > target) {
        pick = i;
        break;
      }
    }
    if (pick == n) pick = last_positive;  // rounding at the top of the range
    require(pick < n, ErrorCode::kInvalidArgument,
            "k-means++: k exceeds the number of distinct rows");
    std::copy(features.row(pick).begin(), features.row(pick).end(), centroids.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) {
      weight[i] = std::min(weight[i], squared_distance(features.row(i), centroids.row(c)));
    }
  }
  return centroids;
}

KMeansModel kmeans_fit_from(const Matrix& features, const Matrix& initial_centroids,
                            std::size_t max_iter, double tol) {
  require(initial_centroids.rows() >= 1, ErrorCode::kInvalidArgument, "k-means: k must be >= 1");
  require(initial_centroids.rows() <= features.rows(), ErrorCode::kInvalidArgument,
          "k-means: k exceeds the number of rows");
  require(initial_centroids.cols() == features.cols(), ErrorCode::kInvalidArgument,
          "k-means: centroid dimension mismatch");
  require(features.all_finite(), ErrorCode::kDataError, "k-means: non-finite feature values");
  require(tol >= 0.0, ErrorCode::kInvalidArgument, "k-means: tol must be non-negative");
  return ElkanRun(features, initial_centroids).run(max_iter, tol);
}

KMeansModel kmeans_fit(const Matrix& features, const KMeansConfig& config) {
  require(config.k >= 1, ErrorCode::kInvalidArgument, "k-means: k must be >= 1");
  require(config.k <= features.rows(), ErrorCode::kInvalidArgument,
          "k-means: k exceeds the number of rows");
  require(config.n_init >= 1, ErrorCode::kInvalidArgument, "k-means: n_init must be >= 1");
  require(config.max_iter >= 1, ErrorCode::kInvalidArgument, "k-means: max_iter must be >= 1");
  require(config.tol >= 0.0, ErrorCode::kInvalidArgument, "k-means: tol must be non-negative");
  require(features.all_finite(), ErrorCode::kDataError, "k-means: non-finite feature values");

  std::vector<KMeansModel> runs(config.n_init);
  parallel_for(config.n_init, config.threads, [&](std::size_t r) {
    const auto init = kmeans_pp_init(features, config.k, derive_seed(config.seed, r));
    runs[r] = kmeans_fit_from(features, init, config.max_iter, config.tol);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].inertia < runs[best].inertia) best = r;
  }
  return std::move(runs[best]);
}

IndexList kmeans_assign(const Matrix& centroids, const Matrix& features) {
  require(centroids.cols() == features.cols(), ErrorCode::kInvalidArgument,
          "k-means: dimension mismatch between centroids and features");
  require(centroids.rows() >= 1, ErrorCode::kInvalidArgument, "k-means: no centroids");
  IndexList out(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    std::size_t best = 0;
    double best_sq = kInf;
    for (std::size_t j = 0; j < centroids.rows(); ++j) {
      const double sq = squared_distance(features.row(i), centroids.row(j));
      if (sq < best_sq) {
        best_sq = sq;
        best = j;
      }
    }
    out[i] = best;
  }
  return out;
}

double kmeans_inertia(const Matrix& centroids, const Matrix& features, const IndexList& assignments) {
  double total = 0.0;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    total += squared_distance(features.row(i), centroids.row(assignments[i]));
  }
  return total;
}

}  // namespace unisel
