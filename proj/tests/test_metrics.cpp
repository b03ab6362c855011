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

#include "unisel/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "unisel/error.hpp"
#include "unisel/selection.hpp"

namespace unisel {
namespace {

using Labels = std::vector<Label>;

TEST(F1Score, Examples) {
  EXPECT_EQ(f1_score(Labels{0, 1, 1, 0}, Labels{0, 1, 1, 0}), 1.0);
  EXPECT_EQ(f1_score(ConfusionCounts{.tp = 1, .fp = 1, .tn = 0, .fn = 1}), 0.5);
  EXPECT_EQ(f1_score(Labels{1, 1, 0}, Labels{0, 0, 0}), 0.0);
  EXPECT_EQ(f1_score(Labels{0, 0}, Labels{0, 0}), 0.0);
  EXPECT_THROW(f1_score(Labels{0, 1}, Labels{0}), Error);
}

TEST(F1Score, MatchesOracleAndIsOrderInvariant) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20000; ++t) {
    const std::size_t n = 1 + rng() % 40;
    Labels a(n), b(n);
    const unsigned density = 1 + rng() % 6;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng() % density == 0;
      b[i] = rng() % density == 0;
    }
    const double f = f1_score(a, b);
    ASSERT_NEAR(f, testing::f1_oracle(a, b), 1e-12);
    const auto c = confusion(a, b);
    ASSERT_EQ(c.total(), n);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Labels pa(n), pb(n);
    for (std::size_t i = 0; i < n; ++i) pa[i] = a[perm[i]], pb[i] = b[perm[i]];
    ASSERT_EQ(f1_score(pa, pb), f);
  }
}

TEST(Aggregate, Examples) {
  const std::vector<double> ones(10, 1.0);
  const auto a = aggregate(ones);
  EXPECT_EQ(a.mean, 1.0);
  EXPECT_EQ(a.sd, 0.0);
  EXPECT_EQ(a.trial_count, 10u);
  const auto b = aggregate(std::vector<double>{0, 1});
  EXPECT_EQ(b.mean, 0.5);
  EXPECT_EQ(b.sd, 0.5);
  const auto c = aggregate(std::vector<double>{0.917});
  EXPECT_EQ(c.mean, 0.917);
  EXPECT_EQ(c.sd, 0.0);
  EXPECT_THROW(aggregate(std::vector<double>{}), Error);
}

TEST(Aggregate, MatchesTwoPassReference) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int t = 0; t < 2000; ++t) {
    std::vector<double> v(1 + rng() % 30);
    for (auto& x : v) x = u(rng);
    if (t % 10 == 0) std::fill(v.begin(), v.end(), v[0]);
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(v.size()));
    const auto r = aggregate(v);
    ASSERT_NEAR(r.mean, mean, 1e-12 * std::abs(mean));
    ASSERT_NEAR(r.sd, sd, 1e-12 * std::max(sd, 1e-300) + 1e-15);
    if (t % 10 == 0) ASSERT_EQ(r.sd, 0.0);
  }
}

Labels labels_with(std::size_t normals, std::size_t outliers) {
  Labels y(normals, 0);
  y.insert(y.end(), outliers, 1);
  return y;
}

TEST(RatioDifference, Examples) {
  const auto full = labels_with(98, 2);
  EXPECT_EQ(ratio_difference(full, full), 0.0);
  EXPECT_NEAR(ratio_difference(full, labels_with(9, 1)), 0.090703, 1e-6);
  EXPECT_NEAR(ratio_difference(full, labels_with(9, 1)), 1.0 / 9 - 2.0 / 98, 1e-15);
  EXPECT_THROW(ratio_difference(full, labels_with(0, 3)), Error);
  EXPECT_THROW(ratio_difference(labels_with(0, 3), full), Error);
}

TEST(RatioDifference, RandomSubsetsAreUnbiased) {
  // 1% outliers in a pool of 20000; subsets of 500.
  auto pool = labels_with(19800, 200);
  std::mt19937_64 rng(1);
  std::shuffle(pool.begin(), pool.end(), rng);
  double total = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Labels subset;
    for (auto i : random_select(pool.size(), 500, seed).indices) subset.push_back(pool[i]);
    total += ratio_difference(pool, subset);
  }
  EXPECT_NEAR(total / 100, 0.0, 0.005);
}

TEST(PercentChange, Examples) {
  EXPECT_EQ(percent_change(0.8, 0.8), 0.0);
  EXPECT_EQ(percent_change(0.5, 1.0), -50.0);
  EXPECT_EQ(percent_change(1.0, 1.0), 0.0);
  EXPECT_THROW(percent_change(0.5, 0.0), Error);
}

TEST(Pca, CollinearDataHasZeroSecondCoordinate) {
  const auto p = pca_project(Matrix::from_rows({{0, 0}, {1, 1}, {2, 2}, {-3, -3}, {7.5, 7.5}}));
  for (std::size_t i = 0; i < p.rows(); ++i) EXPECT_NEAR(p(i, 1), 0.0, 1e-9);
}

std::vector<std::vector<double>> column_covariance(const Matrix& p) {
  return testing::sample_covariance(p);
}

TEST(Pca, VariancesMatchJacobiEigenvaluesAndColumnsUncorrelated) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0, 1);
  for (int t = 0; t < 20; ++t) {
    Matrix x(60, 5);
    for (std::size_t i = 0; i < 60; ++i) {
      for (std::size_t j = 0; j < 5; ++j) x(i, j) = g(rng) * static_cast<double>(j + 1);
      x(i, 1) += 0.7 * x(i, 0);
    }
    const auto eig = testing::jacobi_eigenvalues(testing::sample_covariance(x));
    const auto model = pca_fit(x, 2);
    const auto p = model.project(x);
    const auto cov = column_covariance(p);
    EXPECT_NEAR(cov[0][0], eig[0], 1e-9 * eig[0]);
    EXPECT_NEAR(cov[1][1], eig[1], 1e-9 * eig[0]);
    EXPECT_NEAR(model.explained_variance[0], eig[0], 1e-9 * eig[0]);
    EXPECT_NEAR(cov[0][1], 0.0, 1e-9 * eig[0]);
    for (std::size_t c = 0; c < 2; ++c) {
      std::size_t arg = 0;
      for (std::size_t j = 1; j < 5; ++j) {
        if (std::abs(model.components(c, j)) > std::abs(model.components(c, arg))) arg = j;
      }
      EXPECT_GT(model.components(c, arg), 0.0);
    }
  }
}

TEST(Pca, ProjectingAProjectionPreservesIt) {
  std::mt19937_64 rng(5);
  const auto x = testing::random_matrix(rng, 40, 4, false);
  const auto p = pca_project(x);
  const auto pp = pca_project(p);
  for (std::size_t c = 0; c < 2; ++c) {
    double same = 0, flipped = 0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
      same = std::max(same, std::abs(pp(i, c) - p(i, c)));
      flipped = std::max(flipped, std::abs(pp(i, c) + p(i, c)));
    }
    EXPECT_LT(std::min(same, flipped), 1e-9);
  }
}

TEST(Pca, Errors) {
  EXPECT_THROW(pca_project(Matrix::from_rows({{1, 2}})), Error);
  EXPECT_THROW(pca_project(Matrix::from_rows({{1}, {2}}), 2), Error);
}

}  // namespace
}  // namespace unisel
