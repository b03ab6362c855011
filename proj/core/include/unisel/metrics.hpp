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
#include <span>
#include <vector>

#include "unisel/matrix.hpp"

namespace unisel {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(std::span<const Label> y_true, std::span<const Label> y_pred);

// 2tp / (2tp + fp + fn), or 0 when nothing is positive in either vector.
double f1_score(const ConfusionCounts& c);
double f1_score(std::span<const Label> y_true, std::span<const Label> y_pred);

struct AggregateResult {
  double mean = 0.0;
  double sd = 0.0;  // population standard deviation
  std::size_t trial_count = 0;
};

AggregateResult aggregate(std::span<const double> values);

// ratio(subset) - ratio(full), ratio = outliers / normals.
double ratio_difference(const std::vector<Label>& full_labels, const std::vector<Label>& subset_labels);

// 100 * (score - baseline) / baseline.
double percent_change(double score, double baseline);

// Principal axes of the sample covariance, ordered by descending variance.
// Each axis is signed so its largest-magnitude loading is positive.
struct PcaModel {
  std::vector<double> mean;             // d
  Matrix components;                    // c x d, one axis per row
  std::vector<double> explained_variance;  // c eigenvalues

  Matrix project(const Matrix& features) const;
};

PcaModel pca_fit(const Matrix& features, std::size_t components = 2);
Matrix pca_project(const Matrix& features, std::size_t components = 2);

}  // namespace unisel
