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

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "unisel/data.hpp"
#include "unisel/error.hpp"

namespace unisel {

ConfusionCounts confusion(std::span<const Label> y_true, std::span<const Label> y_pred) {
  require(y_true.size() == y_pred.size(), ErrorCode::kInvalidArgument,
          "confusion: length mismatch (" + std::to_string(y_true.size()) + " vs " +
              std::to_string(y_pred.size()) + ")");
  ConfusionCounts c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i]) {
      y_pred[i] ? ++c.tp : ++c.fn;
    } else {
      y_pred[i] ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double f1_score(const ConfusionCounts& c) {
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 0.0;
  return static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

double f1_score(std::span<const Label> y_true, std::span<const Label> y_pred) {
  return f1_score(confusion(y_true, y_pred));
}

AggregateResult aggregate(std::span<const double> values) {
  require(!values.empty(), ErrorCode::kInvalidArgument, "aggregate: no values");
  // Welford's update.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  bool constant = true;
  for (double v : values) constant = constant && v == values[0];
  if (constant) return {values[0], 0.0, n};
  return {mean, std::sqrt(std::max(0.0, m2 / static_cast<double>(n))), n};
}

double ratio_difference(const std::vector<Label>& full_labels, const std::vector<Label>& subset_labels) {
  return outlier_to_normal_ratio(subset_labels) - outlier_to_normal_ratio(full_labels);
}

double percent_change(double score, double baseline) {
  require(baseline > 0.0, ErrorCode::kInvalidArgument, "percent_change: baseline must be positive");
  return 100.0 * (score - baseline) / baseline;
}

PcaModel pca_fit(const Matrix& features, std::size_t components) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  require(n >= 2, ErrorCode::kInvalidArgument, "pca: need at least two rows");
  require(components >= 1 && components <= d, ErrorCode::kInvalidArgument,
          "pca: components must lie in [1, d]");

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> x(features.values().data(), static_cast<Eigen::Index>(n),
                               static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  require(solver.info() == Eigen::Success, ErrorCode::kFailedPrecondition,
          "pca: eigendecomposition failed");

  PcaModel model;
  model.mean.assign(mean.data(), mean.data() + d);
  model.components = Matrix(components, d);
  model.explained_variance.resize(components);
  // Eigenvalues come back ascending.
  for (std::size_t c = 0; c < components; ++c) {
    const auto col = static_cast<Eigen::Index>(d - 1 - c);
    Eigen::VectorXd axis = solver.eigenvectors().col(col);
    Eigen::Index pivot = 0;
    for (Eigen::Index j = 1; j < axis.size(); ++j) {
      if (std::abs(axis[j]) > std::abs(axis[pivot])) pivot = j;
    }
    if (axis[pivot] < 0) axis = -axis;
    for (std::size_t j = 0; j < d; ++j) model.components(c, j) = axis[static_cast<Eigen::Index>(j)];
    model.explained_variance[c] = std::max(0.0, solver.eigenvalues()[col]);
  }
  return model;
}

Matrix PcaModel::project(const Matrix& features) const {
  require(features.cols() == mean.size(), ErrorCode::kInvalidArgument, "pca: dimension mismatch");
  Matrix out(features.rows(), components.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto x = features.row(i);
    for (std::size_t c = 0; c < components.rows(); ++c) {
      double s = 0.0;
      for (std::size_t j = 0; j < mean.size(); ++j) s += (x[j] - mean[j]) * components(c, j);
      out(i, c) = s;
    }
  }
  return out;
}

Matrix pca_project(const Matrix& features, std::size_t components) {
  return pca_fit(features, components).project(features);
}

}  // namespace unisel
