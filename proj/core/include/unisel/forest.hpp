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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "unisel/matrix.hpp"

namespace unisel {

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_features = 0;  // 0 selects floor(sqrt(d)), at least 1
  std::uint64_t seed = 0;
  bool bootstrap = true;
  std::size_t threads = 1;  // trees are trained in parallel; 0 = hardware concurrency
};

std::size_t resolve_max_features(std::size_t requested, std::size_t dimension);

struct TreeNode {
  static constexpr std::int32_t kLeaf = -1;

  std::int32_t feature = kLeaf;
  double threshold = 0.0;  // go left when x[feature] <= threshold
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t count0 = 0;  // in-bag class counts reaching the node
  std::uint32_t count1 = 0;
  double impurity_decrease = 0.0;  // weighted Gini decrease of the split

  bool is_leaf() const noexcept { return feature == kLeaf; }
  double positive_fraction() const noexcept {
    return static_cast<double>(count1) / static_cast<double>(count0 + count1);
  }
};

// Binary CART tree grown on Gini impurity until leaves are pure, hold a
// single training instance, or admit no split with positive decrease.
class DecisionTree {
 public:
  DecisionTree() = default;

  // Grows a tree on the given sample (row indices, repeats allowed).
  static DecisionTree grow(const Matrix& features, std::span<const Label> labels,
                           std::vector<std::size_t> sample, std::size_t max_features,
                           std::uint64_t seed);

  // Builds a tree from explicit nodes; node 0 is the root.
  static DecisionTree from_nodes(std::vector<TreeNode> nodes);

  const TreeNode& leaf_for(std::span<const double> x) const;
  double predict_proba(std::span<const double> x) const { return leaf_for(x).positive_fraction(); }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t depth() const;

 private:
  std::vector<TreeNode> nodes_;
};

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::vector<DecisionTree> trees, std::size_t dimension, ForestConfig config = {},
              std::array<std::size_t, 2> class_counts = {0, 0});

  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const ForestConfig& config() const noexcept { return config_; }
  std::size_t dimension() const noexcept { return dimension_; }
  const std::array<std::size_t, 2>& class_counts() const noexcept { return class_counts_; }

  // Mean over trees of the leaf positive fraction.
  double predict_proba(std::span<const double> x) const;
  std::vector<double> predict_proba(const Matrix& features) const;
  // Probabilities for the listed rows of `features`, in list order.
  std::vector<double> predict_proba(const Matrix& features, std::span<const std::size_t> rows) const;
  // 1 iff probability >= 0.5.
  std::vector<Label> predict(const Matrix& features) const;

 private:
  // Inference copy of the trees: children adjacent, leaves hold their
  // positive fraction in `value`.
  struct FlatNode {
    double value;
    std::int32_t feature;
    std::uint32_t left;
  };
  void flatten();

  std::vector<DecisionTree> trees_;
  std::vector<FlatNode> flat_;
  std::vector<std::uint32_t> roots_;
  std::size_t dimension_ = 0;
  ForestConfig config_;
  std::array<std::size_t, 2> class_counts_{0, 0};
};

ForestModel forest_fit(const Matrix& features, std::span<const Label> labels,
                       const ForestConfig& config);

inline Label bayes_decision(double probability) { return probability >= 0.5 ? 1 : 0; }

}  // namespace unisel
