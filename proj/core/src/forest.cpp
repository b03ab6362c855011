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

#include "unisel/forest.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "unisel/error.hpp"
#include "unisel/parallel.hpp"
#include "unisel/random.hpp"

namespace unisel {

namespace {

__extension__ typedef unsigned __int128 Wide;

// Weighted sample sizes stay below 2^21, so sum_c(n_c^2) * N fits in 64 bits
// and a cross-multiplied comparison fits in 128.
constexpr std::uint64_t kMaxSampleWeight = std::uint64_t{1} << 21;

// Children score sum_c(n_c^2)/N_L + sum_c(n_c^2)/N_R kept as an exact
// fraction. Maximizing it minimizes weighted Gini impurity.
struct SplitScore {
  std::uint64_t num = 0;
  std::uint64_t den = 1;
};

bool greater(const SplitScore& a, const SplitScore& b) { return Wide(a.num) * b.den > Wide(b.num) * a.den; }
bool equal(const SplitScore& a, const SplitScore& b) { return Wide(a.num) * b.den == Wide(b.num) * a.den; }

SplitScore children_score(std::uint64_t l0, std::uint64_t l1, std::uint64_t r0, std::uint64_t r1) {
  const std::uint64_t nl = l0 + l1;
  const std::uint64_t nr = r0 + r1;
  const std::uint64_t sl = l0 * l0 + l1 * l1;
  const std::uint64_t sr = r0 * r0 + r1 * r1;
  return {sl * nr + sr * nl, nl * nr};
}

double weighted_gini(std::uint64_t c0, std::uint64_t c1) {
  const double n = static_cast<double>(c0 + c1);
  if (n == 0.0) return 0.0;
  return n - (static_cast<double>(c0) * c0 + static_cast<double>(c1) * c1) / n;
}

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return (mid >= hi || !std::isfinite(mid)) ? lo : mid;
}

struct BestSplit {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  SplitScore score;
};

// Column orders shared by every tree of a forest: for each feature, row
// indices sorted by value, and the values in that order.
struct SortedColumns {
  std::vector<std::uint32_t> order;  // d x n, feature-major
  std::vector<double> values;

  explicit SortedColumns(const Matrix& x) : order(x.rows() * x.cols()), values(order.size()) {
    const std::size_t n = x.rows();
    std::vector<std::pair<double, std::uint32_t>> column(n);
    for (std::size_t f = 0; f < x.cols(); ++f) {
      for (std::size_t i = 0; i < n; ++i) column[i] = {x(i, f), static_cast<std::uint32_t>(i)};
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t p = 0; p < n; ++p) {
        values[f * n + p] = column[p].first;
        order[f * n + p] = column[p].second;
      }
    }
  }
};

// Grows on distinct in-bag rows weighted by their bootstrap multiplicity.
// Large nodes read feature order from SortedColumns; small ones sort.
class TreeGrower {
 public:
  TreeGrower(const Matrix& x, std::span<const Label> y, std::size_t max_features, std::uint64_t seed,
             const SortedColumns* sorted)
      : x_(x), y_(y), max_features_(max_features), rng_(seed), sorted_(sorted),
        order_(x.cols()) {}

  std::vector<TreeNode> grow(const std::vector<std::size_t>& sample) {
    const std::size_t n = x_.rows();
    weight_.assign(n, 0);
    for (std::size_t i : sample) ++weight_[i];
    rows_.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (weight_[i] > 0) rows_.push_back(static_cast<std::uint32_t>(i));
    }
    if (sorted_) {
      where_.assign(n, kNoNode);
      for (std::uint32_t r : rows_) where_[r] = 0;
    }

    std::vector<TreeNode> nodes(1);
    struct Work {
      std::size_t node, begin, end;
    };
    std::vector<Work> stack{{0, 0, rows_.size()}};
    while (!stack.empty()) {
      const Work w = stack.back();
      stack.pop_back();
      std::uint64_t c0 = 0, c1 = 0;
      for (std::size_t s = w.begin; s < w.end; ++s) (y_[rows_[s]] ? c1 : c0) += weight_[rows_[s]];
      nodes[w.node].count0 = static_cast<std::uint32_t>(c0);
      nodes[w.node].count1 = static_cast<std::uint32_t>(c1);
      if (c0 == 0 || c1 == 0 || c0 + c1 <= 1) continue;

      const BestSplit best = find_split(w.node, w.begin, w.end, c0, c1);
      if (!best.found) continue;

      const auto mid_it = std::partition(
          rows_.begin() + static_cast<std::ptrdiff_t>(w.begin), rows_.begin() + static_cast<std::ptrdiff_t>(w.end),
          [&](std::uint32_t i) { return x_(i, best.feature) <= best.threshold; });
      const auto mid = static_cast<std::size_t>(mid_it - rows_.begin());

      std::uint64_t l0 = 0, l1 = 0;
      for (std::size_t s = w.begin; s < mid; ++s) (y_[rows_[s]] ? l1 : l0) += weight_[rows_[s]];
      TreeNode& node = nodes[w.node];
      node.feature = static_cast<std::int32_t>(best.feature);
      node.threshold = best.threshold;
      node.impurity_decrease =
          weighted_gini(c0, c1) - weighted_gini(l0, l1) - weighted_gini(c0 - l0, c1 - l1);
      node.left = static_cast<std::uint32_t>(nodes.size());
      node.right = static_cast<std::uint32_t>(nodes.size() + 1);
      const std::size_t left = nodes.size();
      nodes.resize(nodes.size() + 2);
      if (sorted_) {
        for (std::size_t s = w.begin; s < mid; ++s) where_[rows_[s]] = static_cast<std::uint32_t>(left);
        for (std::size_t s = mid; s < w.end; ++s) where_[rows_[s]] = static_cast<std::uint32_t>(left + 1);
      }
      stack.push_back({left + 1, mid, w.end});
      stack.push_back({left, w.begin, mid});
    }
    return nodes;
  }

 private:
  static constexpr std::uint32_t kNoNode = 0xffffffffu;

  struct Entry {
    double value;
    std::uint32_t weight;
    Label label;
  };

  // Fills values_ with the node's rows in ascending order of feature f.
  void gather(std::size_t node, std::size_t begin, std::size_t end, std::size_t f) {
    const std::size_t count = end - begin;
    const std::size_t n = x_.rows();
    // A column scan touches n entries; sorting costs a small multiple of
    // count * log2(count).
    if (sorted_ && 2 * count * std::bit_width(count) >= n) {
      values_.resize(n + 1);
      const auto* o = sorted_->order.data() + f * n;
      const auto* v = sorted_->values.data() + f * n;
      const auto tag = static_cast<std::uint32_t>(node);
      std::size_t k = 0;
      for (std::size_t p = 0; p < n; ++p) {
        const std::uint32_t r = o[p];
        values_[k] = {v[p], weight_[r], y_[r]};
        k += where_[r] == tag;
      }
      values_.resize(k);
      return;
    }
    values_.resize(count);
    for (std::size_t s = 0; s < count; ++s) {
      const std::uint32_t r = rows_[begin + s];
      values_[s] = {x_(r, f), weight_[r], y_[r]};
    }
    std::sort(values_.begin(), values_.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });
  }

  // Features are visited in a random order; constant features do not count
  // toward max_features. Among equal scores the lowest feature index wins,
  // then the lowest threshold. Only strictly positive decreases qualify.
  BestSplit find_split(std::size_t node, std::size_t begin, std::size_t end, std::uint64_t c0,
                       std::uint64_t c1) {
    const std::size_t d = x_.cols();
    std::iota(order_.begin(), order_.end(), 0);
    const SplitScore parent{c0 * c0 + c1 * c1, c0 + c1};

    BestSplit best;
    std::size_t evaluated = 0;
    for (std::size_t t = 0; t < d && evaluated < max_features_; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, d - 1);
      std::swap(order_[t], order_[pick(rng_)]);
      const std::size_t f = order_[t];

      gather(node, begin, end, f);
      if (values_.front().value == values_.back().value) continue;
      ++evaluated;

      std::uint64_t l0 = 0, l1 = 0;
      for (std::size_t p = 0; p + 1 < values_.size(); ++p) {
        (values_[p].label ? l1 : l0) += values_[p].weight;
        if (values_[p].value == values_[p + 1].value) continue;
        const SplitScore score = children_score(l0, l1, c0 - l0, c1 - l1);
        if (!greater(score, parent)) continue;
        // Thresholds rise along the scan, so an equal score from the same
        // feature never wins.
        if (!best.found || greater(score, best.score) || (f < best.feature && equal(score, best.score))) {
          best = {true, f, midpoint(values_[p].value, values_[p + 1].value), score};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const Label> y_;
  std::size_t max_features_;
  Rng rng_;
  const SortedColumns* sorted_;
  std::vector<std::size_t> order_;
  std::vector<std::uint32_t> weight_;
  std::vector<std::uint32_t> rows_;
  std::vector<std::uint32_t> where_;
  std::vector<Entry> values_;
};

}  // namespace

std::size_t resolve_max_features(std::size_t requested, std::size_t dimension) {
  if (requested == 0) {
    const auto r = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(dimension))));
    return std::max<std::size_t>(1, r);
  }
  require(requested <= dimension, ErrorCode::kInvalidArgument,
          "forest: max_features " + std::to_string(requested) + " exceeds dimension " +
              std::to_string(dimension));
  return requested;
}

DecisionTree DecisionTree::grow(const Matrix& features, std::span<const Label> labels,
                                std::vector<std::size_t> sample, std::size_t max_features,
                                std::uint64_t seed) {
  require(!sample.empty(), ErrorCode::kInvalidArgument, "decision tree: empty sample");
  require(max_features >= 1 && max_features <= features.cols(), ErrorCode::kInvalidArgument,
          "decision tree: max_features must lie in [1, d]");
  require(sample.size() < kMaxSampleWeight, ErrorCode::kInvalidArgument, "decision tree: sample too large");
  for (std::size_t i : sample) {
    require(i < features.rows(), ErrorCode::kInvalidArgument, "decision tree: sample index out of range");
  }
  DecisionTree tree;
  tree.nodes_ = TreeGrower(features, labels, max_features, seed, nullptr).grow(sample);
  return tree;
}

DecisionTree DecisionTree::from_nodes(std::vector<TreeNode> nodes) {
  require(!nodes.empty(), ErrorCode::kInvalidArgument, "decision tree: no nodes");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto& n = nodes[i];
    if (n.is_leaf()) {
      require(n.count0 + n.count1 > 0, ErrorCode::kInvalidArgument,
              "decision tree: leaf " + std::to_string(i) + " has no instances");
    } else {
      require(n.feature >= 0 && n.left > i && n.right > i && n.left < nodes.size() &&
                  n.right < nodes.size(),
              ErrorCode::kInvalidArgument, "decision tree: malformed node " + std::to_string(i));
    }
  }
  DecisionTree tree;
  tree.nodes_ = std::move(nodes);
  return tree;
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[i];
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

ForestModel::ForestModel(std::vector<DecisionTree> trees, std::size_t dimension, ForestConfig config,
                         std::array<std::size_t, 2> class_counts)
    : trees_(std::move(trees)), dimension_(dimension), config_(config), class_counts_(class_counts) {
  require(!trees_.empty(), ErrorCode::kInvalidArgument, "forest: no trees");
  flatten();
}

void ForestModel::flatten() {
  flat_.clear();
  roots_.clear();
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pending;  // (tree node, flat slot)
  for (const auto& tree : trees_) {
    const auto& nodes = tree.nodes();
    roots_.push_back(static_cast<std::uint32_t>(flat_.size()));
    flat_.emplace_back();
    pending.assign(1, {0u, roots_.back()});
    while (!pending.empty()) {
      const auto [src, dst] = pending.back();
      pending.pop_back();
      const TreeNode& n = nodes[src];
      if (n.is_leaf()) {
        flat_[dst] = {n.positive_fraction(), TreeNode::kLeaf, 0};
        continue;
      }
      const auto left = static_cast<std::uint32_t>(flat_.size());
      flat_[dst] = {n.threshold, n.feature, left};
      flat_.emplace_back();
      flat_.emplace_back();
      pending.push_back({n.right, left + 1});
      pending.push_back({n.left, left});
    }
  }
}

double ForestModel::predict_proba(std::span<const double> x) const {
  if (x.size() != dimension_) {
    fail(ErrorCode::kInvalidArgument, "forest: expected " + std::to_string(dimension_) +
                                          " features, got " + std::to_string(x.size()));
  }
  double sum = 0.0;
  for (std::uint32_t root : roots_) {
    std::uint32_t i = root;
    while (flat_[i].feature != TreeNode::kLeaf) {
      i = flat_[i].left + (x[static_cast<std::size_t>(flat_[i].feature)] <= flat_[i].value ? 0u : 1u);
    }
    sum += flat_[i].value;
  }
  return sum / static_cast<double>(trees_.size());
}

std::vector<double> ForestModel::predict_proba(const Matrix& features) const {
  IndexList all(features.rows());
  std::iota(all.begin(), all.end(), 0);
  return predict_proba(features, all);
}

std::vector<double> ForestModel::predict_proba(const Matrix& features, std::span<const std::size_t> rows) const {
  require(features.cols() == dimension_, ErrorCode::kInvalidArgument,
          "forest: expected " + std::to_string(dimension_) + " features, got " +
              std::to_string(features.cols()));
  for (std::size_t r : rows) {
    require(r < features.rows(), ErrorCode::kInvalidArgument, "forest: row index out of range");
  }
  const std::size_t d = features.cols();
  const double* x = features.values().data();
  std::vector<double> out(rows.size(), 0.0);
  // Tree-major so each tree stays in cache; per-row sums still run over the
  // trees in order.
  for (std::uint32_t root : roots_) {
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const double* row = x + rows[k] * d;
      std::uint32_t i = root;
      while (flat_[i].feature != TreeNode::kLeaf) {
        i = flat_[i].left + (row[static_cast<std::size_t>(flat_[i].feature)] <= flat_[i].value ? 0u : 1u);
      }
      out[k] += flat_[i].value;
    }
  }
  for (double& v : out) v /= static_cast<double>(trees_.size());
  return out;
}

std::vector<Label> ForestModel::predict(const Matrix& features) const {
  const auto proba = predict_proba(features);
  std::vector<Label> out(proba.size());
  std::transform(proba.begin(), proba.end(), out.begin(), bayes_decision);
  return out;
}

ForestModel forest_fit(const Matrix& features, std::span<const Label> labels,
                       const ForestConfig& config) {
  const std::size_t n = features.rows();
  require(n >= 1, ErrorCode::kInvalidArgument, "forest: empty training set");
  require(labels.size() == n, ErrorCode::kInvalidArgument, "forest: label count mismatch");
  require(config.n_trees >= 1, ErrorCode::kInvalidArgument, "forest: n_trees must be >= 1");
  require(features.all_finite(), ErrorCode::kDataError, "forest: non-finite feature values");
  std::array<std::size_t, 2> counts{0, 0};
  for (Label l : labels) {
    require(l <= 1, ErrorCode::kInvalidArgument, "forest: labels must be 0 or 1");
    ++counts[l];
  }
  const std::size_t max_features = resolve_max_features(config.max_features, features.cols());
  require(max_features <= features.cols(), ErrorCode::kInvalidArgument,
          "forest: max_features exceeds d");

  require(n < kMaxSampleWeight, ErrorCode::kInvalidArgument,
          "forest: at most " + std::to_string(kMaxSampleWeight - 1) + " training rows");
  const SortedColumns sorted(features);
  std::vector<DecisionTree> trees(config.n_trees);
  parallel_for(config.n_trees, config.threads, [&](std::size_t t) {
    Rng rng(derive_seed(config.seed, t));
    std::vector<std::size_t> sample(n);
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> pick(0, n - 1);
      for (auto& s : sample) s = pick(rng);
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    trees[t] = DecisionTree::from_nodes(TreeGrower(features, labels, max_features, rng(), &sorted).grow(sample));
  });
  ForestConfig echo = config;
  echo.max_features = max_features;
  return ForestModel(std::move(trees), features.cols(), echo, counts);
}

}  // namespace unisel
