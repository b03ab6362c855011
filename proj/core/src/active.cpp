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

#include "unisel/active.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace unisel {

Label GroundTruthOracle::label(std::size_t pool_index) {
  require(pool_index < truth_.size(), ErrorCode::kInvalidArgument,
          "oracle: pool index " + std::to_string(pool_index) + " out of range");
  return truth_[pool_index];
}

std::string_view to_string(LabelSource s) {
  switch (s) {
    case LabelSource::kInit: return "init";
    case LabelSource::kQuery: return "al_query";
    case LabelSource::kBatch: return "batch";
  }
  return "unknown";
}

std::size_t select_query(std::span<const double> probabilities, std::span<const std::size_t> candidates) {
  require(!candidates.empty(), ErrorCode::kInvalidArgument, "select_query: no candidates");
  require(probabilities.size() == candidates.size(), ErrorCode::kInvalidArgument,
          "select_query: probabilities and candidates differ in length");
  std::size_t best = 0;
  double best_gap = std::abs(probabilities[0] - 0.5);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double gap = std::abs(probabilities[i] - 0.5);
    if (gap < best_gap || (gap == best_gap && candidates[i] < candidates[best])) {
      best = i;
      best_gap = gap;
    }
  }
  return candidates[best];
}

ActiveLearner::ActiveLearner(const Matrix& pool, std::size_t m, ForestConfig forest, ALOptions options)
    : pool_(pool), m_(m), forest_(forest), options_(options), flags_(pool.rows(), 0) {
  require(m >= 1, ErrorCode::kInvalidArgument, "active learning: m must be >= 1");
  require(m <= pool.rows(), ErrorCode::kInvalidArgument,
          "active learning: m=" + std::to_string(m) + " exceeds pool size " +
              std::to_string(pool.rows()));
}

IndexList ActiveLearner::unlabeled() const {
  IndexList out;
  out.reserve(flags_.size() - labeled_.size());
  for (std::size_t i = 0; i < flags_.size(); ++i) {
    if (!flags_[i]) out.push_back(i);
  }
  return out;
}

void ActiveLearner::mark(std::size_t index, Label label, LabelSource source) {
  require(index < flags_.size(), ErrorCode::kInvalidArgument,
          "active learning: pool index " + std::to_string(index) + " out of range");
  require(!flags_[index], ErrorCode::kConflict,
          "active learning: pool index " + std::to_string(index) + " already labeled");
  require(label <= 1, ErrorCode::kInvalidArgument, "active learning: label must be 0 or 1");
  flags_[index] = 1;
  labeled_.push_back({index, label, source});
}

void ActiveLearner::add_initial(std::size_t index, Label label) {
  require(labeled_.size() < initial_size(), ErrorCode::kFailedPrecondition,
          "active learning: initial set already complete");
  mark(index, label, LabelSource::kInit);
}

ForestModel train_on_labels(const Matrix& pool, std::vector<LabeledInstance> labeled,
                            const ForestConfig& forest) {
  std::sort(labeled.begin(), labeled.end(),
            [](const auto& a, const auto& b) { return a.index < b.index; });
  IndexList rows;
  std::vector<Label> y;
  rows.reserve(labeled.size());
  y.reserve(labeled.size());
  for (const auto& l : labeled) {
    rows.push_back(l.index);
    y.push_back(l.label);
  }
  return forest_fit(pool.select_rows(rows), y, forest);
}

ForestModel ActiveLearner::train() const { return train_on_labels(pool_, labeled_, forest_); }

std::size_t ActiveLearner::propose() {
  if (pending_) return *pending_;
  require(initialized(), ErrorCode::kFailedPrecondition,
          "active learning: initial labels incomplete");
  require(!done(), ErrorCode::kFailedPrecondition, "active learning: target already reached");

  const IndexList candidates = unlabeled();
  std::vector<double> probs;
  if (labeled_.empty()) {
    // No information yet: every candidate is maximally uncertain.
    probs.assign(candidates.size(), 0.5);
  } else {
    model_ = train();
    probs = model_->predict_proba(pool_, candidates);
  }
  const std::size_t chosen = select_query(probs, candidates);
  const auto pos = std::lower_bound(candidates.begin(), candidates.end(), chosen) - candidates.begin();
  pending_ = chosen;
  pending_probability_ = probs[static_cast<std::size_t>(pos)];
  if (options_.record_scores) {
    pending_candidates_ = candidates;
    pending_scores_ = std::move(probs);
  }
  return chosen;
}

void ActiveLearner::answer(Label label) {
  require(pending_.has_value(), ErrorCode::kFailedPrecondition, "active learning: no pending query");
  const std::size_t index = *pending_;
  mark(index, label, LabelSource::kQuery);
  QueryRecord record;
  record.iteration = trace_.queries.size();
  record.index = index;
  record.label = label;
  record.probability = pending_probability_;
  record.candidates = std::move(pending_candidates_);
  record.candidate_probabilities = std::move(pending_scores_);
  trace_.queries.push_back(std::move(record));
  pending_.reset();
  pending_candidates_.clear();
  pending_scores_.clear();
}

void drive(ActiveLearner& learner, Oracle& oracle) {
  require(learner.initialized(), ErrorCode::kFailedPrecondition,
          "active learning: initial labels incomplete");
  while (!learner.done()) {
    const std::size_t query = learner.propose();
    Label answer = 0;
    try {
      answer = oracle.label(query);
    } catch (const std::exception& e) {
      throw OracleFailure(query, e.what());
    }
    learner.answer(answer);
  }
}

ALResult run_active_learning(const Matrix& pool, Oracle& oracle, std::size_t m,
                             std::span<const std::size_t> init_indices, const ForestConfig& forest,
                             const ALOptions& options) {
  ActiveLearner learner(pool, m, forest, options);
  require(init_indices.size() == learner.initial_size(), ErrorCode::kInvalidArgument,
          "active learning: expected " + std::to_string(learner.initial_size()) +
              " initial indices, got " + std::to_string(init_indices.size()));
  for (std::size_t index : init_indices) {
    Label l = 0;
    try {
      l = oracle.label(index);
    } catch (const std::exception& e) {
      throw OracleFailure(index, e.what());
    }
    learner.add_initial(index, l);
  }
  drive(learner, oracle);
  return {learner.labeled(), learner.trace(), learner.train()};
}

}  // namespace unisel
