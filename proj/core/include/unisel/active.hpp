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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "unisel/error.hpp"
#include "unisel/forest.hpp"
#include "unisel/matrix.hpp"

namespace unisel {

// Label source for pool indices. Implementations must return the same label
// when asked twice for the same index.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual Label label(std::size_t pool_index) = 0;
};

// Simulated annotator answering from ground truth.
class GroundTruthOracle final : public Oracle {
 public:
  explicit GroundTruthOracle(std::span<const Label> truth) : truth_(truth) {}
  Label label(std::size_t pool_index) override;

 private:
  std::span<const Label> truth_;
};

enum class LabelSource { kInit, kQuery, kBatch };
std::string_view to_string(LabelSource s);

struct LabeledInstance {
  std::size_t index = 0;
  Label label = 0;
  LabelSource source = LabelSource::kInit;
};

struct QueryRecord {
  std::size_t iteration = 0;
  std::size_t index = 0;
  Label label = 0;
  double probability = 0.0;  // estimate at query time
  // Filled only when scores are recorded: candidates in ascending pool order
  // and their estimates.
  IndexList candidates;
  std::vector<double> candidate_probabilities;
};

struct ALTrace {
  std::vector<QueryRecord> queries;
};

// Candidate minimizing |p - 0.5|; ties to the lowest pool index.
std::size_t select_query(std::span<const double> probabilities, std::span<const std::size_t> candidates);

// Thrown when the oracle fails; the learner keeps the pending query so the
// loop can be resumed.
class OracleFailure : public Error {
 public:
  OracleFailure(std::size_t pending_index, const std::string& reason)
      : Error(ErrorCode::kOracleFailure,
              "oracle failed on pool index " + std::to_string(pending_index) + ": " + reason),
        pending_index_(pending_index) {}
  std::size_t pending_index() const noexcept { return pending_index_; }

 private:
  std::size_t pending_index_;
};

struct ALOptions {
  bool record_scores = false;
};

// Pool-based uncertainty sampling, one query at a time. The learner owns the
// labeled/unlabeled partition, the trace and the pending query, so a run can
// be suspended between any two steps.
class ActiveLearner {
 public:
  ActiveLearner(const Matrix& pool, std::size_t m, ForestConfig forest, ALOptions options = {});

  std::size_t target() const noexcept { return m_; }
  std::size_t initial_size() const noexcept { return m_ / 2; }
  std::size_t labeled_count() const noexcept { return labeled_.size(); }
  bool initialized() const noexcept { return labeled_.size() >= initial_size(); }
  bool done() const noexcept { return labeled_.size() >= m_; }
  bool is_labeled(std::size_t index) const { return index < flags_.size() && flags_[index]; }

  const std::vector<LabeledInstance>& labeled() const noexcept { return labeled_; }
  IndexList unlabeled() const;
  const ALTrace& trace() const noexcept { return trace_; }
  std::optional<std::size_t> pending() const noexcept { return pending_; }
  const std::optional<ForestModel>& model() const noexcept { return model_; }

  // Records one of the floor(m/2) initial labels.
  void add_initial(std::size_t index, Label label);

  // Retrains on the current labels, scores the unlabeled pool and returns
  // the query. Idempotent while a query is pending.
  std::size_t propose();

  // Labels the pending query.
  void answer(Label label);

  // Forest on all current labels (rows in ascending pool order).
  ForestModel train() const;

 private:
  void mark(std::size_t index, Label label, LabelSource source);

  const Matrix& pool_;
  std::size_t m_;
  ForestConfig forest_;
  ALOptions options_;
  std::vector<char> flags_;
  std::vector<LabeledInstance> labeled_;
  ALTrace trace_;
  std::optional<std::size_t> pending_;
  double pending_probability_ = 0.5;
  IndexList pending_candidates_;
  std::vector<double> pending_scores_;
  std::optional<ForestModel> model_;
};

// Trains a forest on the given pool rows, ordered by ascending pool index.
ForestModel train_on_labels(const Matrix& pool, std::vector<LabeledInstance> labeled,
                            const ForestConfig& forest);

// Drives the learner to m labels, asking the oracle for every label. Resumes
// a pending query first if one exists.
void drive(ActiveLearner& learner, Oracle& oracle);

struct ALResult {
  std::vector<LabeledInstance> labeled;
  ALTrace trace;
  ForestModel model;
};

// |init_indices| must equal floor(m/2); the remaining ceil(m/2) labels are
// acquired by uncertainty sampling.
ALResult run_active_learning(const Matrix& pool, Oracle& oracle, std::size_t m,
                             std::span<const std::size_t> init_indices, const ForestConfig& forest,
                             const ALOptions& options = {});

}  // namespace unisel
