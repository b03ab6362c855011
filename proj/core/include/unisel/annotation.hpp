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
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "unisel/active.hpp"
#include "unisel/harness.hpp"
#include "unisel/matrix.hpp"
#include "unisel/metrics.hpp"

namespace unisel {

enum class SessionMode { kUniselBatch, kAlSequential, kUniselAl };
enum class SessionState { kCollecting, kTraining, kQuerying, kComplete };

std::string_view to_string(SessionMode mode);
std::string_view to_string(SessionState state);
SessionMode parse_session_mode(std::string_view name);

// A dataset served for annotation. With ground truth, sessions label the
// training partition of a stratified split and report held-out metrics;
// without it the pool is every row.
struct AnnotationDataset {
  std::string name;
  Matrix features;
  std::optional<std::vector<Label>> labels;
  Matrix pca;  // n x 2, computed once at registration
};

class DatasetRegistry {
 public:
  void add(std::string name, Matrix features, std::optional<std::vector<Label>> labels = std::nullopt);
  void add(const Dataset& ds) { add(ds.name(), ds.features(), ds.labels()); }
  // Registers every *.csv in the directory under its file stem; returns the count.
  std::size_t load_directory(const std::filesystem::path& dir);

  std::shared_ptr<const AnnotationDataset> find(std::string_view name) const;
  std::vector<std::shared_ptr<const AnnotationDataset>> list() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<const AnnotationDataset>, std::less<>> datasets_;
};

struct ServiceOptions {
  HarnessOptions trial;  // split fraction, forest and k-means settings
  std::size_t training_threads = 1;
  std::filesystem::path journal_dir;  // empty disables persistence
};

struct SessionMetrics {
  double f1 = 0.0;
  ConfusionCounts confusion;
  std::size_t labeled = 0;  // labels the model was trained on
  std::size_t round = 0;    // 1-based training round
};

struct SessionStatus {
  std::string id;
  std::string dataset;
  SessionMode mode = SessionMode::kUniselBatch;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  SessionState state = SessionState::kCollecting;
  std::size_t labeled_count = 0;
  std::size_t open_count = 0;
  std::size_t pool_size = 0;
  std::optional<std::size_t> pending;  // AL query awaiting a label
  bool evaluation = false;
  std::optional<SessionMetrics> metrics;
  std::optional<std::string> error;  // last background training failure
  std::string created;
  std::string updated;
};

struct SessionItem {
  std::size_t pool_index = 0;
  std::size_t row = 0;  // row in the registered dataset
  std::vector<double> features;
  std::array<double, 2> pca{0.0, 0.0};
};

struct LabelAssignment {
  std::size_t pool_index = 0;
  int label = 0;
};

struct SubmitResult {
  SessionStatus status;
  std::size_t accepted = 0;  // newly recorded labels (resubmissions excluded)
};

// Owns labeling sessions. Calls for one session are serialized; training
// runs on background workers and status calls never wait for it.
class SessionManager {
 public:
  SessionManager(std::shared_ptr<const DatasetRegistry> datasets, ServiceOptions options = {});
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  SessionStatus create(std::string_view dataset, SessionMode mode, std::size_t m, std::uint64_t seed);
  SessionStatus status(std::string_view id) const;
  std::vector<SessionStatus> list() const;
  // Items currently open for labeling; empty once the session completes.
  std::vector<SessionItem> items(std::string_view id) const;
  // Validates all assignments before recording any of them.
  SubmitResult submit(std::string_view id, std::span<const LabelAssignment> labels, bool wait = false);
  // Blocks while the session is training.
  SessionStatus wait(std::string_view id) const;
  std::vector<LabeledInstance> labels(std::string_view id) const;
  std::string export_csv(std::string_view id) const;

  // Final model of a complete session.
  std::optional<ForestModel> model(std::string_view id) const;

  const DatasetRegistry& datasets() const noexcept { return *datasets_; }

  // Sessions restored from the journal directory at construction.
  std::size_t restored() const noexcept { return restored_; }

 private:
  struct Session;

  std::shared_ptr<Session> find(std::string_view id) const;
  std::shared_ptr<Session> make_session(std::string id, std::string_view dataset, SessionMode mode,
                                        std::size_t m, std::uint64_t seed, std::string created);
  // Records one validated label; returns true when the session must train.
  bool apply_locked(Session& s, std::size_t index, Label label, bool replaying);
  void schedule(const std::shared_ptr<Session>& s, bool inline_run);
  void train(Session& s);
  void replay_journal();
  void worker_loop(std::stop_token stop);

  std::shared_ptr<const DatasetRegistry> datasets_;
  ServiceOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>, std::less<>> sessions_;
  std::size_t restored_ = 0;

  std::mutex queue_mu_;
  std::condition_variable_any queue_cv_;
  std::deque<std::shared_ptr<Session>> queue_;
  std::vector<std::jthread> workers_;
};

}  // namespace unisel
