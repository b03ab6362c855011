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

#include "unisel/annotation.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "unisel/data.hpp"
#include "unisel/error.hpp"
#include "unisel/selection.hpp"

namespace unisel {

using nlohmann::json;

std::string_view to_string(SessionMode mode) {
  switch (mode) {
    case SessionMode::kUniselBatch: return "unisel_batch";
    case SessionMode::kAlSequential: return "al_sequential";
    case SessionMode::kUniselAl: return "unisel_al";
  }
  return "unknown";
}

std::string_view to_string(SessionState state) {
  switch (state) {
    case SessionState::kCollecting: return "collecting";
    case SessionState::kTraining: return "training";
    case SessionState::kQuerying: return "querying";
    case SessionState::kComplete: return "complete";
  }
  return "unknown";
}

SessionMode parse_session_mode(std::string_view name) {
  for (auto mode : {SessionMode::kUniselBatch, SessionMode::kAlSequential, SessionMode::kUniselAl}) {
    if (to_string(mode) == name) return mode;
  }
  fail(ErrorCode::kInvalidArgument, "unknown session mode '" + std::string(name) + "'");
}

void DatasetRegistry::add(std::string name, Matrix features, std::optional<std::vector<Label>> labels) {
  require(features.rows() >= 2, ErrorCode::kDataError, "dataset '" + name + "' needs at least 2 rows");
  require(features.all_finite(), ErrorCode::kDataError, "dataset '" + name + "' contains non-finite values");
  require(!labels || labels->size() == features.rows(), ErrorCode::kDataError,
          "dataset '" + name + "': label count does not match row count");
  auto entry = std::make_shared<AnnotationDataset>();
  entry->name = name;
  entry->pca = pca_project(features, std::min<std::size_t>(2, features.cols()));
  if (entry->pca.cols() < 2) {
    Matrix padded(entry->pca.rows(), 2);
    for (std::size_t i = 0; i < padded.rows(); ++i) padded(i, 0) = entry->pca(i, 0);
    entry->pca = std::move(padded);
  }
  entry->features = std::move(features);
  entry->labels = std::move(labels);
  std::lock_guard lock(mu_);
  datasets_[std::move(name)] = std::move(entry);
}

std::size_t DatasetRegistry::load_directory(const std::filesystem::path& dir) {
  require(std::filesystem::is_directory(dir), ErrorCode::kIoError,
          "datasets directory " + dir.string() + " does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    FeatureTable table = load_feature_table(path);
    std::optional<std::vector<Label>> labels;
    if (!table.labels.empty()) labels = std::move(table.labels);
    add(path.stem().string(), std::move(table.features), std::move(labels));
  }
  return files.size();
}

std::shared_ptr<const AnnotationDataset> DatasetRegistry::find(std::string_view name) const {
  std::lock_guard lock(mu_);
  const auto it = datasets_.find(name);
  return it == datasets_.end() ? nullptr : it->second;
}

std::vector<std::shared_ptr<const AnnotationDataset>> DatasetRegistry::list() const {
  std::lock_guard lock(mu_);
  std::vector<std::shared_ptr<const AnnotationDataset>> out;
  for (const auto& [name, ds] : datasets_) out.push_back(ds);
  return out;
}

namespace {

std::string now_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof(out), "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::string new_session_id() {
  static std::mutex mu;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mu);
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

std::filesystem::path journal_path(const std::filesystem::path& dir, const std::string& id) {
  return dir / (id + ".jsonl");
}

void append_journal(const std::filesystem::path& path, const json& line) {
  std::ofstream out(path, std::ios::app);
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot append to journal " + path.string());
  out << line.dump() << '\n';
  out.flush();
  require(static_cast<bool>(out), ErrorCode::kIoError, "cannot append to journal " + path.string());
}

}  // namespace

struct SessionManager::Session {
  mutable std::mutex mu;
  mutable std::condition_variable cv;

  std::string id;
  std::shared_ptr<const AnnotationDataset> data;
  SessionMode mode = SessionMode::kUniselBatch;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  std::string created;
  std::string updated;
  std::filesystem::path journal;

  IndexList rows;  // pool index -> dataset row
  Matrix pool;
  bool evaluation = false;
  Matrix test_x;
  std::vector<Label> test_y;
  ForestConfig forest;

  SessionState state = SessionState::kCollecting;
  std::vector<LabeledInstance> labeled;
  std::vector<signed char> label_of;  // -1 while unlabeled
  IndexList open;
  std::optional<std::size_t> pending;
  std::unique_ptr<ActiveLearner> learner;
  std::optional<SessionMetrics> metrics;
  std::size_t rounds = 0;
  std::optional<ForestModel> final_model;
  std::optional<std::string> error;

  bool is_open(std::size_t index) const { return std::find(open.begin(), open.end(), index) != open.end(); }

  SessionStatus status() const {
    SessionStatus st;
    st.id = id;
    st.dataset = data->name;
    st.mode = mode;
    st.m = m;
    st.seed = seed;
    st.state = state;
    st.labeled_count = labeled.size();
    st.open_count = state == SessionState::kTraining ? 0 : open.size();
    st.pool_size = pool.rows();
    st.pending = pending;
    st.evaluation = evaluation;
    st.metrics = metrics;
    st.error = error;
    st.created = created;
    st.updated = updated;
    return st;
  }

  SessionMetrics evaluate(const ForestModel& model) const {
    SessionMetrics out;
    out.confusion = confusion(test_y, model.predict(test_x));
    out.f1 = f1_score(out.confusion);
    out.labeled = labeled.size();
    out.round = rounds;
    return out;
  }
};

SessionManager::SessionManager(std::shared_ptr<const DatasetRegistry> datasets, ServiceOptions options)
    : datasets_(std::move(datasets)), options_(std::move(options)) {
  require(datasets_ != nullptr, ErrorCode::kInvalidArgument, "session manager needs a dataset registry");
  if (!options_.journal_dir.empty()) {
    std::filesystem::create_directories(options_.journal_dir);
    replay_journal();
  }
  const std::size_t threads = std::max<std::size_t>(1, options_.training_threads);
  for (std::size_t i = 0; i < threads; ++i) {
    workers_.emplace_back([this](std::stop_token stop) { worker_loop(stop); });
  }
}

SessionManager::~SessionManager() {
  for (auto& w : workers_) w.request_stop();
  queue_cv_.notify_all();
  workers_.clear();
}

void SessionManager::worker_loop(std::stop_token stop) {
  while (true) {
    std::shared_ptr<Session> s;
    {
      std::unique_lock lock(queue_mu_);
      if (!queue_cv_.wait(lock, stop, [&] { return !queue_.empty(); })) return;
      s = std::move(queue_.front());
      queue_.pop_front();
    }
    train(*s);
  }
}

void SessionManager::schedule(const std::shared_ptr<Session>& s, bool inline_run) {
  if (inline_run) {
    train(*s);
    return;
  }
  {
    std::lock_guard lock(queue_mu_);
    queue_.push_back(s);
  }
  queue_cv_.notify_one();
}

void SessionManager::train(Session& s) {
  // While the state is training no request touches the learner, so the
  // heavy work runs without the session lock.
  try {
    std::optional<ForestModel> model;
    std::optional<std::size_t> query;
    bool complete = false;
    if (s.mode == SessionMode::kUniselBatch) {
      std::vector<LabeledInstance> labeled;
      {
        std::lock_guard lock(s.mu);
        labeled = s.labeled;
      }
      model = train_on_labels(s.pool, std::move(labeled), s.forest);
      complete = true;
    } else if (s.learner->done()) {
      model = s.learner->train();
      complete = true;
    } else {
      query = s.learner->propose();
      model = s.learner->model();
    }

    std::lock_guard lock(s.mu);
    ++s.rounds;
    if (model && s.evaluation) s.metrics = s.evaluate(*model);
    if (complete) {
      s.final_model = std::move(model);
      s.state = SessionState::kComplete;
      s.open.clear();
    } else {
      s.pending = query;
      s.open = {*query};
      s.state = SessionState::kQuerying;
    }
    s.error.reset();
    s.updated = now_iso();
  } catch (const std::exception& e) {
    std::lock_guard lock(s.mu);
    s.error = e.what();
    s.updated = now_iso();
  }
  s.cv.notify_all();
}

std::shared_ptr<SessionManager::Session> SessionManager::make_session(std::string id, std::string_view dataset,
                                                                      SessionMode mode, std::size_t m,
                                                                      std::uint64_t seed, std::string created) {
  auto data = datasets_->find(dataset);
  require(data != nullptr, ErrorCode::kNotFound, "unknown dataset '" + std::string(dataset) + "'");

  auto s = std::make_shared<Session>();
  s->id = std::move(id);
  s->data = data;
  s->mode = mode;
  s->m = m;
  s->seed = seed;
  s->created = created;
  s->updated = std::move(created);

  const TrialSeeds seeds = trial_seeds(seed);
  const auto& labels = data->labels;
  const bool both_classes = labels && std::count(labels->begin(), labels->end(), 1) > 0 &&
                            std::count(labels->begin(), labels->end(), 0) > 0;
  if (both_classes) {
    const auto split = stratified_split(*labels, options_.trial.test_fraction, seeds.split);
    s->rows = split.train_indices;
    s->evaluation = true;
    s->test_x = data->features.select_rows(split.test_indices);
    for (auto i : split.test_indices) s->test_y.push_back((*labels)[i]);
  } else {
    s->rows.resize(data->features.rows());
    for (std::size_t i = 0; i < s->rows.size(); ++i) s->rows[i] = i;
  }
  s->pool = data->features.select_rows(s->rows);
  require(m >= 1 && m <= s->pool.rows(), ErrorCode::kInvalidArgument,
          "m must be between 1 and the pool size " + std::to_string(s->pool.rows()));
  s->label_of.assign(s->pool.rows(), -1);
  s->forest = options_.trial.forest;
  s->forest.seed = seeds.forest;

  if (mode == SessionMode::kUniselBatch) {
    s->open = unisel_select(s->pool, m, seeds.selection, options_.trial.kmeans).indices;
  } else {
    s->learner = std::make_unique<ActiveLearner>(s->pool, m, s->forest);
    const std::size_t init = m / 2;
    if (init > 0) {
      s->open = mode == SessionMode::kAlSequential
                    ? random_select(s->pool.rows(), init, seeds.selection).indices
                    : unisel_select(s->pool, init, seeds.selection, options_.trial.kmeans).indices;
    } else {
      s->state = SessionState::kTraining;
    }
  }
  if (!options_.journal_dir.empty()) s->journal = journal_path(options_.journal_dir, s->id);
  return s;
}

SessionStatus SessionManager::create(std::string_view dataset, SessionMode mode, std::size_t m,
                                     std::uint64_t seed) {
  auto s = make_session(new_session_id(), dataset, mode, m, seed, now_iso());
  if (!s->journal.empty()) {
    append_journal(s->journal, {{"type", "create"},
                                {"id", s->id},
                                {"dataset", s->data->name},
                                {"mode", to_string(mode)},
                                {"m", m},
                                {"seed", seed},
                                {"created", s->created}});
  }
  {
    std::lock_guard lock(mu_);
    sessions_[s->id] = s;
  }
  std::lock_guard lock(s->mu);
  if (s->state == SessionState::kTraining) schedule(s, false);
  return s->status();
}

bool SessionManager::apply_locked(Session& s, std::size_t index, Label label, bool replaying) {
  s.label_of[index] = static_cast<signed char>(label);
  s.open.erase(std::find(s.open.begin(), s.open.end(), index));
  bool train_now = false;
  if (s.mode == SessionMode::kUniselBatch) {
    s.labeled.push_back({index, label, LabelSource::kBatch});
    train_now = s.labeled.size() == s.m;
  } else if (s.state == SessionState::kCollecting) {
    s.learner->add_initial(index, label);
    s.labeled.push_back({index, label, LabelSource::kInit});
    train_now = s.learner->initialized();
  } else {
    s.learner->answer(label);
    s.labeled.push_back({index, label, LabelSource::kQuery});
    s.pending.reset();
    train_now = true;
  }
  if (train_now) s.state = SessionState::kTraining;
  if (!replaying && !s.journal.empty()) {
    append_journal(s.journal, {{"type", "label"}, {"index", index}, {"label", int(label)}});
  }
  s.updated = now_iso();
  return train_now;
}

SubmitResult SessionManager::submit(std::string_view id, std::span<const LabelAssignment> labels, bool wait) {
  auto s = find(id);
  std::unique_lock lock(s->mu);

  // Validate the whole request first so it is applied all-or-nothing.
  std::vector<std::pair<std::size_t, Label>> fresh;
  for (const auto& a : labels) {
    require(a.label == 0 || a.label == 1, ErrorCode::kInvalidArgument,
            "label for pool index " + std::to_string(a.pool_index) + " must be 0 or 1");
    require(a.pool_index < s->pool.rows(), ErrorCode::kNotFound,
            "unknown pool index " + std::to_string(a.pool_index));
    const Label l = static_cast<Label>(a.label);
    const auto previous = s->label_of[a.pool_index];
    if (previous >= 0) {
      require(previous == a.label, ErrorCode::kConflict,
              "pool index " + std::to_string(a.pool_index) + " is already labeled " + std::to_string(previous));
      continue;
    }
    const auto dup = std::find_if(fresh.begin(), fresh.end(), [&](const auto& f) { return f.first == a.pool_index; });
    if (dup != fresh.end()) {
      require(dup->second == l, ErrorCode::kConflict,
              "conflicting labels for pool index " + std::to_string(a.pool_index));
      continue;
    }
    require(s->state != SessionState::kTraining, ErrorCode::kFailedPrecondition,
            "session is training; no items are open");
    require(s->state != SessionState::kComplete, ErrorCode::kFailedPrecondition, "session is complete");
    require(s->is_open(a.pool_index), ErrorCode::kFailedPrecondition,
            "pool index " + std::to_string(a.pool_index) + " is not open for labeling");
    // In AL modes labeling the pending query closes every other item.
    require(fresh.empty() || s->state != SessionState::kQuerying, ErrorCode::kFailedPrecondition,
            "only the pending query can be labeled");
    fresh.emplace_back(a.pool_index, l);
  }

  bool train_now = false;
  for (const auto& [index, label] : fresh) train_now |= apply_locked(*s, index, label, false);
  if (train_now) schedule(s, false);
  if (wait) {
    s->cv.wait(lock, [&] { return s->state != SessionState::kTraining || s->error.has_value(); });
  }
  return {s->status(), fresh.size()};
}

SessionStatus SessionManager::wait(std::string_view id) const {
  auto s = find(id);
  std::unique_lock lock(s->mu);
  s->cv.wait(lock, [&] { return s->state != SessionState::kTraining || s->error.has_value(); });
  return s->status();
}

std::shared_ptr<SessionManager::Session> SessionManager::find(std::string_view id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  require(it != sessions_.end(), ErrorCode::kNotFound, "unknown session '" + std::string(id) + "'");
  return it->second;
}

SessionStatus SessionManager::status(std::string_view id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->status();
}

std::vector<SessionStatus> SessionManager::list() const {
  std::vector<std::shared_ptr<Session>> all;
  {
    std::lock_guard lock(mu_);
    for (const auto& [id, s] : sessions_) all.push_back(s);
  }
  std::vector<SessionStatus> out;
  for (const auto& s : all) {
    std::lock_guard lock(s->mu);
    out.push_back(s->status());
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return std::tie(a.created, a.id) < std::tie(b.created, b.id); });
  return out;
}

std::vector<SessionItem> SessionManager::items(std::string_view id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  std::vector<SessionItem> out;
  if (s->state == SessionState::kTraining || s->state == SessionState::kComplete) return out;
  for (auto index : s->open) {
    SessionItem item;
    item.pool_index = index;
    item.row = s->rows[index];
    const auto x = s->pool.row(index);
    item.features.assign(x.begin(), x.end());
    item.pca = {s->data->pca(item.row, 0), s->data->pca(item.row, 1)};
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<LabeledInstance> SessionManager::labels(std::string_view id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->labeled;
}

std::string SessionManager::export_csv(std::string_view id) const {
  std::string out = "pool_index,label,source\n";
  for (const auto& l : labels(id)) {
    out += std::to_string(l.index) + ',' + (l.label ? '1' : '0') + ',' + std::string(to_string(l.source)) + '\n';
  }
  return out;
}

std::optional<ForestModel> SessionManager::model(std::string_view id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->final_model;
}

void SessionManager::replay_journal() {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(options_.journal_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    try {
      std::ifstream in(path);
      std::string line;
      require(static_cast<bool>(std::getline(in, line)), ErrorCode::kDataError, "empty journal");
      const json head = json::parse(line);
      require(head.value("type", "") == "create", ErrorCode::kDataError, "journal must start with create");
      auto s = make_session(head.at("id").get<std::string>(), head.at("dataset").get<std::string>(),
                            parse_session_mode(head.at("mode").get<std::string>()), head.at("m").get<std::size_t>(),
                            head.at("seed").get<std::uint64_t>(), head.at("created").get<std::string>());
      if (s->state == SessionState::kTraining) train(*s);
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        json entry;
        try {
          entry = json::parse(line);
        } catch (const json::exception&) {
          break;  // torn final write
        }
        const auto index = entry.at("index").get<std::size_t>();
        const auto label = static_cast<Label>(entry.at("label").get<int>());
        bool train_now = false;
        {
          std::lock_guard lock(s->mu);
          require(index < s->pool.rows() && s->label_of[index] < 0 && s->is_open(index) &&
                      s->state != SessionState::kTraining,
                  ErrorCode::kDataError, "journal label for pool index " + std::to_string(index) + " is not open");
          train_now = apply_locked(*s, index, label, true);
        }
        if (train_now) train(*s);
      }
      std::lock_guard lock(mu_);
      sessions_[s->id] = s;
      ++restored_;
    } catch (const std::exception& e) {
      std::cerr << "unisel: skipping journal " << path.string() << ": " << e.what() << '\n';
    }
  }
}

}  // namespace unisel
