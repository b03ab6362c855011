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

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>

#include "unisel/annotation.hpp"
#include "unisel/error.hpp"

namespace unisel {

struct ServerConfig {
  std::filesystem::path datasets_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path static_dir;  // optional web client to serve at /
  ServiceOptions service;
};

// Keys: datasets_dir (required), bind ("host" or "host:port"), port,
// journal_dir, static_dir, training_threads, test_fraction,
// forest {n_trees, max_features, bootstrap}, kmeans {n_init, max_iter, tol}.
// Relative paths resolve against base_dir.
ServerConfig parse_server_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
ServerConfig load_server_config(const std::filesystem::path& path);

int http_status(ErrorCode code);

// JSON over HTTP:
//   GET  /datasets
//   GET  /sessions                 POST /sessions {dataset, mode, m, seed}
//   GET  /sessions/{id}            GET  /sessions/{id}/items
//   POST /sessions/{id}/labels {labels: [{pool_index, label}], wait}
//   GET  /sessions/{id}/export     (text/csv)
// Errors are {"code": ..., "message": ...}.
class AnnotationServer {
 public:
  explicit AnnotationServer(SessionManager& sessions, std::filesystem::path static_dir = {});
  ~AnnotationServer();
  AnnotationServer(const AnnotationServer&) = delete;
  AnnotationServer& operator=(const AnnotationServer&) = delete;

  // Blocks until stop().
  void listen(const std::string& host, int port);
  // Binds (port 0 picks a free one), serves on a background thread and
  // returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace unisel
