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

// HTTP annotation server.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <memory>

#include "unisel/annotation.hpp"
#include "unisel/annotation_http.hpp"

using namespace unisel;

int main(int argc, char** argv) {
  CLI::App app{"Labeling sessions over HTTP"};
  std::string config_path;
  app.add_option("--config", config_path, "Server config JSON")->required()->check(CLI::ExistingFile);
  CLI11_PARSE(app, argc, argv);

  // Blocked before any thread starts so every thread inherits the mask and
  // the main thread alone receives SIGINT/SIGTERM through sigwait.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  try {
    const ServerConfig config = load_server_config(config_path);
    auto registry = std::make_shared<DatasetRegistry>();
    const std::size_t loaded = registry->load_directory(config.datasets_dir);
    SessionManager sessions(registry, config.service);
    AnnotationServer server(sessions, config.static_dir);

    const int port = server.start(config.host, config.port);
    std::cerr << "unisel-annotate: " << loaded << " dataset(s), " << sessions.restored()
              << " restored session(s), listening on " << config.host << ':' << port << '\n';
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  } catch (const std::exception& e) {
    std::cerr << "unisel-annotate: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
