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

#include "unisel/annotation_http.hpp"

#include <httplib.h>

#include <fstream>
#include <json.hpp>
#include <sstream>
#include <thread>

namespace unisel {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

json session_json(const SessionStatus& s) {
  json j{{"id", s.id},
         {"dataset", s.dataset},
         {"mode", to_string(s.mode)},
         {"m", s.m},
         {"seed", s.seed},
         {"state", to_string(s.state)},
         {"labeled_count", s.labeled_count},
         {"open_count", s.open_count},
         {"pool_size", s.pool_size},
         {"evaluation", s.evaluation},
         {"created", s.created},
         {"updated", s.updated}};
  j["pending"] = s.pending ? json(*s.pending) : json(nullptr);
  if (s.metrics) {
    const auto& mt = *s.metrics;
    j["metrics"] = {{"f1", mt.f1},
                    {"tp", mt.confusion.tp},
                    {"fp", mt.confusion.fp},
                    {"tn", mt.confusion.tn},
                    {"fn", mt.confusion.fn},
                    {"labeled", mt.labeled},
                    {"round", mt.round}};
  }
  if (s.error) j["error"] = *s.error;
  return j;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, status, {{"code", code}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
  try {
    return req.body.empty() ? json::object() : json::parse(req.body);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("malformed JSON body: ") + e.what());
  }
}

template <typename T>
T field(const json& body, const char* key) {
  require(body.is_object() && body.contains(key), ErrorCode::kInvalidArgument,
          std::string("missing field '") + key + "'");
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kInvalidArgument, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kDataError: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict:
    case ErrorCode::kFailedPrecondition: return 409;
    case ErrorCode::kIoError:
    case ErrorCode::kOracleFailure: return 500;
  }
  return 500;
}

ServerConfig parse_server_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("server config: ") + e.what());
  }
  require(j.is_object(), ErrorCode::kInvalidArgument, "server config must be an object");
  ServerConfig c;
  try {
    require(j.contains("datasets_dir"), ErrorCode::kInvalidArgument, "server config: datasets_dir is required");
    c.datasets_dir = resolve(base_dir, j["datasets_dir"].get<std::string>());
    if (j.contains("bind")) {
      const auto bind = j["bind"].get<std::string>();
      const auto colon = bind.rfind(':');
      if (colon != std::string::npos && bind.find(']') == std::string::npos) {
        c.host = bind.substr(0, colon);
        c.port = std::stoi(bind.substr(colon + 1));
      } else {
        c.host = bind;
      }
    }
    c.port = j.value("port", c.port);
    require(c.port >= 0 && c.port <= 65535, ErrorCode::kInvalidArgument, "server config: port out of range");
    if (j.contains("journal_dir")) c.service.journal_dir = resolve(base_dir, j["journal_dir"].get<std::string>());
    if (j.contains("static_dir")) c.static_dir = resolve(base_dir, j["static_dir"].get<std::string>());
    c.service.training_threads = j.value("training_threads", std::size_t{1});
    auto& trial = c.service.trial;
    trial.test_fraction = j.value("test_fraction", trial.test_fraction);
    if (j.contains("forest")) {
      const auto& f = j["forest"];
      trial.forest.n_trees = f.value("n_trees", trial.forest.n_trees);
      trial.forest.max_features = f.value("max_features", trial.forest.max_features);
      trial.forest.bootstrap = f.value("bootstrap", trial.forest.bootstrap);
    }
    if (j.contains("kmeans")) {
      const auto& k = j["kmeans"];
      trial.kmeans.n_init = k.value("n_init", trial.kmeans.n_init);
      trial.kmeans.max_iter = k.value("max_iter", trial.kmeans.max_iter);
      trial.kmeans.tol = k.value("tol", trial.kmeans.tol);
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kInvalidArgument, std::string("server config: ") + e.what());
  } catch (const std::logic_error& e) {
    fail(ErrorCode::kInvalidArgument, std::string("server config: bad bind address: ") + e.what());
  }
  require(c.service.trial.test_fraction > 0.0 && c.service.trial.test_fraction < 1.0,
          ErrorCode::kInvalidArgument, "server config: test_fraction must be in (0, 1)");
  require(c.service.trial.forest.n_trees >= 1, ErrorCode::kInvalidArgument, "server config: n_trees must be >= 1");
  return c;
}

ServerConfig load_server_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_server_config(ss.str(), path.parent_path());
}

struct AnnotationServer::Impl {
  SessionManager& sessions;
  httplib::Server server;
  std::thread thread;

  explicit Impl(SessionManager& s) : sessions(s) {}

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  static Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Error& e) {
        send_error(res, http_status(e.code()), error_code_name(e.code()), e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, "internal", e.what());
      }
    };
  }

  void routes() {
    server.Get("/datasets", guarded([this](const auto&, auto& res) {
      json out = json::array();
      for (const auto& ds : sessions.datasets().list()) {
        out.push_back({{"name", ds->name},
                       {"rows", ds->features.rows()},
                       {"dimension", ds->features.cols()},
                       {"ground_truth", ds->labels.has_value()}});
      }
      send_json(res, 200, out);
    }));
    server.Get("/sessions", guarded([this](const auto&, auto& res) {
      json out = json::array();
      for (const auto& s : sessions.list()) out.push_back(session_json(s));
      send_json(res, 200, out);
    }));
    server.Post("/sessions", guarded([this](const auto& req, auto& res) {
      const json body = parse_body(req);
      const auto m = field<long long>(body, "m");
      require(m >= 1, ErrorCode::kInvalidArgument, "m must be >= 1");
      const auto seed = body.contains("seed") ? field<std::uint64_t>(body, "seed") : std::uint64_t{0};
      const auto status = sessions.create(field<std::string>(body, "dataset"),
                                          parse_session_mode(field<std::string>(body, "mode")),
                                          static_cast<std::size_t>(m), seed);
      res.set_header("Location", "/sessions/" + status.id);
      send_json(res, 201, session_json(status));
    }));
    server.Get(R"(/sessions/([0-9a-zA-Z_-]+))", guarded([this](const auto& req, auto& res) {
      send_json(res, 200, session_json(sessions.status(req.matches[1].str())));
    }));
    server.Get(R"(/sessions/([0-9a-zA-Z_-]+)/items)", guarded([this](const auto& req, auto& res) {
      const std::string id = req.matches[1].str();
      json items = json::array();
      for (const auto& it : sessions.items(id)) {
        items.push_back({{"pool_index", it.pool_index},
                         {"row", it.row},
                         {"features", it.features},
                         {"pca", {it.pca[0], it.pca[1]}}});
      }
      const auto st = sessions.status(id);
      send_json(res, 200, {{"state", to_string(st.state)}, {"items", items}});
    }));
    server.Post(R"(/sessions/([0-9a-zA-Z_-]+)/labels)", guarded([this](const auto& req, auto& res) {
      const json body = parse_body(req);
      const auto list = field<json>(body, "labels");
      require(list.is_array(), ErrorCode::kInvalidArgument, "labels must be an array");
      std::vector<LabelAssignment> labels;
      for (const auto& entry : list) {
        const auto index = field<long long>(entry, "pool_index");
        require(index >= 0, ErrorCode::kNotFound, "unknown pool index " + std::to_string(index));
        labels.push_back({static_cast<std::size_t>(index), field<int>(entry, "label")});
      }
      const bool wait = body.value("wait", false);
      const auto result = sessions.submit(req.matches[1].str(), labels, wait);
      json out = session_json(result.status);
      out["accepted"] = result.accepted;
      send_json(res, 200, out);
    }));
    server.Get(R"(/sessions/([0-9a-zA-Z_-]+)/export)", guarded([this](const auto& req, auto& res) {
      res.status = 200;
      res.set_header("Content-Disposition", "attachment; filename=\"labels.csv\"");
      res.set_content(sessions.export_csv(req.matches[1].str()), "text/csv");
    }));
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 404) {
        send_error(res, 404, "not_found", "no such route");
      } else {
        send_error(res, res.status, "invalid_argument", "request rejected");
      }
    });
  }
};

AnnotationServer::AnnotationServer(SessionManager& sessions, std::filesystem::path static_dir)
    : impl_(std::make_unique<Impl>(sessions)) {
  impl_->routes();
  if (!static_dir.empty()) {
    require(impl_->server.set_mount_point("/", static_dir.string()), ErrorCode::kIoError,
            "cannot serve static files from " + static_dir.string());
  }
}

AnnotationServer::~AnnotationServer() { stop(); }

void AnnotationServer::listen(const std::string& host, int port) {
  require(impl_->server.listen(host, port), ErrorCode::kIoError,
          "cannot listen on " + host + ":" + std::to_string(port));
}

int AnnotationServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  require(bound > 0, ErrorCode::kIoError, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void AnnotationServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace unisel
