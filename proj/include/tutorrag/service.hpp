// Copyright 2026 The tutorrag Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "tutorrag/pipeline.hpp"
#include "tutorrag/rate_limiter.hpp"

namespace httplib {
class Server;
}

namespace tutorrag {

struct ServiceConfig {
  std::string bind_address = "127.0.0.1:8080";
  // Empty: start with no index (health reports "degraded").
  std::string index_path;
  // Empty: built-in defaults.
  std::string guardrail_config_path;
  std::string generation_config_path;
  RateLimit rate_limit;
  std::size_t max_question_chars = 2000;
  EmbedderConfig embedder;
  std::chrono::seconds session_ttl{7200};
  // Header carrying the client key for rate limiting; the peer address is
  // used when it is absent.
  std::string client_key_header = "X-Client-Key";
  // Adds question text to request logs.
  bool debug = false;
};

struct HttpResult {
  int status = 200;
  nlohmann::json body;
  std::map<std::string, std::string> headers;
};

// Maps library errors onto HTTP statuses: 400 bad input, 502 upstream model
// failure, 503 no index, 500 otherwise.
int http_status_for(const std::exception& e);

class Service {
 public:
  using LogSink = std::function<void(const nlohmann::json&)>;

  Service(ServiceConfig cfg, std::shared_ptr<QueryPipeline> pipeline,
          RateLimiter::Clock clock = {}, LogSink log = {});
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Route handlers, callable without a socket.
  HttpResult handle_ask(const std::string& body, const std::string& client_key);
  HttpResult handle_ingest(const std::string& body, const std::string& client_key);
  HttpResult handle_health() const;

  // Binds to cfg.bind_address; a port of 0 picks a free port. Returns the
  // bound port. Throws IoError.
  int bind();
  // Blocks until stop().
  void serve();
  void stop();

  QueryPipeline& pipeline() { return *pipeline_; }

 private:
  void log_request(const std::string& route, int status, double latency_ms, bool rejected,
                   const std::string& client_key, const std::string* question) const;
  std::optional<HttpResult> check_rate(const std::string& client_key);

  ServiceConfig cfg_;
  std::shared_ptr<QueryPipeline> pipeline_;
  RateLimiter limiter_;
  LogSink log_;
  std::chrono::steady_clock::time_point started_;
  std::unique_ptr<httplib::Server> server_;
};

// Builds the pipeline from a ServiceConfig (loads the index and the
// referenced config files).
std::shared_ptr<QueryPipeline> make_pipeline(const ServiceConfig& cfg);

}  // namespace tutorrag
