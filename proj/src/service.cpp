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

#include "tutorrag/service.hpp"

#include <cmath>
#include <iostream>
#include <mutex>

#include <httplib.h>

#include "tutorrag/config.hpp"
#include "tutorrag/error.hpp"
#include "tutorrag/text_util.hpp"

namespace tutorrag {

using nlohmann::json;

int http_status_for(const std::exception& e) {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (err == nullptr) return 500;
  switch (err->code()) {
    case ErrorCode::SchemaError:
    case ErrorCode::EncodingError:
    case ErrorCode::PageOutOfRange:
    case ErrorCode::EmptyMerge:
    case ErrorCode::EmptyDocument:
    case ErrorCode::EmptyQuestion:
    case ErrorCode::EmptyContext:
    case ErrorCode::InvalidArgument:
      return 400;
    case ErrorCode::AuthError:
    case ErrorCode::TransportError:
    case ErrorCode::ModelRefusal:
    case ErrorCode::DimensionMismatch:
      return 502;
    case ErrorCode::EmptyIndex:
      return 503;
    default:
      return 500;
  }
}

namespace {

HttpResult error_result(const std::exception& e) {
  HttpResult r;
  r.status = http_status_for(e);
  const auto* err = dynamic_cast<const Error*>(&e);
  r.body = {{"error", err != nullptr ? std::string(error_code_name(err->code())) : "InternalError"},
            {"message", r.status == 500 && err == nullptr ? "internal error" : e.what()}};
  return r;
}

void default_log(const json& line) {
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::clog << line.dump() << '\n';
}

std::pair<std::string, int> split_host_port(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::ConfigError, "bind_address must be host:port");
  }
  try {
    const int port = std::stoi(address.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    return {address.substr(0, colon), port};
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::ConfigError, "bad port in bind_address '" + address + "'");
  }
}

}  // namespace

Service::Service(ServiceConfig cfg, std::shared_ptr<QueryPipeline> pipeline,
                 RateLimiter::Clock clock, LogSink log)
    : cfg_(std::move(cfg)),
      pipeline_(std::move(pipeline)),
      limiter_(cfg_.rate_limit, std::move(clock)),
      log_(log ? std::move(log) : LogSink(default_log)),
      started_(std::chrono::steady_clock::now()) {
  if (!pipeline_) throw Error(ErrorCode::InvalidArgument, "service needs a pipeline");
}

Service::~Service() { stop(); }

void Service::log_request(const std::string& route, int status, double latency_ms, bool rejected,
                          const std::string& client_key, const std::string* question) const {
  const auto now = std::chrono::system_clock::now();
  json line = {
      {"ts", std::chrono::duration<double>(now.time_since_epoch()).count()},
      {"route", route},
      {"status", status},
      {"latency_ms", std::round(latency_ms * 1000.0) / 1000.0},
      {"rejected", rejected},
      // Keys may be secrets; only a short digest is logged.
      {"client", text::sha256_hex(client_key).substr(0, 12)},
  };
  if (cfg_.debug && question != nullptr) line["question"] = *question;
  log_(line);
}

std::optional<HttpResult> Service::check_rate(const std::string& client_key) {
  const auto d = limiter_.try_acquire(client_key);
  if (d.allowed) return std::nullopt;
  HttpResult r;
  r.status = 429;
  const long long wait = std::max(1LL, static_cast<long long>(std::ceil(d.retry_after_s)));
  r.headers["Retry-After"] = std::to_string(wait);
  r.body = {{"error", "RateLimited"}, {"message", "too many requests"}, {"retry_after_s", wait}};
  return r;
}

HttpResult Service::handle_ask(const std::string& body, const std::string& client_key) {
  const auto start = std::chrono::steady_clock::now();
  HttpResult result;
  bool rejected = false;
  std::string question;
  if (auto limited = check_rate(client_key)) {
    result = std::move(*limited);
  } else {
    try {
      json j;
      try {
        j = json::parse(body);
      } catch (const json::parse_error&) {
        throw Error(ErrorCode::SchemaError, "request body is not valid JSON");
      }
      AskRequest req = ask_request_from_json(j);
      question = req.question;
      const AskResponse resp = pipeline_->ask(req);
      rejected = resp.answer.rejected;
      result.body = ask_response_to_json(resp);
    } catch (const std::exception& e) {
      result = error_result(e);
    }
  }
  const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start;
  log_request("/ask", result.status, ms.count(), rejected, client_key, &question);
  return result;
}

HttpResult Service::handle_ingest(const std::string& body, const std::string& client_key) {
  const auto start = std::chrono::steady_clock::now();
  HttpResult result;
  if (auto limited = check_rate(client_key)) {
    result = std::move(*limited);
  } else {
    try {
      json j;
      try {
        j = json::parse(body);
      } catch (const json::parse_error&) {
        throw Error(ErrorCode::SchemaError, "request body is not valid JSON");
      }
      const Document doc = document_from_json(j);
      const int added = pipeline_->ingest(doc);
      const auto index = pipeline_->index();
      result.body = {{"chunks_added", added}, {"index_size", index ? index->size() : 0}};
    } catch (const std::exception& e) {
      result = error_result(e);
    }
  }
  const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start;
  log_request("/ingest", result.status, ms.count(), false, client_key, nullptr);
  return result;
}

HttpResult Service::handle_health() const {
  const auto index = pipeline_->index();
  const std::size_t n = index ? index->size() : 0;
  const std::chrono::duration<double> up = std::chrono::steady_clock::now() - started_;
  HttpResult r;
  r.body = {{"status", n > 0 ? "ok" : "degraded"},
            {"index_size", n},
            {"model_id", index && n > 0 ? index->model_id() : pipeline_->config().embedder.model_id},
            {"uptime_s", std::round(up.count() * 1000.0) / 1000.0}};
  return r;
}

int Service::bind() {
  const auto [host, port] = split_host_port(cfg_.bind_address);
  server_ = std::make_unique<httplib::Server>();
  auto& srv = *server_;
  srv.set_payload_max_length(64u << 20);

  auto client_of = [this](const httplib::Request& req) {
    auto key = req.get_header_value(cfg_.client_key_header);
    return key.empty() ? req.remote_addr : key;
  };
  auto reply = [](httplib::Response& res, const HttpResult& r) {
    res.status = r.status;
    for (const auto& [k, v] : r.headers) res.set_header(k, v);
    res.set_content(r.body.dump(), "application/json");
  };
  srv.Post("/ask", [this, client_of, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_ask(req.body, client_of(req)));
  });
  srv.Post("/ingest", [this, client_of, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_ingest(req.body, client_of(req)));
  });
  srv.Get("/health", [this, reply](const httplib::Request&, httplib::Response& res) {
    const auto start = std::chrono::steady_clock::now();
    const auto r = handle_health();
    reply(res, r);
    const std::chrono::duration<double, std::milli> ms = std::chrono::steady_clock::now() - start;
    log_request("/health", r.status, ms.count(), false, "", nullptr);
  });

  const int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) throw Error(ErrorCode::IoError, "cannot bind " + cfg_.bind_address);
  return bound;
}

void Service::serve() {
  if (!server_) bind();
  server_->listen_after_bind();
}

void Service::stop() {
  if (server_) server_->stop();
}

std::shared_ptr<QueryPipeline> make_pipeline(const ServiceConfig& cfg) {
  PipelineConfig pc;
  pc.embedder = cfg.embedder;
  pc.max_question_chars = cfg.max_question_chars;
  pc.session_ttl = cfg.session_ttl;
  if (!cfg.guardrail_config_path.empty()) pc.guardrail = load_guardrail_config(cfg.guardrail_config_path);
  if (!cfg.generation_config_path.empty()) {
    pc.generation = load_generation_config(cfg.generation_config_path);
  }
  std::shared_ptr<const VectorIndex> index;
  if (!cfg.index_path.empty()) {
    index = std::make_shared<const VectorIndex>(VectorIndex::load_file(cfg.index_path));
  }
  return std::make_shared<QueryPipeline>(std::move(pc), std::move(index));
}

}  // namespace tutorrag
