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

// Local OpenAI-compatible stand-in for tests: /v1/embeddings answers with
// deterministic trigram vectors, /v1/chat/completions with a scripted reply.
// Every request is counted.

#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tutorrag/embed.hpp"

namespace tutorrag::testing {

inline constexpr const char* kStubKeyEnv = "TUTORRAG_STUB_KEY";
inline constexpr const char* kStubKey = "sk-stub-secret-1234";

class StubUpstream {
 public:
  using ChatReply = std::function<std::string(const nlohmann::json& request)>;

  StubUpstream() {
    server_.Post("/v1/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      ++embedding_calls;
      record_auth(req);
      if (const int s = embedding_status.load(); s != 200) {
        res.status = s;
        res.set_content(R"({"error":"injected"})", "application/json");
        return;
      }
      const auto body = nlohmann::json::parse(req.body);
      const std::string model = body.at("model").get<std::string>();
      const int forced = embedding_dim_override.load();
      const int dim = forced > 0 ? forced : body.at("dimensions").get<int>();
      nlohmann::json data = nlohmann::json::array();
      int i = 0;
      for (const auto& text : body.at("input")) {
        const auto v = embed_local(text.get<std::string>(), model, dim);
        data.push_back({{"object", "embedding"}, {"index", i++}, {"embedding", v.values}});
      }
      res.set_content(nlohmann::json{{"object", "list"}, {"data", data}}.dump(), "application/json");
    });
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++chat_calls;
      record_auth(req);
      const auto body = nlohmann::json::parse(req.body);
      {
        std::lock_guard lock(mu_);
        chat_bodies_.push_back(body);
      }
      if (const int s = chat_status.load(); s != 200) {
        res.status = s;
        res.set_content(R"({"error":"injected"})", "application/json");
        return;
      }
      ChatReply reply;
      {
        std::lock_guard lock(mu_);
        reply = reply_;
      }
      const std::string text = reply ? reply(body) : "Start from equilibrium [1].";
      nlohmann::json out = {
          {"object", "chat.completion"},
          {"choices", nlohmann::json::array({{{"index", 0},
                                              {"finish_reason", "stop"},
                                              {"message", {{"role", "assistant"}, {"content", text}}}}})}};
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubUpstream() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  StubUpstream(const StubUpstream&) = delete;
  StubUpstream& operator=(const StubUpstream&) = delete;

  std::string base() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::string embeddings_url() const { return base() + "/v1/embeddings"; }
  std::string chat_url() const { return base() + "/v1/chat/completions"; }

  void set_chat_reply(ChatReply reply) {
    std::lock_guard lock(mu_);
    reply_ = std::move(reply);
  }

  std::vector<nlohmann::json> chat_bodies() const {
    std::lock_guard lock(mu_);
    return chat_bodies_;
  }

  std::string last_authorization() const {
    std::lock_guard lock(mu_);
    return last_auth_;
  }

  int upstream_calls() const { return embedding_calls.load() + chat_calls.load(); }

  std::atomic<int> embedding_calls{0};
  std::atomic<int> chat_calls{0};
  std::atomic<int> embedding_status{200};
  std::atomic<int> chat_status{200};
  // Non-zero: answer every embedding request with vectors of this length.
  std::atomic<int> embedding_dim_override{0};

 private:
  void record_auth(const httplib::Request& req) {
    std::lock_guard lock(mu_);
    last_auth_ = req.get_header_value("Authorization");
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mu_;
  ChatReply reply_;
  std::vector<nlohmann::json> chat_bodies_;
  std::string last_auth_;
};

// Remote embedder aimed at the stub, with fast retries.
inline EmbedderConfig stub_embedder_config(const StubUpstream& stub, int dim = 256,
                                           std::string model = "stub-embed") {
  EmbedderConfig cfg;
  cfg.backend = EmbedBackend::Remote;
  cfg.endpoint_url = stub.embeddings_url();
  cfg.api_key_env = kStubKeyEnv;
  cfg.model_id = std::move(model);
  cfg.dim = dim;
  cfg.retry.attempts = 2;
  cfg.retry.base_delay = std::chrono::milliseconds(1);
  cfg.retry.max_delay = std::chrono::milliseconds(2);
  cfg.timeout = std::chrono::milliseconds(5000);
  return cfg;
}

}  // namespace tutorrag::testing
