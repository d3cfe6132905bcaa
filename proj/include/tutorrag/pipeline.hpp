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
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorrag/answer.hpp"
#include "tutorrag/chunker.hpp"
#include "tutorrag/embed.hpp"
#include "tutorrag/guardrail.hpp"
#include "tutorrag/index.hpp"
#include "tutorrag/ingest.hpp"

namespace tutorrag {

struct PipelineConfig {
  GuardrailConfig guardrail = default_guardrail_config();
  // Must produce vectors in the same space as the index.
  EmbedderConfig embedder;
  GenerationConfig generation;
  ChunkPolicy chunk_policy;
  RetrievalDepth depth;
  // Used when /ingest builds the first index.
  AnnParams index_params;
  std::size_t max_question_chars = 2000;
  std::size_t max_session_turns = 50;
  std::chrono::seconds session_ttl{7200};
};

struct AskRequest {
  std::string question;
  std::optional<std::string> session_id;
  // Case-insensitive substring match against chunk topic_domain.
  std::optional<std::string> topic_filter;
};

AskRequest ask_request_from_json(const nlohmann::json& j);

struct AskResponse {
  Answer answer;
  std::vector<RetrievalResult> retrieved;
};

nlohmann::json ask_response_to_json(const AskResponse& response);

// guardrail -> embed -> search -> prompt -> generate -> citations, without
// any HTTP front end. Safe for concurrent use.
class QueryPipeline {
 public:
  explicit QueryPipeline(PipelineConfig cfg, std::shared_ptr<const VectorIndex> index = nullptr);

  QueryPipeline(const QueryPipeline&) = delete;
  QueryPipeline& operator=(const QueryPipeline&) = delete;

  // Throws EmptyQuestion, InvalidArgument (question too long), EmptyIndex,
  // EmptyContext (topic filter matched nothing) and upstream errors
  // (AuthError, TransportError, ModelRefusal, DimensionMismatch).
  AskResponse ask(const AskRequest& request);

  // Chunks, embeds and swaps in a new index holding the old entries plus the
  // new chunks. Returns the number of chunks added. On any failure the
  // current index is left as it was.
  int ingest(const Document& doc);

  std::shared_ptr<const VectorIndex> index() const;
  void swap_index(std::shared_ptr<const VectorIndex> index);

  // Runs before every outbound embedding or generation request.
  void set_upstream_hook(std::function<void()> hook);

  const PipelineConfig& config() const { return cfg_; }
  const Guardrail& guardrail() const { return guardrail_; }
  SessionStore& sessions() { return sessions_; }

 private:
  PipelineConfig cfg_;
  Guardrail guardrail_;
  Embedder embedder_;
  SessionStore sessions_;
  std::function<void()> hook_;

  mutable std::mutex index_mu_;
  std::shared_ptr<const VectorIndex> index_;
  std::mutex ingest_mu_;
};

}  // namespace tutorrag
