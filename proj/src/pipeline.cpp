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

#include "tutorrag/pipeline.hpp"

#include <unordered_set>

#include "tutorrag/error.hpp"
#include "tutorrag/text_util.hpp"

namespace tutorrag {

using nlohmann::json;

AskRequest ask_request_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "request body must be a JSON object");
  AskRequest r;
  if (!j.contains("question") || !j["question"].is_string()) {
    throw Error(ErrorCode::SchemaError, "'question' must be a string");
  }
  r.question = j["question"].get<std::string>();
  auto optional_string = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) throw Error(ErrorCode::SchemaError, std::string("'") + key + "' must be a string");
    auto v = j[key].get<std::string>();
    if (text::trim(v).empty()) return std::nullopt;
    return v;
  };
  r.session_id = optional_string("session_id");
  r.topic_filter = optional_string("topic_filter");
  return r;
}

json ask_response_to_json(const AskResponse& r) {
  json cites = json::array();
  for (const auto& c : r.answer.citations) {
    cites.push_back({{"number", c.number}, {"source_ref", c.source_ref}, {"score", c.score}});
  }
  json retrieved = json::array();
  for (const auto& x : r.retrieved) retrieved.push_back({{"chunk_id", x.chunk_id}, {"score", x.score}});
  return {{"answer", r.answer.text},
          {"rejected", r.answer.rejected},
          {"citations", cites},
          {"session_id", r.answer.session_id},
          {"retrieved", retrieved}};
}

QueryPipeline::QueryPipeline(PipelineConfig cfg, std::shared_ptr<const VectorIndex> index)
    : cfg_(std::move(cfg)),
      guardrail_(cfg_.guardrail),
      embedder_(cfg_.embedder),
      sessions_(cfg_.max_session_turns, cfg_.session_ttl),
      index_(std::move(index)) {
  validate(cfg_.generation);
  if (cfg_.max_question_chars == 0) throw Error(ErrorCode::ConfigError, "max_question_chars must be > 0");
  if (index_ && !index_->empty() &&
      (index_->model_id() != cfg_.embedder.model_id || index_->dim() != cfg_.embedder.dim)) {
    throw Error(ErrorCode::ConfigError, "index was built with " + index_->model_id() + " (dim " +
                                            std::to_string(index_->dim()) +
                                            ") but the query embedder is " +
                                            cfg_.embedder.model_id + " (dim " +
                                            std::to_string(cfg_.embedder.dim) + ")");
  }
}

std::shared_ptr<const VectorIndex> QueryPipeline::index() const {
  std::lock_guard lock(index_mu_);
  return index_;
}

void QueryPipeline::swap_index(std::shared_ptr<const VectorIndex> index) {
  std::lock_guard lock(index_mu_);
  index_ = std::move(index);
}

void QueryPipeline::set_upstream_hook(std::function<void()> hook) {
  hook_ = hook;
  embedder_.set_request_hook(std::move(hook));
}

AskResponse QueryPipeline::ask(const AskRequest& request) {
  if (text::trim(request.question).empty()) {
    throw Error(ErrorCode::EmptyQuestion, "question is empty");
  }
  if (!text::is_valid_utf8(request.question)) {
    throw Error(ErrorCode::EncodingError, "question is not valid UTF-8");
  }
  if (text::char_count(request.question) > cfg_.max_question_chars) {
    throw Error(ErrorCode::InvalidArgument,
                "question exceeds " + std::to_string(cfg_.max_question_chars) + " characters");
  }

  const RelevanceVerdict verdict = guardrail_.classify(request.question);
  auto lease = sessions_.acquire(request.session_id);
  AskResponse response;
  if (!verdict.relevant) {
    response.answer = rejection_answer(cfg_.guardrail.rejection_message, lease.session().session_id);
    return response;
  }

  const auto index = this->index();
  if (!index || index->empty()) throw Error(ErrorCode::EmptyIndex, "no index is loaded");

  const EmbeddingVector query = embedder_.embed_one(request.question);
  const int k = cfg_.depth.for_topic_count(verdict.topics.size());
  if (request.topic_filter) {
    const std::string needle = text::to_lower_ascii(text::trim(*request.topic_filter));
    response.retrieved = index->search_filtered(query, k, [&](const IndexEntry& e) {
      return text::to_lower_ascii(e.metadata.topic_domain).find(needle) != std::string::npos;
    });
    if (response.retrieved.empty()) {
      throw Error(ErrorCode::EmptyContext, "no course material matches topic_filter");
    }
  } else {
    response.retrieved = index->search(query, k);
  }

  std::vector<ContextChunk> context;
  context.reserve(response.retrieved.size());
  for (const auto& r : response.retrieved) {
    const IndexEntry* e = index->find(r.chunk_id);
    context.push_back({r, e != nullptr ? e->body : std::string()});
  }

  const Prompt prompt = assemble_prompt(cfg_.generation, request.question, context, &lease.session());
  const std::string raw = generate(cfg_.generation, prompt, hook_);
  response.answer = validate_citations(raw, prompt.included);
  response.answer.session_id = lease.session().session_id;
  lease.append({request.question, response.answer});
  return response;
}

int QueryPipeline::ingest(const Document& doc) {
  std::lock_guard ingest_lock(ingest_mu_);
  const auto chunks = chunk_document(doc, cfg_.chunk_policy);
  const auto current = index();

  std::unordered_set<std::string> existing;
  std::vector<IndexEntry> entries;
  if (current) {
    entries = current->entries();
    for (const auto& e : entries) existing.insert(e.chunk_id);
  }
  std::vector<const Chunk*> fresh;
  for (const auto& c : chunks) {
    if (existing.insert(c.chunk_id).second) fresh.push_back(&c);
  }
  if (fresh.empty()) return 0;

  std::vector<std::string> bodies;
  bodies.reserve(fresh.size());
  for (const auto* c : fresh) bodies.push_back(c->body);
  auto vectors = embedder_.embed(bodies);
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    entries.push_back({fresh[i]->chunk_id, std::move(vectors[i]), fresh[i]->metadata, fresh[i]->body});
  }
  const AnnParams params = current && !current->empty() ? current->params() : cfg_.index_params;
  auto next = std::make_shared<const VectorIndex>(VectorIndex::build(std::move(entries), params));
  swap_index(std::move(next));
  return static_cast<int>(fresh.size());
}

}  // namespace tutorrag
