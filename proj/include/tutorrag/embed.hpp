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
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tutorrag/http_client.hpp"

namespace tutorrag {

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;

  std::size_t dim() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

enum class EmbedBackend { Remote, DeterministicLocal };

inline constexpr int kDefaultRemoteDim = 3072;
inline constexpr int kDefaultLocalDim = 1024;
inline constexpr std::string_view kLocalModelPrefix = "local-";
inline constexpr std::string_view kDefaultLocalModel = "local-trigram-v1";

struct EmbedderConfig {
  EmbedBackend backend = EmbedBackend::Remote;
  std::string endpoint_url;
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model_id = "text-embedding-3-large";
  int dim = kDefaultRemoteDim;
  bool normalize = true;
  int max_concurrent_requests = 4;
  int batch_size = 64;
  std::chrono::milliseconds timeout{30000};
  RetryPolicy retry;
};

EmbedderConfig local_embedder_config(int dim, std::string model_id = std::string(kDefaultLocalModel));

// Throws InvalidArgument on dim <= 0, or a Remote config without endpoint or
// key variable.
void validate(const EmbedderConfig& cfg);

double l2_norm(std::span<const double> values);
// Scales to unit length. Throws ZeroVector.
void normalize(EmbeddingVector& v);

// Pure function of (text, model_id, dim): signed counts of hashed character
// trigrams over the lowercased, whitespace-collapsed text.
EmbeddingVector embed_local(std::string_view text, std::string_view model_id, int dim,
                            bool normalize = true);

class Embedder {
 public:
  explicit Embedder(EmbedderConfig cfg);

  Embedder(const Embedder&) = delete;
  Embedder& operator=(const Embedder&) = delete;

  // One vector per text, order preserved. Throws InvalidArgument on empty
  // input or an empty text, AuthError, TransportError, DimensionMismatch.
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) const;
  EmbeddingVector embed_one(const std::string& text) const;

  const EmbedderConfig& config() const { return cfg_; }

  // Runs before every outbound request (shared upstream rate limiter).
  void set_request_hook(std::function<void()> hook) { hook_ = std::move(hook); }

 private:
  std::vector<EmbeddingVector> embed_remote(std::span<const std::string> texts) const;

  EmbedderConfig cfg_;
  std::function<void()> hook_;
  mutable std::counting_semaphore<1024> in_flight_;
};

std::vector<EmbeddingVector> embed_texts(const EmbedderConfig& cfg,
                                         const std::vector<std::string>& texts);

// dot(a, b) / (|a| |b|), clamped to [-1, 1]. Throws DimensionMismatch and
// ZeroVector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);
double cosine_similarity(std::span<const double> a, std::span<const double> b);

}  // namespace tutorrag
