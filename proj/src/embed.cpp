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

#include "tutorrag/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <nlohmann/json.hpp>

#include "tutorrag/error.hpp"
#include "tutorrag/text_util.hpp"

namespace tutorrag {

using nlohmann::json;

EmbedderConfig local_embedder_config(int dim, std::string model_id) {
  EmbedderConfig cfg;
  cfg.backend = EmbedBackend::DeterministicLocal;
  cfg.endpoint_url.clear();
  cfg.api_key_env.clear();
  cfg.model_id = std::move(model_id);
  cfg.dim = dim;
  cfg.normalize = true;
  return cfg;
}

void validate(const EmbedderConfig& cfg) {
  if (cfg.dim <= 0) throw Error(ErrorCode::InvalidArgument, "embedding dim must be positive");
  if (cfg.model_id.empty()) throw Error(ErrorCode::InvalidArgument, "model_id is empty");
  if (cfg.backend == EmbedBackend::Remote) {
    if (cfg.endpoint_url.empty()) {
      throw Error(ErrorCode::InvalidArgument, "remote embedder needs endpoint_url");
    }
    if (cfg.api_key_env.empty()) {
      throw Error(ErrorCode::InvalidArgument, "remote embedder needs api_key_env");
    }
  }
}

double l2_norm(std::span<const double> values) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

void normalize(EmbeddingVector& v) {
  const double n = l2_norm(v.values);
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(ErrorCode::ZeroVector, "cannot normalize");
  for (double& x : v.values) x /= n;
}

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = kFnvOffset) {
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

// Final avalanche so neighbouring trigrams spread across buckets.
std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  x *= 0xc4ceb9fe1a85ec53ULL;
  x ^= x >> 33;
  return x;
}

}  // namespace

EmbeddingVector embed_local(std::string_view text, std::string_view model_id, int dim,
                            bool normalize_output) {
  if (dim <= 0) throw Error(ErrorCode::InvalidArgument, "embedding dim must be positive");
  const std::string normalized = text::normalize_for_compare(text);
  if (normalized.empty()) throw Error(ErrorCode::InvalidArgument, "cannot embed empty text");

  const std::string padded = " " + normalized + " ";
  const std::uint64_t seed = fnv1a(model_id);
  EmbeddingVector v;
  v.model_id = std::string(model_id);
  v.values.assign(static_cast<std::size_t>(dim), 0.0);
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    const std::uint64_t h = mix(fnv1a(std::string_view(padded).substr(i, 3), seed));
    const auto bucket = static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim));
    v.values[bucket] += (h >> 63) ? -1.0 : 1.0;
  }
  if (normalize_output) {
    // Cancellation can leave an all-zero vector for tiny inputs; fall back to
    // unsigned counts in that case.
    if (l2_norm(v.values) == 0.0) {
      for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
        const std::uint64_t h = mix(fnv1a(std::string_view(padded).substr(i, 3), seed));
        v.values[static_cast<std::size_t>(h % static_cast<std::uint64_t>(dim))] += 1.0;
      }
    }
    normalize(v);
  }
  return v;
}

Embedder::Embedder(EmbedderConfig cfg)
    : cfg_(std::move(cfg)), in_flight_(std::clamp(cfg_.max_concurrent_requests, 1, 1024)) {
  validate(cfg_);
}

std::vector<EmbeddingVector> Embedder::embed(std::span<const std::string> texts) const {
  if (texts.empty()) throw Error(ErrorCode::InvalidArgument, "no texts to embed");
  for (const auto& t : texts) {
    if (text::trim(t).empty()) throw Error(ErrorCode::InvalidArgument, "cannot embed empty text");
  }
  if (cfg_.backend == EmbedBackend::DeterministicLocal) {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_local(t, cfg_.model_id, cfg_.dim, cfg_.normalize));
    return out;
  }
  return embed_remote(texts);
}

EmbeddingVector Embedder::embed_one(const std::string& text) const {
  return embed(std::span<const std::string>(&text, 1)).front();
}

std::vector<EmbeddingVector> Embedder::embed_remote(std::span<const std::string> texts) const {
  const std::string key = read_api_key(cfg_.api_key_env);
  PostOptions options;
  options.timeout = cfg_.timeout;
  options.retry = cfg_.retry;
  options.before_attempt = hook_;

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  const std::size_t batch = static_cast<std::size_t>(std::max(1, cfg_.batch_size));
  for (std::size_t start = 0; start < texts.size(); start += batch) {
    const auto slice = texts.subspan(start, std::min(batch, texts.size() - start));
    json request = {{"model", cfg_.model_id},
                    {"input", std::vector<std::string>(slice.begin(), slice.end())},
                    {"dimensions", cfg_.dim}};

    std::string body;
    {
      in_flight_.acquire();
      struct Release {
        std::counting_semaphore<1024>& s;
        ~Release() { s.release(); }
      } release{in_flight_};
      body = post_json(cfg_.endpoint_url, request.dump(), key, options);
    }

    json response;
    try {
      response = json::parse(body);
    } catch (const json::parse_error&) {
      throw Error(ErrorCode::TransportError, "embedding endpoint returned malformed JSON");
    }
    if (!response.contains("data") || !response["data"].is_array() ||
        response["data"].size() != slice.size()) {
      throw Error(ErrorCode::TransportError, "embedding response has wrong number of vectors");
    }
    std::vector<json> items(response["data"].begin(), response["data"].end());
    if (std::all_of(items.begin(), items.end(), [](const json& it) { return it.contains("index"); })) {
      std::stable_sort(items.begin(), items.end(), [](const json& a, const json& b) {
        return a["index"].get<long long>() < b["index"].get<long long>();
      });
    }
    for (const auto& item : items) {
      if (!item.contains("embedding") || !item["embedding"].is_array()) {
        throw Error(ErrorCode::TransportError, "embedding response item has no vector");
      }
      EmbeddingVector v;
      v.model_id = cfg_.model_id;
      v.values.reserve(item["embedding"].size());
      for (const auto& x : item["embedding"]) {
        if (!x.is_number()) throw Error(ErrorCode::TransportError, "non-numeric embedding value");
        const double d = x.get<double>();
        if (!std::isfinite(d)) throw Error(ErrorCode::TransportError, "non-finite embedding value");
        v.values.push_back(d);
      }
      if (static_cast<int>(v.dim()) != cfg_.dim) {
        throw Error(ErrorCode::DimensionMismatch, "expected dim " + std::to_string(cfg_.dim) +
                                                      ", endpoint returned " +
                                                      std::to_string(v.dim()));
      }
      if (cfg_.normalize) normalize(v);
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<EmbeddingVector> embed_texts(const EmbedderConfig& cfg,
                                         const std::vector<std::string>& texts) {
  Embedder embedder(cfg);
  return embedder.embed(texts);
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  double dot = 0.0;
  double aa = 0.0;
  double bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa == 0.0 || bb == 0.0) throw Error(ErrorCode::ZeroVector, "cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine_similarity(std::span<const double>(a.values), std::span<const double>(b.values));
}

}  // namespace tutorrag
