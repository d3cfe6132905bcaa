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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "tutorrag/index.hpp"

namespace tutorrag::testing {

inline EmbeddingVector random_unit_vector(std::mt19937_64& rng, int dim, const std::string& model = "rand") {
  std::normal_distribution<double> g;
  EmbeddingVector v;
  v.model_id = model;
  v.values.resize(static_cast<std::size_t>(dim));
  double n = 0.0;
  do {
    n = 0.0;
    for (auto& x : v.values) {
      x = g(rng);
      n += x * x;
    }
  } while (n == 0.0);
  n = std::sqrt(n);
  for (auto& x : v.values) x /= n;
  return v;
}

inline std::string entry_id(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "e%06zu", i);
  return buf;
}

inline std::vector<IndexEntry> random_entries(std::uint64_t seed, std::size_t n, int dim) {
  std::mt19937_64 rng(seed);
  std::vector<IndexEntry> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    IndexEntry e;
    e.chunk_id = entry_id(i);
    e.vector = random_unit_vector(rng, dim);
    e.metadata.topic_domain = "topic " + std::to_string(i % 7);
    e.metadata.source_ref = "doc" + std::to_string(i % 13) + ":p" + std::to_string(1 + i % 5);
    e.body = "body " + std::to_string(i);
    out.push_back(std::move(e));
  }
  return out;
}

// Brute-force cosine scan, written independently of VectorIndex: plain
// sequential sums, then sort by (score desc, id asc).
inline std::vector<std::pair<std::string, double>> brute_force_top_k(const std::vector<IndexEntry>& entries,
                                                                     const EmbeddingVector& q, std::size_t k) {
  double qq = 0.0;
  for (double x : q.values) qq += x * x;
  const double qn = std::sqrt(qq);
  std::vector<std::pair<std::string, double>> all;
  all.reserve(entries.size());
  for (const auto& e : entries) {
    double dot = 0.0;
    double ee = 0.0;
    for (std::size_t i = 0; i < q.values.size(); ++i) dot += q.values[i] * e.vector.values[i];
    for (double x : e.vector.values) ee += x * x;
    all.emplace_back(e.chunk_id, dot / (qn * std::sqrt(ee)));
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

inline bool bit_identical(const std::vector<RetrievalResult>& got,
                          const std::vector<std::pair<std::string, double>>& want) {
  if (got.size() != want.size()) return false;
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (got[i].chunk_id != want[i].first) return false;
    if (std::memcmp(&got[i].score, &want[i].second, sizeof(double)) != 0) return false;
    if (got[i].rank != static_cast<int>(i) + 1) return false;
  }
  return true;
}

}  // namespace tutorrag::testing
