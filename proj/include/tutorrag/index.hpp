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

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tutorrag/chunker.hpp"
#include "tutorrag/embed.hpp"

namespace tutorrag {

enum class SearchMode : std::uint32_t { Exact = 0, Approximate = 1 };

std::string_view search_mode_name(SearchMode mode);
SearchMode parse_search_mode(std::string_view name);

struct AnnParams {
  SearchMode mode = SearchMode::Exact;
  // Graph degree on the upper layers; the base layer allows twice this.
  int neighbors_per_node = 16;
  // Candidate list size while searching (ef).
  int search_breadth = 128;
  // Candidate list size while inserting.
  int construction_breadth = 200;
  std::uint64_t seed = 42;

  bool operator==(const AnnParams&) const = default;
};

struct IndexEntry {
  std::string chunk_id;
  EmbeddingVector vector;
  ChunkMetadata metadata;
  std::string body;

  bool operator==(const IndexEntry&) const = default;
};

struct RetrievalResult {
  std::string chunk_id;
  double score = 0.0;
  int rank = 0;
  std::string source_ref;

  bool operator==(const RetrievalResult&) const = default;
};

inline constexpr std::uint32_t kIndexFormatVersion = 1;
inline constexpr char kIndexMagic[8] = {'T', 'R', 'A', 'G', 'I', 'D', 'X', '\0'};

class HnswGraph;

// Immutable after build; any number of threads may search concurrently.
class VectorIndex {
 public:
  VectorIndex();
  ~VectorIndex();
  VectorIndex(const VectorIndex&);
  VectorIndex& operator=(const VectorIndex&);
  VectorIndex(VectorIndex&&) noexcept;
  VectorIndex& operator=(VectorIndex&&) noexcept;

  // Throws EmptyIndex, DuplicateChunkId, DimensionMismatch, ZeroVector and
  // InvalidArgument (mixed model ids, bad params).
  static VectorIndex build(std::vector<IndexEntry> entries, const AnnParams& params = {});

  // Results ordered by (score desc, chunk_id asc), ranks 1..n. Throws
  // DimensionMismatch and EmptyIndex.
  std::vector<RetrievalResult> search(const EmbeddingVector& query, int k) const;
  // Exact scan regardless of mode.
  std::vector<RetrievalResult> search_exact(const EmbeddingVector& query, int k) const;
  // Exact scan over the entries accepted by the filter.
  std::vector<RetrievalResult> search_filtered(
      const EmbeddingVector& query, int k,
      const std::function<bool(const IndexEntry&)>& accept) const;

  const std::vector<IndexEntry>& entries() const { return entries_; }
  const IndexEntry* find(std::string_view chunk_id) const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  int dim() const { return dim_; }
  const std::string& model_id() const { return model_id_; }
  const AnnParams& params() const { return params_; }

  // Portable little-endian byte layout with a trailing SHA-256; see README.
  std::string save() const;
  // Throws TruncatedFile, ChecksumError, FormatError, VersionMismatch.
  static VectorIndex load(std::string_view bytes);

  void save_file(const std::filesystem::path& path) const;
  static VectorIndex load_file(const std::filesystem::path& path);

 private:
  void check_query(const EmbeddingVector& query) const;
  double score(std::span<const double> query, double query_norm, std::size_t entry) const;

  std::vector<IndexEntry> entries_;
  std::vector<double> norms_;
  int dim_ = 0;
  std::string model_id_;
  AnnParams params_;
  std::shared_ptr<const HnswGraph> graph_;
};

// Orders (score desc, chunk_id asc) and assigns ranks.
void rank_results(std::vector<RetrievalResult>& results);

// Retrieval depth adapted to question breadth.
struct RetrievalDepth {
  int k_base = 5;
  int k_extra = 3;

  int for_topic_count(std::size_t distinct_topics) const {
    return k_base + (distinct_topics >= 2 ? k_extra : 0);
  }
};

}  // namespace tutorrag
