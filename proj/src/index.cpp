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

#include "tutorrag/index.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <queue>
#include <random>
#include <unordered_set>
#include <utility>

#include "tutorrag/error.hpp"
#include "tutorrag/text_util.hpp"

namespace tutorrag {

std::string_view search_mode_name(SearchMode mode) {
  return mode == SearchMode::Approximate ? "approximate" : "exact";
}

SearchMode parse_search_mode(std::string_view name) {
  const auto lower = text::to_lower_ascii(name);
  if (lower == "exact") return SearchMode::Exact;
  if (lower == "approximate" || lower == "ann") return SearchMode::Approximate;
  throw Error(ErrorCode::InvalidArgument, "unknown search mode '" + std::string(name) + "'");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool result_before(const RetrievalResult& a, const RetrievalResult& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.chunk_id < b.chunk_id;
}

}  // namespace

void rank_results(std::vector<RetrievalResult>& results) {
  std::sort(results.begin(), results.end(), result_before);
  for (std::size_t i = 0; i < results.size(); ++i) results[i].rank = static_cast<int>(i) + 1;
}

// Hierarchical navigable small-world graph over the index entries. Holds only
// adjacency; vectors stay in the owning VectorIndex. Construction consumes a
// seeded generator and breaks every distance tie by node id, so the same
// entries and params always give the same graph.
class HnswGraph {
 public:
  using Candidate = std::pair<double, std::uint32_t>;  // (distance, node)

  // The spans point into the owning index's vectors, whose storage survives
  // moves of the index; copies of the index build a fresh graph.
  HnswGraph(std::span<const IndexEntry> entries, std::span<const double> norms,
            const AnnParams& params)
      : entries_(entries),
        norms_(norms),
        max_degree_(static_cast<std::size_t>(params.neighbors_per_node)),
        construction_breadth_(static_cast<std::size_t>(params.construction_breadth)) {
    const std::size_t n = entries.size();
    links_.resize(n);
    levels_.resize(n);
    visited_.assign(n, 0);

    std::mt19937_64 rng(params.seed);
    const double level_mult = 1.0 / std::log(static_cast<double>(std::max<std::size_t>(2, max_degree_)));
    for (std::size_t i = 0; i < n; ++i) {
      // 53 random mantissa bits; std distributions are not portable.
      const double u = 1.0 - static_cast<double>(rng() >> 11) * 0x1.0p-53;
      levels_[i] = std::min(16, static_cast<int>(std::floor(-std::log(u) * level_mult)));
      links_[i].resize(static_cast<std::size_t>(levels_[i]) + 1);
    }
    for (std::size_t i = 0; i < n; ++i) insert(static_cast<std::uint32_t>(i));
    visited_.clear();
    visited_.shrink_to_fit();
  }

  // Node ids of the (approximately) nearest `k` entries to a unit query.
  std::vector<std::uint32_t> search(std::span<const double> unit_query, std::size_t ef,
                                    std::size_t k) const {
    auto dist = [&](std::uint32_t node) { return 1.0 - dot(unit_query, vec(node)) / norms_[node]; };
    std::vector<char> visited(entries_.size(), 0);
    Candidate ep{dist(entry_point_), entry_point_};
    for (int level = max_level_; level > 0; --level) ep = greedy(dist, ep, level);
    auto found = search_layer(dist, {ep}, std::max(ef, k), 0, visited);
    std::vector<std::uint32_t> ids;
    for (std::size_t i = 0; i < found.size() && i < k; ++i) ids.push_back(found[i].second);
    return ids;
  }

 private:
  std::span<const double> vec(std::uint32_t node) const { return entries_[node].vector.values; }

  double node_distance(std::uint32_t a, std::uint32_t b) const {
    return 1.0 - dot(vec(a), vec(b)) / (norms_[a] * norms_[b]);
  }

  std::size_t degree_limit(int level) const { return level == 0 ? 2 * max_degree_ : max_degree_; }

  template <typename Dist>
  Candidate greedy(const Dist& dist, Candidate current, int level) const {
    bool moved = true;
    while (moved) {
      moved = false;
      for (auto nb : links_[current.second][static_cast<std::size_t>(level)]) {
        const Candidate c{dist(nb), nb};
        if (c < current) {
          current = c;
          moved = true;
        }
      }
    }
    return current;
  }

  template <typename Dist, typename Visited>
  std::vector<Candidate> search_layer(const Dist& dist, const std::vector<Candidate>& entry_points,
                                      std::size_t ef, int level, Visited& visited) const {
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> frontier;
    std::priority_queue<Candidate> best;
    std::vector<std::uint32_t> touched;
    for (const auto& ep : entry_points) {
      if (visited[ep.second]) continue;
      visited[ep.second] = 1;
      touched.push_back(ep.second);
      frontier.push(ep);
      best.push(ep);
    }
    while (best.size() > ef) best.pop();

    while (!frontier.empty()) {
      const Candidate current = frontier.top();
      if (best.size() >= ef && current > best.top()) break;
      frontier.pop();
      for (auto nb : links_[current.second][static_cast<std::size_t>(level)]) {
        if (visited[nb]) continue;
        visited[nb] = 1;
        touched.push_back(nb);
        const Candidate c{dist(nb), nb};
        if (best.size() < ef || c < best.top()) {
          frontier.push(c);
          best.push(c);
          if (best.size() > ef) best.pop();
        }
      }
    }
    for (auto t : touched) visited[t] = 0;

    std::vector<Candidate> out;
    out.reserve(best.size());
    while (!best.empty()) {
      out.push_back(best.top());
      best.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

  // Keeps a candidate only if it is closer to the base than to every
  // neighbour already kept; candidates must be sorted nearest first.
  std::vector<Candidate> select_neighbors(const std::vector<Candidate>& sorted,
                                          std::size_t limit) const {
    std::vector<Candidate> kept;
    for (const auto& c : sorted) {
      if (kept.size() >= limit) break;
      bool diverse = true;
      for (const auto& k : kept) {
        if (node_distance(c.second, k.second) < c.first) {
          diverse = false;
          break;
        }
      }
      if (diverse) kept.push_back(c);
    }
    return kept;
  }

  void insert(std::uint32_t node) {
    const int level = levels_[node];
    if (!has_entry_) {
      entry_point_ = node;
      max_level_ = level;
      has_entry_ = true;
      return;
    }
    auto dist = [&](std::uint32_t other) { return node_distance(node, other); };
    Candidate ep{dist(entry_point_), entry_point_};
    for (int l = max_level_; l > level; --l) ep = greedy(dist, ep, l);

    std::vector<Candidate> entry_points{ep};
    for (int l = std::min(level, max_level_); l >= 0; --l) {
      auto found = search_layer(dist, entry_points, construction_breadth_, l, visited_);
      const auto chosen = select_neighbors(found, max_degree_);
      auto& own = links_[node][static_cast<std::size_t>(l)];
      for (const auto& c : chosen) own.push_back(c.second);

      for (const auto& c : chosen) {
        auto& theirs = links_[c.second][static_cast<std::size_t>(l)];
        theirs.push_back(node);
        if (theirs.size() > degree_limit(l)) {
          std::vector<Candidate> pool;
          pool.reserve(theirs.size());
          for (auto t : theirs) pool.emplace_back(node_distance(c.second, t), t);
          std::sort(pool.begin(), pool.end());
          const auto pruned = select_neighbors(pool, degree_limit(l));
          theirs.clear();
          for (const auto& p : pruned) theirs.push_back(p.second);
        }
      }
      entry_points = std::move(found);
    }
    if (level > max_level_) {
      max_level_ = level;
      entry_point_ = node;
    }
  }

  std::span<const IndexEntry> entries_;
  std::span<const double> norms_;
  std::size_t max_degree_;
  std::size_t construction_breadth_;
  std::vector<std::vector<std::vector<std::uint32_t>>> links_;  // [node][level]
  std::vector<int> levels_;
  std::vector<char> visited_;
  std::uint32_t entry_point_ = 0;
  int max_level_ = 0;
  bool has_entry_ = false;
};

VectorIndex::VectorIndex() = default;
VectorIndex::~VectorIndex() = default;
VectorIndex::VectorIndex(VectorIndex&&) noexcept = default;
VectorIndex& VectorIndex::operator=(VectorIndex&&) noexcept = default;

VectorIndex::VectorIndex(const VectorIndex& other)
    : entries_(other.entries_),
      norms_(other.norms_),
      dim_(other.dim_),
      model_id_(other.model_id_),
      params_(other.params_) {
  if (other.graph_) graph_ = std::make_shared<const HnswGraph>(entries_, norms_, params_);
}

VectorIndex& VectorIndex::operator=(const VectorIndex& other) {
  if (this != &other) {
    VectorIndex copy(other);
    *this = std::move(copy);
  }
  return *this;
}

VectorIndex VectorIndex::build(std::vector<IndexEntry> entries, const AnnParams& params) {
  if (entries.empty()) throw Error(ErrorCode::EmptyIndex, "cannot build an index with no entries");
  if (params.neighbors_per_node < 2 || params.search_breadth < 1 ||
      params.construction_breadth < 1) {
    throw Error(ErrorCode::InvalidArgument, "ANN params must be positive (neighbors_per_node >= 2)");
  }
  VectorIndex index;
  index.dim_ = static_cast<int>(entries.front().vector.dim());
  index.model_id_ = entries.front().vector.model_id;
  index.params_ = params;
  if (index.dim_ <= 0) throw Error(ErrorCode::DimensionMismatch, "entry vectors are empty");

  std::unordered_set<std::string> ids;
  index.norms_.reserve(entries.size());
  for (const auto& e : entries) {
    if (!ids.insert(e.chunk_id).second) {
      throw Error(ErrorCode::DuplicateChunkId, "duplicate chunk_id '" + e.chunk_id + "'");
    }
    if (static_cast<int>(e.vector.dim()) != index.dim_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "entry '" + e.chunk_id + "' has dim " + std::to_string(e.vector.dim()) +
                      ", index dim is " + std::to_string(index.dim_));
    }
    if (e.vector.model_id != index.model_id_) {
      throw Error(ErrorCode::InvalidArgument, "entry '" + e.chunk_id + "' was embedded by '" +
                                                  e.vector.model_id + "', index model is '" +
                                                  index.model_id_ + "'");
    }
    const double n = l2_norm(e.vector.values);
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw Error(ErrorCode::ZeroVector, "entry '" + e.chunk_id + "' has a zero or non-finite vector");
    }
    index.norms_.push_back(n);
  }
  index.entries_ = std::move(entries);
  if (params.mode == SearchMode::Approximate) {
    index.graph_ = std::make_shared<const HnswGraph>(index.entries_, index.norms_, index.params_);
  }
  return index;
}

const IndexEntry* VectorIndex::find(std::string_view chunk_id) const {
  for (const auto& e : entries_) {
    if (e.chunk_id == chunk_id) return &e;
  }
  return nullptr;
}

void VectorIndex::check_query(const EmbeddingVector& query) const {
  if (entries_.empty()) throw Error(ErrorCode::EmptyIndex, "index is empty");
  if (static_cast<int>(query.dim()) != dim_) {
    throw Error(ErrorCode::DimensionMismatch, "query dim " + std::to_string(query.dim()) +
                                                  " vs index dim " + std::to_string(dim_));
  }
}

double VectorIndex::score(std::span<const double> query, double query_norm, std::size_t entry) const {
  return dot(query, entries_[entry].vector.values) / (query_norm * norms_[entry]);
}

std::vector<RetrievalResult> VectorIndex::search_filtered(
    const EmbeddingVector& query, int k,
    const std::function<bool(const IndexEntry&)>& accept) const {
  check_query(query);
  if (k <= 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  const double qn = l2_norm(query.values);
  if (!(qn > 0.0)) throw Error(ErrorCode::ZeroVector, "query vector is zero");

  std::vector<RetrievalResult> all;
  all.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (accept && !accept(entries_[i])) continue;
    all.push_back({entries_[i].chunk_id, score(query.values, qn, i), 0,
                   entries_[i].metadata.source_ref});
  }
  const auto take = std::min(all.size(), static_cast<std::size_t>(k));
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    result_before);
  all.resize(take);
  for (std::size_t i = 0; i < all.size(); ++i) all[i].rank = static_cast<int>(i) + 1;
  return all;
}

std::vector<RetrievalResult> VectorIndex::search_exact(const EmbeddingVector& query, int k) const {
  return search_filtered(query, k, nullptr);
}

std::vector<RetrievalResult> VectorIndex::search(const EmbeddingVector& query, int k) const {
  if (params_.mode == SearchMode::Exact || !graph_) return search_exact(query, k);
  check_query(query);
  if (k <= 0) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  const double qn = l2_norm(query.values);
  if (!(qn > 0.0)) throw Error(ErrorCode::ZeroVector, "query vector is zero");

  std::vector<double> unit(query.values);
  for (double& x : unit) x /= qn;
  const auto take = std::min(entries_.size(), static_cast<std::size_t>(k));
  const auto ids = graph_->search(unit, static_cast<std::size_t>(params_.search_breadth), take);

  std::vector<RetrievalResult> out;
  out.reserve(ids.size());
  for (auto id : ids) {
    out.push_back({entries_[id].chunk_id, score(query.values, qn, id), 0,
                   entries_[id].metadata.source_ref});
  }
  rank_results(out);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr std::size_t kChecksumSize = 32;
constexpr std::size_t kFixedHeaderSize = 56;

// Guards the length field so a flipped length byte reads as corruption, not
// truncation.
std::uint32_t length_check(std::uint64_t length) {
  return ~(static_cast<std::uint32_t>(length) ^ static_cast<std::uint32_t>(length >> 32));
}

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void patch_u32(std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_[at + i] = static_cast<char>(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void patch_u64(std::size_t at, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_[at + i] = static_cast<char>(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(data_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw Error(ErrorCode::TruncatedFile, "index data ends early");
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

std::array<std::uint8_t, kChecksumSize> digest_of(std::string_view bytes) {
  std::array<std::uint8_t, kChecksumSize> d{};
  text::sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()),
                                             bytes.size()),
               std::span<std::uint8_t, 32>(d));
  return d;
}

}  // namespace

std::string VectorIndex::save() const {
  ByteWriter w;
  w.raw(kIndexMagic, sizeof(kIndexMagic));
  w.u32(kIndexFormatVersion);
  w.u32(0);  // length check, patched below
  w.u64(0);  // total length, patched below
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u32(static_cast<std::uint32_t>(params_.mode));
  w.u32(static_cast<std::uint32_t>(params_.neighbors_per_node));
  w.u32(static_cast<std::uint32_t>(params_.search_breadth));
  w.u32(static_cast<std::uint32_t>(params_.construction_breadth));
  w.u32(0);  // reserved
  w.u64(params_.seed);
  w.str(model_id_);
  w.u64(entries_.size());
  for (const auto& e : entries_) {
    w.str(e.chunk_id);
    w.str(e.body);
    w.str(e.metadata.topic_domain);
    w.str(e.metadata.source_ref);
    w.u8(static_cast<std::uint8_t>(e.metadata.difficulty_tier));
    w.u8(e.metadata.oversized ? 1 : 0);
    w.u32(static_cast<std::uint32_t>(e.metadata.prerequisites.size()));
    for (const auto& p : e.metadata.prerequisites) w.str(p);
    for (double x : e.vector.values) w.f64(x);
  }
  const std::uint64_t total = w.bytes().size() + kChecksumSize;
  w.patch_u32(12, length_check(total));
  w.patch_u64(16, total);
  const auto d = digest_of(w.bytes());
  w.raw(d.data(), d.size());
  return std::move(w.bytes());
}

VectorIndex VectorIndex::load(std::string_view bytes) {
  if (bytes.size() < kFixedHeaderSize + kChecksumSize) {
    throw Error(ErrorCode::TruncatedFile, "index data is only " + std::to_string(bytes.size()) + " bytes");
  }
  std::uint64_t declared = 0;
  for (int i = 0; i < 8; ++i) {
    declared |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(bytes[16 + i])) << (8 * i);
  }
  std::uint32_t check = 0;
  for (int i = 0; i < 4; ++i) {
    check |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[12 + i])) << (8 * i);
  }
  if (check != length_check(declared)) {
    throw Error(ErrorCode::ChecksumError, "index length field is corrupt");
  }
  if (declared > bytes.size()) {
    throw Error(ErrorCode::TruncatedFile, "index declares " + std::to_string(declared) +
                                              " bytes but only " + std::to_string(bytes.size()) +
                                              " are present");
  }
  const auto body = bytes.substr(0, bytes.size() - kChecksumSize);
  const auto expected = digest_of(body);
  if (declared != bytes.size() ||
      std::memcmp(expected.data(), bytes.data() + body.size(), kChecksumSize) != 0) {
    throw Error(ErrorCode::ChecksumError, "index checksum does not match its contents");
  }
  if (std::memcmp(bytes.data(), kIndexMagic, sizeof(kIndexMagic)) != 0) {
    throw Error(ErrorCode::FormatError, "not an index file (bad magic)");
  }

  ByteReader r(body);
  for (std::size_t i = 0; i < sizeof(kIndexMagic); ++i) r.u8();
  const auto version = r.u32();
  if (version != kIndexFormatVersion) {
    throw Error(ErrorCode::VersionMismatch, "index format version " + std::to_string(version) +
                                                ", this build reads version " +
                                                std::to_string(kIndexFormatVersion));
  }
  r.u32();  // length check
  r.u64();  // length, checked above
  const auto dim = r.u32();
  AnnParams params;
  const auto mode = r.u32();
  if (mode > 1) throw Error(ErrorCode::FormatError, "unknown search mode " + std::to_string(mode));
  params.mode = static_cast<SearchMode>(mode);
  params.neighbors_per_node = static_cast<int>(r.u32());
  params.search_breadth = static_cast<int>(r.u32());
  params.construction_breadth = static_cast<int>(r.u32());
  r.u32();
  params.seed = r.u64();
  const std::string model_id = r.str();
  const auto count = r.u64();
  if (dim == 0 || count == 0) throw Error(ErrorCode::FormatError, "index has no dimension or entries");
  if (count > r.remaining() / (8ULL * dim)) {
    throw Error(ErrorCode::TruncatedFile, "entry count exceeds available data");
  }

  std::vector<IndexEntry> entries;
  entries.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    IndexEntry e;
    e.chunk_id = r.str();
    e.body = r.str();
    e.metadata.topic_domain = r.str();
    e.metadata.source_ref = r.str();
    const auto tier = r.u8();
    if (tier > 2) throw Error(ErrorCode::FormatError, "bad difficulty tier");
    e.metadata.difficulty_tier = static_cast<DifficultyTier>(tier);
    e.metadata.oversized = r.u8() != 0;
    const auto prereqs = r.u32();
    for (std::uint32_t p = 0; p < prereqs; ++p) e.metadata.prerequisites.push_back(r.str());
    e.vector.model_id = model_id;
    e.vector.values.resize(dim);
    for (auto& x : e.vector.values) x = r.f64();
    entries.push_back(std::move(e));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::FormatError, "trailing bytes after entries");
  return build(std::move(entries), params);
}

void VectorIndex::save_file(const std::filesystem::path& path) const {
  text::write_file_atomic(path, save());
}

VectorIndex VectorIndex::load_file(const std::filesystem::path& path) {
  return load(text::read_file(path));
}

}  // namespace tutorrag
