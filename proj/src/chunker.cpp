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

#include "tutorrag/chunker.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <regex>

#include "tutorrag/error.hpp"
#include "tutorrag/text_util.hpp"

namespace tutorrag {

using nlohmann::json;

std::string_view difficulty_name(DifficultyTier tier) {
  switch (tier) {
    case DifficultyTier::Foundational: return "foundational";
    case DifficultyTier::Intermediate: return "intermediate";
    case DifficultyTier::Advanced: return "advanced";
  }
  return "foundational";
}

DifficultyTier parse_difficulty(std::string_view name) {
  const auto lower = text::to_lower_ascii(name);
  if (lower == "foundational") return DifficultyTier::Foundational;
  if (lower == "intermediate") return DifficultyTier::Intermediate;
  if (lower == "advanced") return DifficultyTier::Advanced;
  throw Error(ErrorCode::SchemaError, "unknown difficulty tier '" + std::string(name) + "'");
}

std::string make_chunk_id(std::string_view body, std::string_view source_ref) {
  std::string material;
  material.reserve(body.size() + source_ref.size() + 1);
  material.append(source_ref);
  material.push_back('\x1f');
  material.append(body);
  return "c" + text::sha256_hex(material).substr(0, 16);
}

bool is_heading_line(std::string_view line) {
  line = text::trim(line);
  if (line.empty()) return false;
  const auto tokens = text::split_whitespace(line);
  if (tokens.size() > 12) return false;

  static const std::regex numbered(R"(^(\d+[.)]|\d+(\.\d+)+)\s+[A-Za-z].*$)");
  if (std::regex_match(line.begin(), line.end(), numbered)) return true;

  int letters = 0;
  for (char ch : line) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::islower(c)) return false;
    if (std::isupper(c)) ++letters;
  }
  return letters >= 2;
}

std::string source_ref_for(std::string_view doc_id, int first_page, int last_page) {
  std::string ref(doc_id);
  ref += ":p" + std::to_string(first_page);
  if (last_page != first_page) ref += "-p" + std::to_string(last_page);
  return ref;
}

std::string_view source_ref_doc(std::string_view source_ref) {
  const auto colon = source_ref.rfind(":p");
  return colon == std::string_view::npos ? source_ref : source_ref.substr(0, colon);
}

namespace {

// Smallest piece a window may hold: one whitespace token, or an entire
// boundary-protected block.
struct Unit {
  std::string_view text;
  int tokens = 1;
  int page = 1;
  std::size_t block = 0;
  std::size_t topic = 0;
  bool atomic = false;
};

std::string_view first_line(std::string_view s) {
  s = text::trim(s);
  const auto nl = s.find('\n');
  return nl == std::string_view::npos ? s : s.substr(0, nl);
}

}  // namespace

std::vector<Chunk> chunk_document(const Document& doc, const ChunkPolicy& policy) {
  if (policy.max_chunk_tokens <= 0 || policy.overlap_tokens < 0 ||
      policy.overlap_tokens >= policy.max_chunk_tokens) {
    throw Error(ErrorCode::PolicyError,
                "require max_chunk_tokens > overlap_tokens >= 0 (got " +
                    std::to_string(policy.max_chunk_tokens) + ", " +
                    std::to_string(policy.overlap_tokens) + ")");
  }

  std::vector<std::string> topics;
  topics.emplace_back(text::trim(doc.meta.title).empty() ? doc.meta.doc_id
                                                          : std::string(text::trim(doc.meta.title)));

  std::vector<Unit> units;
  std::vector<std::size_t> section_starts{0};
  for (std::size_t bi = 0; bi < doc.blocks.size(); ++bi) {
    const auto& block = doc.blocks[bi];
    const auto tokens = text::split_whitespace(block.body);
    if (tokens.empty()) continue;

    if (block.kind == BlockKind::Text && is_heading_line(first_line(block.body))) {
      topics.emplace_back(first_line(block.body));
      if (policy.respect_boundaries && !units.empty() && section_starts.back() != units.size()) {
        section_starts.push_back(units.size());
      }
    }
    const bool atomic = policy.respect_boundaries &&
                        (block.kind == BlockKind::Formula || block.kind == BlockKind::Diagram);
    if (atomic) {
      units.push_back({text::trim(block.body), static_cast<int>(tokens.size()), block.page, bi,
                       topics.size() - 1, true});
    } else {
      for (auto tok : tokens) {
        units.push_back({tok, 1, block.page, bi, topics.size() - 1, false});
      }
    }
  }
  if (units.empty()) throw Error(ErrorCode::EmptyDocument, "document has no tokens");
  section_starts.push_back(units.size());

  DifficultyTier tier = DifficultyTier::Foundational;
  if (doc.meta.difficulty_tier) tier = parse_difficulty(*doc.meta.difficulty_tier);

  std::vector<Chunk> chunks;
  auto emit = [&](std::size_t begin, std::size_t end, bool oversized) {
    Chunk c;
    int first_page = INT_MAX;
    int last_page = 0;
    for (std::size_t u = begin; u < end; ++u) {
      if (u > begin) c.body.push_back(units[u].block == units[u - 1].block ? ' ' : '\n');
      c.body.append(units[u].text);
      c.token_count += units[u].tokens;
      first_page = std::min(first_page, units[u].page);
      last_page = std::max(last_page, units[u].page);
    }
    c.metadata.topic_domain = topics[units[begin].topic];
    c.metadata.source_ref = source_ref_for(doc.meta.doc_id, first_page, last_page);
    c.metadata.difficulty_tier = tier;
    c.metadata.prerequisites = doc.meta.prerequisites;
    c.metadata.oversized = oversized;
    c.chunk_id = make_chunk_id(c.body, c.metadata.source_ref);
    chunks.push_back(std::move(c));
  };

  const auto max_tokens = policy.max_chunk_tokens;
  for (std::size_t s = 0; s + 1 < section_starts.size(); ++s) {
    const std::size_t end = section_starts[s + 1];
    std::size_t pos = section_starts[s];
    std::size_t carried = 0;
    while (pos < end) {
      std::size_t w = pos;
      int tokens = 0;
      while (w < end && tokens + units[w].tokens <= max_tokens) tokens += units[w++].tokens;

      if (w == pos) {
        // A protected block larger than a window stays whole.
        emit(pos, pos + 1, true);
        ++pos;
        carried = 0;
        continue;
      }
      if (w < end && w - pos == carried && carried > 0) {
        // Only overlap fits before the next protected block; drop the overlap.
        pos += carried;
        carried = 0;
        continue;
      }
      emit(pos, w, false);
      if (w == end) break;

      std::size_t back = w;
      int overlap = 0;
      while (back > pos + 1 && !units[back - 1].atomic && overlap < policy.overlap_tokens) {
        --back;
        ++overlap;
      }
      carried = w - back;
      pos = back;
    }
  }
  return chunks;
}

json metadata_to_json(const ChunkMetadata& meta) {
  return {{"topic_domain", meta.topic_domain},
          {"source_ref", meta.source_ref},
          {"difficulty_tier", difficulty_name(meta.difficulty_tier)},
          {"prerequisites", meta.prerequisites},
          {"oversized", meta.oversized}};
}

ChunkMetadata metadata_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "metadata must be an object");
  ChunkMetadata m;
  try {
    m.topic_domain = j.at("topic_domain").get<std::string>();
    m.source_ref = j.at("source_ref").get<std::string>();
    m.difficulty_tier = parse_difficulty(j.value("difficulty_tier", std::string("foundational")));
    m.prerequisites = j.value("prerequisites", std::vector<std::string>{});
    m.oversized = j.value("oversized", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("chunk metadata: ") + e.what());
  }
  if (m.topic_domain.empty()) throw Error(ErrorCode::SchemaError, "topic_domain is empty");
  return m;
}

json chunk_to_json(const Chunk& c) {
  return {{"chunk_id", c.chunk_id},
          {"body", c.body},
          {"token_count", c.token_count},
          {"metadata", metadata_to_json(c.metadata)}};
}

Chunk chunk_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "chunk must be an object");
  Chunk c;
  try {
    c.chunk_id = j.at("chunk_id").get<std::string>();
    c.body = j.at("body").get<std::string>();
    c.token_count = j.value("token_count", static_cast<int>(text::count_tokens(c.body)));
    c.metadata = metadata_from_json(j.at("metadata"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("chunk: ") + e.what());
  }
  if (c.chunk_id.empty()) throw Error(ErrorCode::SchemaError, "chunk_id is empty");
  return c;
}

json chunks_to_json(const std::vector<Chunk>& chunks) {
  json arr = json::array();
  for (const auto& c : chunks) arr.push_back(chunk_to_json(c));
  return arr;
}

std::vector<Chunk> chunks_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorCode::SchemaError, "chunks must be a JSON array");
  std::vector<Chunk> out;
  out.reserve(j.size());
  for (const auto& item : j) out.push_back(chunk_from_json(item));
  return out;
}

}  // namespace tutorrag
