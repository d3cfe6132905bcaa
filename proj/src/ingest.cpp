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

#include "tutorrag/ingest.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

#include "tutorrag/error.hpp"
#include "tutorrag/text_util.hpp"

namespace tutorrag {

using nlohmann::json;

std::string_view block_kind_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::Text: return "text";
    case BlockKind::Table: return "table";
    case BlockKind::Formula: return "formula";
    case BlockKind::Diagram: return "diagram";
  }
  return "text";
}

BlockKind parse_block_kind(std::string_view name) {
  if (name == "text") return BlockKind::Text;
  if (name == "table") return BlockKind::Table;
  if (name == "formula") return BlockKind::Formula;
  if (name == "diagram") return BlockKind::Diagram;
  throw Error(ErrorCode::SchemaError, "unknown block kind '" + std::string(name) + "'");
}

std::size_t Document::total_chars() const {
  return std::accumulate(coverage.begin(), coverage.end(), std::size_t{0});
}

namespace {

bool braces_balanced(std::string_view s) {
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size() && (s[i + 1] == '{' || s[i + 1] == '}')) {
      ++i;
      continue;
    }
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth < 0) return false;
  }
  return depth == 0;
}

std::string strip_placeholders(std::string_view body) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto hit = body.find(kFormulaPlaceholder, pos);
    out.append(body.substr(pos, hit == std::string_view::npos ? hit : hit - pos));
    if (hit == std::string_view::npos) break;
    pos = hit + kFormulaPlaceholder.size();
  }
  return out;
}

const json& require(const json& obj, const char* key, std::string_view where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::SchemaError,
                std::string(where) + " is missing field '" + key + "'");
  }
  return *it;
}

std::string require_string(const json& obj, const char* key, std::string_view where) {
  const auto& v = require(obj, key, where);
  if (!v.is_string()) {
    throw Error(ErrorCode::SchemaError, std::string(where) + "." + key + " must be a string");
  }
  return v.get<std::string>();
}

long long require_int(const json& obj, const char* key, std::string_view where) {
  const auto& v = require(obj, key, where);
  if (!v.is_number_integer()) {
    throw Error(ErrorCode::SchemaError, std::string(where) + "." + key + " must be an integer");
  }
  return v.get<long long>();
}

auto merge_order_key(const ContentBlock& b) {
  return std::tie(b.page, b.kind, b.origin, b.order, b.body);
}

}  // namespace

Extraction parse_extraction(std::string_view payload) {
  if (!text::is_valid_utf8(payload)) {
    throw Error(ErrorCode::EncodingError, "payload is not valid UTF-8");
  }
  json root;
  try {
    root = json::parse(payload);
  } catch (const json::parse_error& e) {
    // Escaped lone surrogates decode to invalid code points.
    if (e.id == 101 && std::string_view(e.what()).find("surrogate") != std::string_view::npos) {
      throw Error(ErrorCode::EncodingError, e.what());
    }
    throw Error(ErrorCode::SchemaError, std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw Error(ErrorCode::SchemaError, "payload must be a JSON object");

  Extraction ex;
  ex.origin = require_string(root, "origin", "payload");
  ex.doc_id = require_string(root, "doc_id", "payload");
  const long long pages = require_int(root, "pages", "payload");
  if (pages < 1) throw Error(ErrorCode::SchemaError, "payload.pages must be positive");
  ex.pages = static_cast<int>(pages);
  if (ex.origin.empty()) throw Error(ErrorCode::SchemaError, "payload.origin is empty");

  const auto& blocks = require(root, "blocks", "payload");
  if (!blocks.is_array()) throw Error(ErrorCode::SchemaError, "payload.blocks must be an array");

  std::set<std::pair<int, int>> seen;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& jb = blocks[i];
    const std::string where = "blocks[" + std::to_string(i) + "]";
    if (!jb.is_object()) throw Error(ErrorCode::SchemaError, where + " must be an object");

    ContentBlock b;
    b.kind = parse_block_kind(require_string(jb, "kind", where));
    const long long page = require_int(jb, "page", where);
    const long long order = require_int(jb, "order", where);
    if (page < 1) throw Error(ErrorCode::SchemaError, where + ".page must be >= 1");
    if (order < 0) throw Error(ErrorCode::SchemaError, where + ".order must be >= 0");
    b.page = static_cast<int>(page);
    b.order = static_cast<int>(order);
    b.origin = ex.origin;
    if (!seen.emplace(b.page, b.order).second) {
      throw Error(ErrorCode::SchemaError,
                  where + " repeats (page, order) = (" + std::to_string(b.page) + ", " +
                      std::to_string(b.order) + ")");
    }

    const std::string raw = require_string(jb, "body", where);
    if (b.kind == BlockKind::Formula) {
      if (raw.find(kFormulaPlaceholder) != std::string::npos || !braces_balanced(raw)) {
        ++ex.dropped;
        continue;
      }
      b.body = std::string(text::trim(raw));
    } else {
      b.body = std::string(text::trim(strip_placeholders(raw)));
    }
    if (b.body.empty()) {
      ++ex.dropped;
      continue;
    }
    ex.blocks.push_back(std::move(b));
  }
  return ex;
}

json extraction_to_json(const Extraction& ex) {
  json blocks = json::array();
  for (const auto& b : ex.blocks) {
    blocks.push_back({{"kind", block_kind_name(b.kind)},
                      {"page", b.page},
                      {"order", b.order},
                      {"body", b.body}});
  }
  return {{"origin", ex.origin}, {"doc_id", ex.doc_id}, {"pages", ex.pages}, {"blocks", blocks}};
}

std::string serialize_extraction(const Extraction& ex) { return extraction_to_json(ex).dump(); }

Document merge_documents(const std::vector<Extraction>& extractions, const DocumentMeta& meta) {
  std::vector<ContentBlock> blocks;
  for (const auto& ex : extractions) {
    for (const auto& b : ex.blocks) {
      if (b.page < 1 || b.page > meta.pages) {
        throw Error(ErrorCode::PageOutOfRange,
                    "block on page " + std::to_string(b.page) + " from '" + ex.origin +
                        "' exceeds document page count " + std::to_string(meta.pages));
      }
      ContentBlock copy = b;
      if (copy.origin.empty()) copy.origin = ex.origin;
      blocks.push_back(std::move(copy));
    }
  }
  if (blocks.empty()) throw Error(ErrorCode::EmptyMerge, "no blocks from any extractor");

  std::sort(blocks.begin(), blocks.end(), [](const ContentBlock& a, const ContentBlock& b) {
    return merge_order_key(a) < merge_order_key(b);
  });

  Document doc;
  doc.meta = meta;
  std::size_t removed = 0;

  // Identical blocks (same origin, page, order, body) arrive when a merged
  // document is merged again; keep one copy.
  const auto last = std::unique(blocks.begin(), blocks.end());
  removed += static_cast<std::size_t>(std::distance(last, blocks.end()));
  blocks.erase(last, blocks.end());

  // Near-duplicate Text across extractors: per page, visit candidates longest
  // first and drop any that matches an already kept block of another origin.
  std::vector<bool> keep(blocks.size(), true);
  std::size_t i = 0;
  while (i < blocks.size()) {
    std::size_t j = i;
    while (j < blocks.size() && blocks[j].page == blocks[i].page) ++j;

    std::vector<std::size_t> texts;
    for (std::size_t k = i; k < j; ++k) {
      if (blocks[k].kind == BlockKind::Text) texts.push_back(k);
    }
    std::vector<std::size_t> lengths(blocks.size(), 0);
    std::vector<std::string> normalized(blocks.size());
    for (auto k : texts) {
      lengths[k] = text::char_count(blocks[k].body);
      normalized[k] = text::normalize_for_compare(blocks[k].body);
    }
    std::stable_sort(texts.begin(), texts.end(),
                     [&](std::size_t a, std::size_t b) { return lengths[a] > lengths[b]; });

    std::vector<std::size_t> kept;
    for (auto c : texts) {
      bool duplicate = false;
      for (auto k : kept) {
        if (blocks[k].origin == blocks[c].origin) continue;
        const auto la = text::char_count(normalized[k]);
        const auto lb = text::char_count(normalized[c]);
        const auto lo = std::min(la, lb);
        const auto hi = std::max(la, lb);
        // Edit distance is at least the length difference.
        if (hi > 0 && static_cast<double>(lo) / static_cast<double>(hi) < kNearDuplicateSimilarity) {
          continue;
        }
        if (text::normalized_similarity(normalized[k], normalized[c]) >= kNearDuplicateSimilarity) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) {
        keep[c] = false;
        ++removed;
      } else {
        kept.push_back(c);
      }
    }
    i = j;
  }

  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (!keep[k]) continue;
    doc.coverage[static_cast<std::size_t>(blocks[k].kind)] += text::char_count(blocks[k].body);
    doc.blocks.push_back(std::move(blocks[k]));
  }
  doc.duplicates_removed = removed;
  return doc;
}

json document_to_json(const Document& doc) {
  json blocks = json::array();
  for (const auto& b : doc.blocks) {
    blocks.push_back({{"kind", block_kind_name(b.kind)},
                      {"page", b.page},
                      {"order", b.order},
                      {"origin", b.origin},
                      {"body", b.body}});
  }
  json coverage = json::object();
  for (std::size_t k = 0; k < kBlockKindCount; ++k) {
    coverage[std::string(block_kind_name(static_cast<BlockKind>(k)))] = doc.coverage[k];
  }
  json j = {{"doc_id", doc.meta.doc_id},
            {"title", doc.meta.title},
            {"source_path", doc.meta.source_path},
            {"pages", doc.meta.pages},
            {"prerequisites", doc.meta.prerequisites},
            {"blocks", blocks},
            {"coverage", coverage},
            {"total_chars", doc.total_chars()},
            {"duplicates_removed", doc.duplicates_removed}};
  if (doc.meta.difficulty_tier) j["difficulty_tier"] = *doc.meta.difficulty_tier;
  return j;
}

Document document_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::SchemaError, "document must be a JSON object");
  Document doc;
  doc.meta.doc_id = require_string(j, "doc_id", "document");
  if (doc.meta.doc_id.empty()) throw Error(ErrorCode::SchemaError, "document.doc_id is empty");
  doc.meta.title = j.contains("title") ? require_string(j, "title", "document") : "";
  doc.meta.source_path =
      j.contains("source_path") ? require_string(j, "source_path", "document") : "";
  const long long pages = require_int(j, "pages", "document");
  if (pages < 1) throw Error(ErrorCode::SchemaError, "document.pages must be positive");
  doc.meta.pages = static_cast<int>(pages);
  if (j.contains("difficulty_tier") && !j["difficulty_tier"].is_null()) {
    doc.meta.difficulty_tier = require_string(j, "difficulty_tier", "document");
  }
  if (j.contains("prerequisites")) {
    const auto& p = j["prerequisites"];
    if (!p.is_array()) throw Error(ErrorCode::SchemaError, "document.prerequisites must be an array");
    for (const auto& s : p) {
      if (!s.is_string()) throw Error(ErrorCode::SchemaError, "prerequisites must be strings");
      doc.meta.prerequisites.push_back(s.get<std::string>());
    }
  }
  const auto& blocks = require(j, "blocks", "document");
  if (!blocks.is_array()) throw Error(ErrorCode::SchemaError, "document.blocks must be an array");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& jb = blocks[i];
    const std::string where = "blocks[" + std::to_string(i) + "]";
    if (!jb.is_object()) throw Error(ErrorCode::SchemaError, where + " must be an object");
    ContentBlock b;
    b.kind = parse_block_kind(require_string(jb, "kind", where));
    b.page = static_cast<int>(require_int(jb, "page", where));
    b.order = static_cast<int>(require_int(jb, "order", where));
    b.origin = jb.contains("origin") ? require_string(jb, "origin", where) : "";
    b.body = require_string(jb, "body", where);
    if (!text::is_valid_utf8(b.body)) throw Error(ErrorCode::EncodingError, where + ".body");
    if (b.page < 1 || b.page > doc.meta.pages) {
      throw Error(ErrorCode::PageOutOfRange, where + " page outside document");
    }
    if (text::trim(b.body).empty()) throw Error(ErrorCode::SchemaError, where + ".body is empty");
    doc.coverage[static_cast<std::size_t>(b.kind)] += text::char_count(b.body);
    doc.blocks.push_back(std::move(b));
  }
  std::stable_sort(doc.blocks.begin(), doc.blocks.end(),
                   [](const ContentBlock& a, const ContentBlock& b) {
                     return std::tie(a.page, a.kind, a.origin, a.order) <
                            std::tie(b.page, b.kind, b.origin, b.order);
                   });
  if (j.contains("duplicates_removed") && j["duplicates_removed"].is_number_unsigned()) {
    doc.duplicates_removed = j["duplicates_removed"].get<std::size_t>();
  }
  return doc;
}

}  // namespace tutorrag
