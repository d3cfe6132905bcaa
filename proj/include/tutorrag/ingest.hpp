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

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tutorrag {

enum class BlockKind { Text = 0, Table = 1, Formula = 2, Diagram = 3 };

inline constexpr std::size_t kBlockKindCount = 4;

std::string_view block_kind_name(BlockKind kind);
// Throws SchemaError on an unknown name.
BlockKind parse_block_kind(std::string_view name);

// Marker left by layout extractors where a formula could not be decoded.
inline constexpr std::string_view kFormulaPlaceholder = "<!-- formula-not-decoded -->";

struct ContentBlock {
  BlockKind kind = BlockKind::Text;
  int page = 1;
  std::string body;
  std::string origin;
  int order = 0;

  bool operator==(const ContentBlock&) const = default;
};

// One extractor's output for one source document, as read from the
// interchange format.
struct Extraction {
  std::string origin;
  std::string doc_id;
  int pages = 0;
  std::vector<ContentBlock> blocks;
  // Blocks discarded while parsing: empty bodies, undecoded formula
  // placeholders, unbalanced LaTeX.
  std::size_t dropped = 0;
};

struct DocumentMeta {
  std::string doc_id;
  std::string title;
  std::string source_path;
  int pages = 0;
  // Optional chunk metadata overrides carried through to the chunker.
  std::optional<std::string> difficulty_tier;
  std::vector<std::string> prerequisites;
};

struct Document {
  DocumentMeta meta;
  std::vector<ContentBlock> blocks;
  // Character (code point) totals per BlockKind, indexed by the enum value.
  std::array<std::size_t, kBlockKindCount> coverage{};
  // Text blocks removed as cross-extractor near-duplicates during merge.
  std::size_t duplicates_removed = 0;

  std::size_t total_chars() const;
};

// Parses one interchange payload. Throws EncodingError for invalid UTF-8 and
// SchemaError for structural problems (missing fields, unknown kind, repeated
// (page, origin, order)).
Extraction parse_extraction(std::string_view payload);

nlohmann::json extraction_to_json(const Extraction& extraction);
std::string serialize_extraction(const Extraction& extraction);

// Similarity at or above which two Text blocks from different extractors on
// the same page count as the same content.
inline constexpr double kNearDuplicateSimilarity = 0.9;

// Interleaves all extractor outputs into one Document ordered by
// (page, kind, origin, order). Throws PageOutOfRange and EmptyMerge.
Document merge_documents(const std::vector<Extraction>& extractions, const DocumentMeta& meta);

nlohmann::json document_to_json(const Document& doc);
Document document_from_json(const nlohmann::json& j);

}  // namespace tutorrag
