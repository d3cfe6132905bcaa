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

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorrag/ingest.hpp"

namespace tutorrag {

enum class DifficultyTier { Foundational, Intermediate, Advanced };

std::string_view difficulty_name(DifficultyTier tier);
DifficultyTier parse_difficulty(std::string_view name);

struct ChunkMetadata {
  std::string topic_domain;
  // "<doc_id>:p<first>" or "<doc_id>:p<first>-p<last>".
  std::string source_ref;
  DifficultyTier difficulty_tier = DifficultyTier::Foundational;
  std::vector<std::string> prerequisites;
  // Set when a single unsplittable block exceeded max_chunk_tokens.
  bool oversized = false;

  bool operator==(const ChunkMetadata&) const = default;
};

struct Chunk {
  std::string chunk_id;
  std::string body;
  int token_count = 0;
  ChunkMetadata metadata;

  bool operator==(const Chunk&) const = default;
};

struct ChunkPolicy {
  int max_chunk_tokens = 400;
  int overlap_tokens = 50;
  bool respect_boundaries = true;
};

// Content hash of (body, source_ref); equal inputs give equal ids.
std::string make_chunk_id(std::string_view body, std::string_view source_ref);

// Heading-like Text: first line all caps or numbered ("3.", "2.1 ...").
bool is_heading_line(std::string_view line);

std::string source_ref_for(std::string_view doc_id, int first_page, int last_page);
// Returns the doc_id part of a source_ref.
std::string_view source_ref_doc(std::string_view source_ref);

// Sliding-window chunking over whitespace tokens. With respect_boundaries,
// headings start new windows and Formula/Diagram blocks are never split.
// Throws PolicyError and EmptyDocument.
std::vector<Chunk> chunk_document(const Document& doc, const ChunkPolicy& policy = {});

nlohmann::json chunk_to_json(const Chunk& chunk);
Chunk chunk_from_json(const nlohmann::json& j);
nlohmann::json chunks_to_json(const std::vector<Chunk>& chunks);
std::vector<Chunk> chunks_from_json(const nlohmann::json& j);

nlohmann::json metadata_to_json(const ChunkMetadata& meta);
ChunkMetadata metadata_from_json(const nlohmann::json& j);

}  // namespace tutorrag
