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

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorrag/chunker.hpp"
#include "tutorrag/eval.hpp"
#include "tutorrag/ingest.hpp"
#include "tutorrag/text_util.hpp"

namespace tutorrag::testing {

inline std::filesystem::path data_path(const std::string& rel) {
  return std::filesystem::path(TUTORRAG_DATA_DIR) / rel;
}

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  return nlohmann::json::parse(text::read_file(p));
}

inline const std::vector<std::string>& torsion_doc_ids() {
  static const std::vector<std::string> ids = {"torsion_intro",   "shear_strain",
                                               "torsion_formula", "angle_of_twist",
                                               "indeterminate_shafts", "power_transmission"};
  return ids;
}

inline std::vector<Document> torsion_documents() {
  std::vector<Document> docs;
  for (const auto& id : torsion_doc_ids()) {
    docs.push_back(document_from_json(read_json_file(data_path("torsion/" + id + ".json"))));
  }
  return docs;
}

inline std::vector<Chunk> torsion_chunks(const ChunkPolicy& policy = {}) {
  std::vector<Chunk> all;
  for (const auto& d : torsion_documents()) {
    auto c = chunk_document(d, policy);
    all.insert(all.end(), c.begin(), c.end());
  }
  return all;
}

inline std::vector<BenchQuery> torsion_queries() {
  return parse_bench_queries(read_json_file(data_path("torsion/queries.json")));
}

inline std::vector<LabeledQuestion> filter_suite() {
  return parse_suite(read_json_file(data_path("suites/filter_suite.json")));
}

// Code points counted independently of the library: every byte that is not
// a UTF-8 continuation byte starts a character.
inline std::size_t count_code_points(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
  return n;
}

// ASCII payload from one extractor with exactly `total_chars` characters of
// block bodies. Vocabulary differs per origin so nothing near-duplicates.
inline nlohmann::json synthetic_payload(const std::string& origin, const std::string& kind,
                                        const std::string& doc_id, int pages,
                                        std::size_t total_chars, unsigned seed) {
  std::vector<std::string> words;
  if (origin == "layout") {
    words = {"beam", "support", "reaction", "section", "load", "member", "span", "table", "row", "value"};
  } else if (origin == "formula") {
    words = {"\\tau_3", "=", "T", "c", "/", "J", "+", "\\phi_2", "\\cdot", "G"};
  } else {
    words = {"diagram", "arrow", "shaft", "wall", "gear", "label", "dimension", "sketch", "torque", "fixed"};
  }
  std::mt19937 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  nlohmann::json blocks = nlohmann::json::array();
  std::size_t remaining = total_chars;
  int order = 0;
  while (remaining > 0) {
    const std::size_t want = std::min<std::size_t>(remaining, 300 + rng() % 200);
    std::string body = origin + " block " + std::to_string(order) + ":";
    while (body.size() < want) body += " " + words[pick(rng)];
    body.resize(want);
    while (!body.empty() && body.back() == ' ') body.back() = 'x';
    if (body.front() == ' ') body.front() = 'x';
    blocks.push_back({{"kind", kind}, {"page", 1 + order % pages}, {"order", order}, {"body", body}});
    remaining -= want;
    ++order;
  }
  return {{"origin", origin}, {"doc_id", doc_id}, {"pages", pages}, {"blocks", blocks}};
}

}  // namespace tutorrag::testing
