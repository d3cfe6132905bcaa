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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tutorrag::text {

bool is_valid_utf8(std::string_view s);

// Number of Unicode code points; assumes valid UTF-8.
std::size_t char_count(std::string_view s);

std::u32string decode_utf8(std::string_view s);

std::string_view trim(std::string_view s);

// ASCII-only case folding; non-ASCII bytes pass through unchanged.
std::string to_lower_ascii(std::string_view s);

// Whitespace tokens (space, tab, CR, LF, FF, VT).
std::vector<std::string_view> split_whitespace(std::string_view s);

std::size_t count_tokens(std::string_view s);

// Lowercase, whitespace-collapsed form used for near-duplicate detection.
std::string normalize_for_compare(std::string_view s);

// 1 - levenshtein(a, b) / max(|a|, |b|) over code points; 1.0 for two empty
// strings.
double normalized_similarity(std::string_view a, std::string_view b);

// Levenshtein distance over code points.
std::size_t edit_distance(std::u32string_view a, std::u32string_view b);

std::string sha256_hex(std::string_view data);
void sha256(std::span<const std::uint8_t> data, std::span<std::uint8_t, 32> out);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view data);

}  // namespace tutorrag::text
