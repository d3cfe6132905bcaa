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
#include <string>
#include <string_view>
#include <vector>

#include "tutorrag/answer.hpp"
#include "tutorrag/embed.hpp"
#include "tutorrag/guardrail.hpp"
#include "tutorrag/service.hpp"

namespace tutorrag {

// TOML loaders. Unknown keys and wrong types are ConfigError; the file
// schemas are documented in the README.

GuardrailConfig parse_guardrail_config(std::string_view toml_text);
GuardrailConfig load_guardrail_config(const std::filesystem::path& path);
std::string guardrail_config_to_toml(const GuardrailConfig& cfg);

GenerationConfig parse_generation_config(std::string_view toml_text);
GenerationConfig load_generation_config(const std::filesystem::path& path);

// A bare embedder table (the keys of a [[backend]] entry at top level).
EmbedderConfig parse_embedder_config(std::string_view toml_text);
EmbedderConfig load_embedder_config(const std::filesystem::path& path);

// One [[backend]] table per embedder.
std::vector<EmbedderConfig> parse_backends(std::string_view toml_text);
std::vector<EmbedderConfig> load_backends(const std::filesystem::path& path);

// Relative paths inside the file resolve against `base_dir`.
ServiceConfig parse_service_config(std::string_view toml_text,
                                   const std::filesystem::path& base_dir = {});
ServiceConfig load_service_config(const std::filesystem::path& path);

}  // namespace tutorrag
