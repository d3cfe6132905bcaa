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

#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace tutorrag {

struct PatternSpec {
  std::string name;
  std::string pattern;  // ECMAScript regex

  bool operator==(const PatternSpec&) const = default;
};

struct GuardrailWeights {
  double keyword = 1.0;
  double unit = 0.5;
  double symbol = 0.5;
  double formula = 1.0;
  double exclusion = 1.5;  // subtracted

  bool operator==(const GuardrailWeights&) const = default;
};

// Lexical relevance classifier configuration. Keyword and exclusion entries
// match case-insensitively on word boundaries with an optional plural "s" or
// "es". Units match case-sensitively; purely alphabetic units of one or two
// letters ("m", "in", "kN") only count right after a number. Symbols match as
// plain substrings. Coincidental patterns are case-insensitive; formula
// patterns are case-sensitive.
struct GuardrailConfig {
  std::string course_name;
  std::vector<std::string> statics_keywords;
  std::vector<std::string> mechanics_keywords;
  std::vector<std::string> engineering_keywords;
  std::vector<std::string> exclusion_contexts;
  std::vector<PatternSpec> coincidental_patterns;
  std::vector<std::string> units;
  std::vector<std::string> symbols;
  std::vector<PatternSpec> formula_patterns;
  GuardrailWeights weights;
  double threshold = 1.0;
  std::string rejection_message;

  bool operator==(const GuardrailConfig&) const = default;
};

// Statics and Mechanics of Materials vocabulary shipped with the library.
// Authored for this project; replace it per course.
const GuardrailConfig& default_guardrail_config();

// Throws ConfigError (non-positive threshold or weights, empty rejection
// message, regex that does not compile).
void validate(const GuardrailConfig& cfg);

enum class TopicFamily { Statics, Mechanics, GeneralEngineering };
std::string_view topic_family_name(TopicFamily family);

struct RelevanceSignals {
  std::vector<std::string> keyword_hits;
  std::vector<std::string> unit_hits;
  std::vector<std::string> symbol_hits;
  std::vector<std::string> formula_hits;
  std::vector<std::string> exclusion_hits;
  // Keyword matches discarded because they fell inside coincidental phrasing.
  std::vector<std::string> coincidental_hits;
};

struct RelevanceVerdict {
  bool relevant = false;
  double score = 0.0;
  RelevanceSignals signals;
  std::set<TopicFamily> topics;
  std::optional<std::string> rejection_message;
};

nlohmann::json verdict_to_json(const RelevanceVerdict& verdict);

// Compiled form of a config; immutable and safe to share between threads.
class Guardrail {
 public:
  explicit Guardrail(GuardrailConfig cfg);

  // Throws EmptyQuestion when the question is blank.
  RelevanceVerdict classify(std::string_view question) const;
  std::set<TopicFamily> detect_topics(std::string_view question) const;

  const GuardrailConfig& config() const { return cfg_; }

 private:
  struct Compiled {
    std::string name;
    std::regex re;
  };

  GuardrailConfig cfg_;
  std::vector<Compiled> coincidental_;
  std::vector<Compiled> formulas_;
  std::vector<std::string> units_by_length_;
};

RelevanceVerdict classify(const GuardrailConfig& cfg, std::string_view question);
std::set<TopicFamily> detect_topics(const GuardrailConfig& cfg, std::string_view question);

}  // namespace tutorrag
