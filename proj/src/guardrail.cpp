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

#include "tutorrag/guardrail.hpp"

#include <algorithm>
#include <utility>

#include "tutorrag/error.hpp"
#include "tutorrag/text_util.hpp"

namespace tutorrag {

using nlohmann::json;

const GuardrailConfig& default_guardrail_config() {
  static const GuardrailConfig cfg = [] {
    GuardrailConfig c;
    c.course_name = "Statics and Mechanics of Materials";
    c.statics_keywords = {
        "force", "moment", "torque", "equilibrium", "reaction",
        "free body diagram", "truss", "support", "fixed end", "couple",
        "resultant", "centroid", "center of gravity", "distributed load", "concentrated load",
        "point load", "shear force", "friction", "cantilever", "simply supported",
        "beam", "pulley", "method of joints", "method of sections", "statics",
        "statically determinate", "roller support", "pin support", "load", "reaction force",
    };
    c.mechanics_keywords = {
        "stress", "strain", "normal stress", "shear stress", "bending stress",
        "bending moment", "deflection", "torsion", "angle of twist", "shear modulus",
        "elastic modulus", "modulus of elasticity", "young's modulus", "hooke's law", "poisson's ratio",
        "moment of inertia", "polar moment of inertia", "section modulus", "neutral axis", "principal stress",
        "mohr's circle", "buckling", "critical load", "column", "axial",
        "deformation", "yield strength", "factor of safety", "cross-section", "shaft",
        "elastic", "plane stress", "strain energy", "mechanics of materials",
    };
    c.engineering_keywords = {
        "structural", "member", "steel", "concrete", "timber",
        "aluminum", "rod", "cylindrical", "span", "midspan",
        "cross-sectional area", "diameter", "extreme fiber", "self-weight", "structure",
        "girder", "bolt", "rivet", "weld", "specimen",
        "tensile", "compressive", "civil engineering", "gusset plate", "wide-flange",
    };
    c.exclusion_contexts = {
        "recipe", "cooking", "restaurant", "travel", "vacation",
        "hotel", "tourist", "movie", "music", "song",
        "celebrity", "fashion", "dating", "wedding", "birthday",
        "holiday", "sports", "football", "video game", "stock market",
        "cryptocurrency", "horoscope", "diet", "workout", "chemical",
        "molecule", "election",
    };
    c.coincidental_patterns = {
        {"temporal moment",
         R"(\b(?:in a|for a|at the|just a|wait a|me a|one|the right|a quiet|last) moments?\b(?! of)|\bmoments? (?:ago|later|of (?:truth|silence|clarity|doubt|weakness))\b)"},
        {"psychological stress",
         R"(\bstress(?:ed|ful)\b|\bstress (?:about|over|at work|management|relief|levels?|out)\b|\b(?:exam|work|emotional|mental|financial|job|school) stress\b|\b(?:deal(?:ing)? with|cop(?:e|ing) with|manag(?:e|ing)|reduc(?:e|ing)|reliev(?:e|ing)|handl(?:e|ing)) (?:my |the |your )?stress\b)"},
        {"light beam",
         R"(\b(?:light|laser|sun|moon|flash ?light|head ?light|tractor) ?beams?\b|\bbeam(?:s|ed|ing)? (?:of light|with (?:joy|pride)|me up)\b|\bbeaming\b)"},
        {"effort strain",
         R"(\b(?:eye|back|muscle|hamstring|financial|emotional|mental|voice) ?strain\b|\bstrain(?:ed|ing)? (?:my|your|his|her|our|their|relations|relationships?)\b|\bstrained\b)"},
        {"couple of people",
         R"(\b(?:married|young|happy|elderly|old|dating|lovely|cute|newlywed|engaged) couples?\b|\bcouple of (?:days|weeks|months|years|hours|minutes|friends|people|times|things|ideas|questions|drinks)\b|\bcouples? (?:therapy|counseling|goals|trip|costumes?)\b)"},
        {"support as assistance",
         R"(\b(?:customer|tech|technical|emotional|moral|family|financial|child|life|it) support\b|\bsupport (?:me|my|you|him|her|them|us|groups?|tickets?|team|hotline)\b)"},
    };
    c.units = {
        "N", "kN", "MN", "lb", "lbf", "kip", "kips", "psi", "ksi", "Pa", "kPa",
        "MPa", "GPa", "N·m", "kN·m", "kN-m", "N-m", "lb·in", "lb-in", "lb-ft", "kip-ft",
        "kN/m", "N/m", "lb/ft", "kips/ft", "mm", "m", "in", "ft", "mm^4", "in^4",
    };
    c.symbols = {
        "σ", "τ", "ε", "θ", "δ", "Σ", "ΣF", "ΣM", "\\sigma", "\\tau", "\\epsilon", "\\delta",
    };
    c.formula_patterns = {
        {"quantity assignment", R"(\b(?:P|V|M|T|F|E|G|I|J|S|K|R)\s*=\s*-?\$?\d)"},
        {"shear function", R"(\bV\s*\(\s*x\s*\)\s*=)"},
        {"moment function", R"(\bM\s*\(\s*x\s*\)\s*=)"},
        {"torsion formula", R"((?:\\tau|τ|tau)\s*\$?\s*=\s*T\s*\*?\s*c\s*/\s*J|\bTc\s*/\s*J\b|\bTr\s*/\s*J\b)"},
        {"stress formula",
         R"((?:\\sigma|σ|sigma)\s*\$?\s*=\s*(?:P\s*/\s*A|M\s*[yc]\s*/\s*I|E\s*\*?\s*(?:\\epsilon|ε|epsilon))|\bM[yc]\s*/\s*I\b|\bP\s*/\s*A\b)"},
        {"equilibrium equation", R"((?:Σ|\\sum|sum of)\s*(?:F|M|forces|moments)(?:_?\{?[xyzA-D]\}?)?\s*=\s*0)"},
        {"angle of twist", R"(\bTL\s*/\s*\(?\s*GJ\b|\bT\s*L\s*/\s*\(\s*G\s*J\s*\))"},
        {"euler buckling", R"((?:\\pi|π|pi)\s*\^?\s*2\s*\*?\s*E\s*I|\bP_?\{?cr\}?\b)"},
        {"plane stress component", R"((?:\\sigma|σ|\\tau|τ)_?\{?[xy]{1,2}\}?\$?\s*=\s*-?\d)"},
        {"axial deformation", R"((?:\\delta|δ|delta)\s*=\s*P\s*L\s*/\s*\(?\s*A\s*E|\bPL\s*/\s*\(?AE\b)"},
    };
    c.weights = GuardrailWeights{};
    c.threshold = 1.0;
    c.rejection_message =
        "I'm sorry, but this question is outside the scope of Statics and Mechanics of "
        "Materials. I can only help with topics covered in this course, such as forces, "
        "equilibrium, stress, strain, torsion, and bending. Please ask a course-related question.";
    return c;
  }();
  return cfg;
}

void validate(const GuardrailConfig& cfg) {
  if (!(cfg.threshold > 0.0)) throw Error(ErrorCode::ConfigError, "threshold must be > 0");
  const auto& w = cfg.weights;
  if (!(w.keyword > 0.0 && w.unit > 0.0 && w.symbol > 0.0 && w.formula > 0.0 && w.exclusion > 0.0)) {
    throw Error(ErrorCode::ConfigError, "all signal weights must be > 0");
  }
  if (text::trim(cfg.rejection_message).empty()) {
    throw Error(ErrorCode::ConfigError, "rejection_message is empty");
  }
  auto check_list = [](const std::vector<std::string>& list, const char* name) {
    for (const auto& item : list) {
      if (text::trim(item).empty()) {
        throw Error(ErrorCode::ConfigError, std::string(name) + " contains an empty entry");
      }
    }
  };
  check_list(cfg.statics_keywords, "statics_keywords");
  check_list(cfg.mechanics_keywords, "mechanics_keywords");
  check_list(cfg.engineering_keywords, "engineering_keywords");
  check_list(cfg.exclusion_contexts, "exclusion_contexts");
  check_list(cfg.units, "units");
  check_list(cfg.symbols, "symbols");
}

std::string_view topic_family_name(TopicFamily family) {
  switch (family) {
    case TopicFamily::Statics: return "statics";
    case TopicFamily::Mechanics: return "mechanics";
    case TopicFamily::GeneralEngineering: return "general_engineering";
  }
  return "statics";
}

namespace {

using Span = std::pair<std::size_t, std::size_t>;

bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || (u >= '0' && u <= '9') || u == '_';
}

bool is_ascii_letter(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z');
}

// Typographic apostrophes and multiplication dots are folded so "Hooke’s"
// and "lb⋅in" match like their ASCII forms.
std::string fold_typography(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.compare(i, 3, "\xE2\x80\x99") == 0) {  // U+2019
      out.push_back('\'');
      i += 2;
    } else if (s.compare(i, 3, "\xE2\x8B\x85") == 0) {  // U+22C5 -> U+00B7
      out += "\xC2\xB7";
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

// Occurrences of `phrase` in lowercase `text` on word boundaries, allowing a
// trailing "s" or "es".
std::vector<Span> find_phrase(std::string_view text, std::string_view phrase) {
  std::vector<Span> spans;
  if (phrase.empty()) return spans;
  std::size_t pos = 0;
  while ((pos = text.find(phrase, pos)) != std::string_view::npos) {
    const bool left_ok = pos == 0 || !is_word_byte(text[pos - 1]);
    std::size_t end = pos + phrase.size();
    if (end < text.size() && text[end] == 's') {
      ++end;
    } else if (end + 1 < text.size() && text[end] == 'e' && text[end + 1] == 's') {
      end += 2;
    }
    const bool right_ok = end >= text.size() || !is_word_byte(text[end]);
    const bool bare_ok =
        pos + phrase.size() >= text.size() || !is_word_byte(text[pos + phrase.size()]);
    if (left_ok && (right_ok || bare_ok)) {
      spans.emplace_back(pos, right_ok ? end : pos + phrase.size());
    }
    ++pos;
  }
  return spans;
}

bool overlaps(const Span& a, const Span& b) { return a.first < b.second && b.first < a.second; }

bool starts_after_number(std::string_view text, std::size_t pos) {
  std::size_t i = pos;
  while (i > 0 && text[i - 1] == ' ') --i;
  return i > 0 && text[i - 1] >= '0' && text[i - 1] <= '9';
}

bool alpha_only(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return is_ascii_letter(c); });
}

void push_unique(std::vector<std::string>& list, const std::string& item) {
  if (std::find(list.begin(), list.end(), item) == list.end()) list.push_back(item);
}

}  // namespace

Guardrail::Guardrail(GuardrailConfig cfg) : cfg_(std::move(cfg)) {
  validate(cfg_);
  auto compile = [](const PatternSpec& spec, std::regex::flag_type flags) {
    try {
      return Compiled{spec.name, std::regex(spec.pattern, flags)};
    } catch (const std::regex_error& e) {
      throw Error(ErrorCode::ConfigError,
                  "pattern '" + spec.name + "' does not compile: " + e.what());
    }
  };
  for (const auto& p : cfg_.coincidental_patterns) {
    coincidental_.push_back(compile(p, std::regex::ECMAScript | std::regex::icase));
  }
  for (const auto& p : cfg_.formula_patterns) {
    formulas_.push_back(compile(p, std::regex::ECMAScript));
  }
  units_by_length_ = cfg_.units;
  std::stable_sort(units_by_length_.begin(), units_by_length_.end(),
                   [](const std::string& a, const std::string& b) { return a.size() > b.size(); });
}

RelevanceVerdict Guardrail::classify(std::string_view question) const {
  if (text::trim(question).empty()) throw Error(ErrorCode::EmptyQuestion, "question is empty");

  const std::string original = fold_typography(question);
  const std::string lower = text::to_lower_ascii(original);
  RelevanceVerdict v;
  auto& sig = v.signals;

  std::vector<Span> coincidental;
  for (const auto& c : coincidental_) {
    for (auto it = std::sregex_iterator(lower.begin(), lower.end(), c.re);
         it != std::sregex_iterator(); ++it) {
      const auto begin = static_cast<std::size_t>(it->position());
      if (it->length() == 0) continue;
      coincidental.emplace_back(begin, begin + static_cast<std::size_t>(it->length()));
      push_unique(sig.coincidental_hits, c.name);
    }
  }

  auto scan_family = [&](const std::vector<std::string>& keywords, TopicFamily family) {
    for (const auto& kw : keywords) {
      const auto needle = text::to_lower_ascii(text::trim(kw));
      for (const auto& span : find_phrase(lower, needle)) {
        const bool masked = std::any_of(coincidental.begin(), coincidental.end(),
                                        [&](const Span& c) { return overlaps(c, span); });
        if (!masked) {
          push_unique(sig.keyword_hits, needle);
          v.topics.insert(family);
          break;
        }
      }
    }
  };
  scan_family(cfg_.statics_keywords, TopicFamily::Statics);
  scan_family(cfg_.mechanics_keywords, TopicFamily::Mechanics);
  scan_family(cfg_.engineering_keywords, TopicFamily::GeneralEngineering);

  for (const auto& ctx : cfg_.exclusion_contexts) {
    const auto needle = text::to_lower_ascii(text::trim(ctx));
    if (!find_phrase(lower, needle).empty()) push_unique(sig.exclusion_hits, needle);
  }

  // Units: longest match first at each position, case-sensitive.
  for (std::size_t i = 0; i < original.size();) {
    if (i > 0 && is_ascii_letter(original[i - 1])) {
      ++i;
      continue;
    }
    std::size_t advance = 1;
    for (const auto& unit : units_by_length_) {
      if (original.compare(i, unit.size(), unit) != 0) continue;
      const std::size_t end = i + unit.size();
      if (end < original.size() && is_ascii_letter(original[end])) continue;
      if (unit.size() <= 2 && alpha_only(unit) && !starts_after_number(original, i)) continue;
      push_unique(sig.unit_hits, unit);
      advance = unit.size();
      break;
    }
    i += advance;
  }

  for (const auto& sym : cfg_.symbols) {
    if (original.find(sym) != std::string::npos) push_unique(sig.symbol_hits, sym);
  }

  for (const auto& f : formulas_) {
    if (std::regex_search(original, f.re)) push_unique(sig.formula_hits, f.name);
  }

  const auto& w = cfg_.weights;
  v.score = w.keyword * static_cast<double>(sig.keyword_hits.size()) +
            w.unit * static_cast<double>(sig.unit_hits.size()) +
            w.symbol * static_cast<double>(sig.symbol_hits.size()) +
            w.formula * static_cast<double>(sig.formula_hits.size()) -
            w.exclusion * static_cast<double>(sig.exclusion_hits.size());
  v.relevant = v.score >= cfg_.threshold;
  if (!v.relevant) v.rejection_message = cfg_.rejection_message;
  return v;
}

std::set<TopicFamily> Guardrail::detect_topics(std::string_view question) const {
  return classify(question).topics;
}

RelevanceVerdict classify(const GuardrailConfig& cfg, std::string_view question) {
  return Guardrail(cfg).classify(question);
}

std::set<TopicFamily> detect_topics(const GuardrailConfig& cfg, std::string_view question) {
  return Guardrail(cfg).detect_topics(question);
}

json verdict_to_json(const RelevanceVerdict& v) {
  json topics = json::array();
  for (auto t : v.topics) topics.push_back(topic_family_name(t));
  json j = {{"relevant", v.relevant},
            {"score", v.score},
            {"topics", topics},
            {"signals",
             {{"keyword_hits", v.signals.keyword_hits},
              {"unit_hits", v.signals.unit_hits},
              {"symbol_hits", v.signals.symbol_hits},
              {"formula_hits", v.signals.formula_hits},
              {"exclusion_hits", v.signals.exclusion_hits},
              {"coincidental_hits", v.signals.coincidental_hits}}}};
  j["rejection_message"] = v.rejection_message ? json(*v.rejection_message) : json(nullptr);
  return j;
}

}  // namespace tutorrag
