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

#include "tutorrag/config.hpp"

#include <initializer_list>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "tutorrag/error.hpp"
#include "tutorrag/text_util.hpp"

namespace tutorrag {

namespace {

toml::table parse_toml(std::string_view text, std::string_view what) {
  try {
    return toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << what << ": " << e.description() << " at line " << e.source().begin.line;
    throw Error(ErrorCode::ConfigError, msg.str());
  }
}

void allow_keys(const toml::table& t, std::initializer_list<std::string_view> keys,
                std::string_view where) {
  const std::set<std::string_view> allowed(keys);
  for (const auto& [k, v] : t) {
    if (allowed.count(k.str()) == 0) {
      throw Error(ErrorCode::ConfigError,
                  std::string(where) + ": unknown key '" + std::string(k.str()) + "'");
    }
  }
}

[[noreturn]] void type_error(std::string_view key, std::string_view want) {
  throw Error(ErrorCode::ConfigError, "'" + std::string(key) + "' must be " + std::string(want));
}

void read(const toml::table& t, std::string_view key, std::string& out) {
  if (const auto* n = t.get(key)) {
    if (!n->is_string()) type_error(key, "a string");
    out = n->as_string()->get();
  }
}

void read(const toml::table& t, std::string_view key, bool& out) {
  if (const auto* n = t.get(key)) {
    if (!n->is_boolean()) type_error(key, "a boolean");
    out = n->as_boolean()->get();
  }
}

void read(const toml::table& t, std::string_view key, double& out) {
  if (const auto* n = t.get(key)) {
    if (n->is_integer()) {
      out = static_cast<double>(n->as_integer()->get());
    } else if (n->is_floating_point()) {
      out = n->as_floating_point()->get();
    } else {
      type_error(key, "a number");
    }
  }
}

template <typename Int>
void read_int(const toml::table& t, std::string_view key, Int& out) {
  if (const auto* n = t.get(key)) {
    if (!n->is_integer()) type_error(key, "an integer");
    out = static_cast<Int>(n->as_integer()->get());
  }
}

void read(const toml::table& t, std::string_view key, std::vector<std::string>& out) {
  if (const auto* n = t.get(key)) {
    const auto* arr = n->as_array();
    if (arr == nullptr) type_error(key, "an array of strings");
    out.clear();
    for (const auto& item : *arr) {
      if (!item.is_string()) type_error(key, "an array of strings");
      out.push_back(item.as_string()->get());
    }
  }
}

void read_ms(const toml::table& t, std::string_view key, std::chrono::milliseconds& out) {
  long long ms = out.count();
  read_int(t, key, ms);
  if (ms <= 0) type_error(key, "a positive integer");
  out = std::chrono::milliseconds(ms);
}

const toml::table* subtable(const toml::table& t, std::string_view key) {
  const auto* n = t.get(key);
  if (n == nullptr) return nullptr;
  if (!n->is_table()) type_error(key, "a table");
  return n->as_table();
}

std::vector<PatternSpec> read_patterns(const toml::table& t, std::string_view key) {
  std::vector<PatternSpec> out;
  const auto* n = t.get(key);
  if (n == nullptr) return out;
  const auto* arr = n->as_array();
  if (arr == nullptr) type_error(key, "an array of tables");
  for (const auto& item : *arr) {
    const auto* tbl = item.as_table();
    if (tbl == nullptr) type_error(key, "an array of tables");
    allow_keys(*tbl, {"name", "pattern"}, key);
    PatternSpec p;
    read(*tbl, "name", p.name);
    read(*tbl, "pattern", p.pattern);
    if (p.name.empty() || p.pattern.empty()) {
      throw Error(ErrorCode::ConfigError, std::string(key) + " entries need name and pattern");
    }
    out.push_back(std::move(p));
  }
  return out;
}

void read_retry(const toml::table& t, RetryPolicy& retry) {
  const auto* r = subtable(t, "retry");
  if (r == nullptr) return;
  allow_keys(*r, {"attempts", "base_delay_ms", "max_delay_ms", "jitter"}, "retry");
  read_int(*r, "attempts", retry.attempts);
  read_ms(*r, "base_delay_ms", retry.base_delay);
  read_ms(*r, "max_delay_ms", retry.max_delay);
  read(*r, "jitter", retry.jitter);
  if (retry.attempts < 1) throw Error(ErrorCode::ConfigError, "retry.attempts must be >= 1");
  if (retry.jitter < 0.0 || retry.jitter >= 1.0) {
    throw Error(ErrorCode::ConfigError, "retry.jitter must be in [0, 1)");
  }
}

EmbedderConfig embedder_from_table(const toml::table& t) {
  allow_keys(t,
             {"backend", "endpoint_url", "api_key_env", "model_id", "dim", "normalize",
              "max_concurrent_requests", "batch_size", "timeout_ms", "retry"},
             "embedder");
  EmbedderConfig cfg;
  std::string backend = "remote";
  read(t, "backend", backend);
  read(t, "model_id", cfg.model_id);
  if (backend == "local") {
    cfg = local_embedder_config(kDefaultLocalDim, t.get("model_id") != nullptr
                                             ? cfg.model_id
                                             : std::string(kDefaultLocalModel));
  } else if (backend != "remote") {
    throw Error(ErrorCode::ConfigError, "backend must be \"remote\" or \"local\"");
  }
  read(t, "endpoint_url", cfg.endpoint_url);
  read(t, "api_key_env", cfg.api_key_env);
  read_int(t, "dim", cfg.dim);
  read(t, "normalize", cfg.normalize);
  read_int(t, "max_concurrent_requests", cfg.max_concurrent_requests);
  read_int(t, "batch_size", cfg.batch_size);
  read_ms(t, "timeout_ms", cfg.timeout);
  read_retry(t, cfg.retry);
  try {
    validate(cfg);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return cfg;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

std::string read_config_file(const std::filesystem::path& path) {
  try {
    return text::read_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

}  // namespace

GuardrailConfig parse_guardrail_config(std::string_view text_in) {
  const auto t = parse_toml(text_in, "guardrail config");
  allow_keys(t,
             {"course_name", "threshold", "rejection_message", "exclusion_contexts", "units",
              "symbols", "weights", "keywords", "coincidental", "formula"},
             "guardrail config");
  // Keys left out keep their built-in values.
  GuardrailConfig cfg = default_guardrail_config();
  read(t, "course_name", cfg.course_name);
  read(t, "threshold", cfg.threshold);
  read(t, "rejection_message", cfg.rejection_message);
  read(t, "exclusion_contexts", cfg.exclusion_contexts);
  read(t, "units", cfg.units);
  read(t, "symbols", cfg.symbols);
  if (const auto* w = subtable(t, "weights")) {
    allow_keys(*w, {"keyword", "unit", "symbol", "formula", "exclusion"}, "weights");
    read(*w, "keyword", cfg.weights.keyword);
    read(*w, "unit", cfg.weights.unit);
    read(*w, "symbol", cfg.weights.symbol);
    read(*w, "formula", cfg.weights.formula);
    read(*w, "exclusion", cfg.weights.exclusion);
  }
  if (const auto* k = subtable(t, "keywords")) {
    allow_keys(*k, {"statics", "mechanics", "engineering"}, "keywords");
    read(*k, "statics", cfg.statics_keywords);
    read(*k, "mechanics", cfg.mechanics_keywords);
    read(*k, "engineering", cfg.engineering_keywords);
  }
  if (t.contains("coincidental")) cfg.coincidental_patterns = read_patterns(t, "coincidental");
  if (t.contains("formula")) cfg.formula_patterns = read_patterns(t, "formula");
  validate(cfg);
  // Compiling catches bad regexes here rather than at first request.
  (void)Guardrail(cfg);
  return cfg;
}

GuardrailConfig load_guardrail_config(const std::filesystem::path& path) {
  return parse_guardrail_config(read_config_file(path));
}

std::string guardrail_config_to_toml(const GuardrailConfig& cfg) {
  auto strings = [](const std::vector<std::string>& v) {
    toml::array a;
    for (const auto& s : v) a.push_back(s);
    return a;
  };
  auto patterns = [](const std::vector<PatternSpec>& v) {
    toml::array a;
    for (const auto& p : v) a.push_back(toml::table{{"name", p.name}, {"pattern", p.pattern}});
    return a;
  };
  toml::table t{
      {"course_name", cfg.course_name},
      {"threshold", cfg.threshold},
      {"rejection_message", cfg.rejection_message},
      {"exclusion_contexts", strings(cfg.exclusion_contexts)},
      {"units", strings(cfg.units)},
      {"symbols", strings(cfg.symbols)},
      {"weights", toml::table{{"keyword", cfg.weights.keyword},
                              {"unit", cfg.weights.unit},
                              {"symbol", cfg.weights.symbol},
                              {"formula", cfg.weights.formula},
                              {"exclusion", cfg.weights.exclusion}}},
      {"keywords", toml::table{{"statics", strings(cfg.statics_keywords)},
                               {"mechanics", strings(cfg.mechanics_keywords)},
                               {"engineering", strings(cfg.engineering_keywords)}}},
      {"coincidental", patterns(cfg.coincidental_patterns)},
      {"formula", patterns(cfg.formula_patterns)},
  };
  std::ostringstream out;
  out << t << "\n";
  return out.str();
}

GenerationConfig parse_generation_config(std::string_view text_in) {
  const auto t = parse_toml(text_in, "generation config");
  allow_keys(t,
             {"endpoint_url", "api_key_env", "model_id", "max_tokens", "temperature",
              "presence_penalty", "frequency_penalty", "system_prompt_template",
              "context_token_budget", "max_history", "timeout_ms", "retry"},
             "generation config");
  GenerationConfig cfg;
  read(t, "endpoint_url", cfg.endpoint_url);
  read(t, "api_key_env", cfg.api_key_env);
  read(t, "model_id", cfg.model_id);
  read_int(t, "max_tokens", cfg.max_tokens);
  read(t, "temperature", cfg.temperature);
  read(t, "presence_penalty", cfg.presence_penalty);
  read(t, "frequency_penalty", cfg.frequency_penalty);
  read(t, "system_prompt_template", cfg.system_prompt_template);
  read_int(t, "context_token_budget", cfg.context_token_budget);
  read_int(t, "max_history", cfg.max_history);
  read_ms(t, "timeout_ms", cfg.timeout);
  read_retry(t, cfg.retry);
  validate(cfg);
  return cfg;
}

GenerationConfig load_generation_config(const std::filesystem::path& path) {
  return parse_generation_config(read_config_file(path));
}

EmbedderConfig parse_embedder_config(std::string_view text_in) {
  return embedder_from_table(parse_toml(text_in, "embedder config"));
}

EmbedderConfig load_embedder_config(const std::filesystem::path& path) {
  return parse_embedder_config(read_config_file(path));
}

std::vector<EmbedderConfig> parse_backends(std::string_view text_in) {
  const auto t = parse_toml(text_in, "backends");
  allow_keys(t, {"backend"}, "backends");
  const auto* n = t.get("backend");
  const auto* arr = n != nullptr ? n->as_array() : nullptr;
  if (arr == nullptr || arr->empty()) {
    throw Error(ErrorCode::ConfigError, "backends file needs at least one [[backend]] table");
  }
  std::vector<EmbedderConfig> out;
  for (const auto& item : *arr) {
    const auto* tbl = item.as_table();
    if (tbl == nullptr) type_error("backend", "an array of tables");
    out.push_back(embedder_from_table(*tbl));
  }
  return out;
}

std::vector<EmbedderConfig> load_backends(const std::filesystem::path& path) {
  return parse_backends(read_config_file(path));
}

ServiceConfig parse_service_config(std::string_view text_in, const std::filesystem::path& base_dir) {
  const auto t = parse_toml(text_in, "service config");
  allow_keys(t,
             {"bind_address", "index_path", "guardrail_config", "generation_config",
              "max_question_chars", "session_ttl_s", "client_key_header", "debug", "rate_limit",
              "embedder"},
             "service config");
  ServiceConfig cfg;
  read(t, "bind_address", cfg.bind_address);
  std::string path;
  read(t, "index_path", path);
  cfg.index_path = resolve(base_dir, path).string();
  path.clear();
  read(t, "guardrail_config", path);
  cfg.guardrail_config_path = resolve(base_dir, path).string();
  path.clear();
  read(t, "generation_config", path);
  cfg.generation_config_path = resolve(base_dir, path).string();
  read_int(t, "max_question_chars", cfg.max_question_chars);
  long long ttl = cfg.session_ttl.count();
  read_int(t, "session_ttl_s", ttl);
  cfg.session_ttl = std::chrono::seconds(ttl);
  read(t, "client_key_header", cfg.client_key_header);
  read(t, "debug", cfg.debug);
  if (const auto* r = subtable(t, "rate_limit")) {
    allow_keys(*r, {"requests_per_minute", "burst"}, "rate_limit");
    read_int(*r, "requests_per_minute", cfg.rate_limit.requests_per_minute);
    read_int(*r, "burst", cfg.rate_limit.burst);
  }
  if (cfg.rate_limit.requests_per_minute <= 0 || cfg.rate_limit.burst <= 0) {
    throw Error(ErrorCode::ConfigError, "rate_limit values must be > 0");
  }
  if (cfg.max_question_chars == 0) throw Error(ErrorCode::ConfigError, "max_question_chars must be > 0");
  if (ttl <= 0) throw Error(ErrorCode::ConfigError, "session_ttl_s must be > 0");
  const auto* e = subtable(t, "embedder");
  if (e == nullptr) throw Error(ErrorCode::ConfigError, "service config needs an [embedder] table");
  cfg.embedder = embedder_from_table(*e);
  return cfg;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  return parse_service_config(read_config_file(path), path.parent_path());
}

}  // namespace tutorrag
