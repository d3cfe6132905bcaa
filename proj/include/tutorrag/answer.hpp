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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorrag/http_client.hpp"
#include "tutorrag/index.hpp"

namespace tutorrag {

extern const std::string_view kDefaultSystemPrompt;

struct GenerationConfig {
  std::string endpoint_url = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string model_id = "gpt-4";
  int max_tokens = 400;
  double temperature = 0.7;
  double presence_penalty = 0.1;
  double frequency_penalty = 0.1;
  std::string system_prompt_template = std::string(kDefaultSystemPrompt);
  // Whitespace tokens of chunk bodies allowed in the context section.
  int context_token_budget = 3000;
  int max_history = 4;
  std::chrono::milliseconds timeout{60000};
  RetryPolicy retry;

  bool operator==(const GenerationConfig&) const = default;
};

// Throws ConfigError.
void validate(const GenerationConfig& cfg);

struct Citation {
  int number = 0;
  std::string chunk_id;
  std::string source_ref;
  double score = 0.0;

  bool operator==(const Citation&) const = default;
};

struct Answer {
  std::string text;
  std::vector<Citation> citations;
  bool rejected = false;
  std::string session_id;
  // Markers that pointed past the context and were removed.
  int citation_violations = 0;
  // No valid marker survived, so a "Sources:" line was appended.
  bool sources_appended = false;
};

nlohmann::json answer_to_json(const Answer& answer);

// A retrieved chunk with the text that goes into the prompt.
struct ContextChunk {
  RetrievalResult result;
  std::string body;
};

struct Turn {
  std::string question;
  Answer answer;
};

struct Session {
  std::string session_id;
  std::vector<Turn> turns;
  std::chrono::system_clock::time_point created_at;
};

struct Prompt {
  std::string system;
  std::string user;
  // Chunks that made it into the context, numbered 1..n in this order.
  std::vector<ContextChunk> included;

  std::string text() const { return system + "\n\n" + user; }
};

// Packs whole chunks in rank order while they fit the budget; a chunk that
// does not fit is skipped and later, smaller ones are still tried.
// Throws EmptyContext and BudgetTooSmall.
Prompt assemble_prompt(const GenerationConfig& cfg, std::string_view question,
                       const std::vector<ContextChunk>& results, const Session* history);

nlohmann::json chat_request_body(const GenerationConfig& cfg, const Prompt& prompt);

// Throws AuthError, TransportError, ModelRefusal.
std::string generate(const GenerationConfig& cfg, const Prompt& prompt,
                     const std::function<void()>& before_request = {});

// Keeps markers 1..|context|, renumbers them by first use and strips the rest.
Answer validate_citations(std::string_view text, const std::vector<ContextChunk>& context);

// Answer for a rejected question.
Answer rejection_answer(std::string_view message, std::string session_id);

// Random 128-bit hex id.
std::string new_session_id();

// In-memory sessions with idle eviction. Each session is serialized: holders
// of a Lease on the same id run one at a time in arrival order.
class SessionStore {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  SessionStore(std::size_t max_turns = 50, std::chrono::seconds ttl = std::chrono::hours(2),
               Clock clock = {});

  class Lease {
   public:
    Lease(Lease&&) noexcept;
    Lease& operator=(Lease&&) = delete;
    ~Lease();
    Session& session();
    // Appends and drops the oldest turns past max_turns.
    void append(Turn turn);

   private:
    friend class SessionStore;
    struct Slot;
    Lease(std::shared_ptr<Slot> slot, std::uint64_t ticket, std::size_t max_turns);
    std::shared_ptr<Slot> slot_;
    std::size_t max_turns_ = 0;
  };

  // Unknown or expired ids start a new session under a fresh id.
  Lease acquire(const std::optional<std::string>& session_id);
  std::size_t size() const;
  void evict_expired();

 private:
  std::chrono::steady_clock::time_point now() const;

  std::size_t max_turns_;
  std::chrono::seconds ttl_;
  Clock clock_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_ptr<Lease::Slot>> sessions_;
};

}  // namespace tutorrag
