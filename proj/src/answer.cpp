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

#include "tutorrag/answer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <regex>
#include <set>

#include <openssl/rand.h>

#include "tutorrag/error.hpp"
#include "tutorrag/text_util.hpp"

namespace tutorrag {

using nlohmann::json;

const std::string_view kDefaultSystemPrompt =
    "You are a teaching assistant for a university engineering course. Answer only from the "
    "numbered course sources given with the question and cite them inline with their bracketed "
    "numbers, for example [1]. Guide the student instead of handing over a final answer: explain "
    "the governing concepts, identify the equations that apply, and lay out the solution steps so "
    "the student can complete the calculation. If the sources do not cover the question, say so "
    "rather than guessing.";

void validate(const GenerationConfig& cfg) {
  if (cfg.model_id.empty()) throw Error(ErrorCode::ConfigError, "generation model_id is empty");
  if (cfg.max_tokens <= 0) throw Error(ErrorCode::ConfigError, "max_tokens must be > 0");
  if (cfg.context_token_budget <= 0) {
    throw Error(ErrorCode::ConfigError, "context_token_budget must be > 0");
  }
  if (cfg.max_history < 0) throw Error(ErrorCode::ConfigError, "max_history must be >= 0");
  if (!std::isfinite(cfg.temperature) || cfg.temperature < 0.0) {
    throw Error(ErrorCode::ConfigError, "temperature must be >= 0");
  }
  if (text::trim(cfg.system_prompt_template).empty()) {
    throw Error(ErrorCode::ConfigError, "system_prompt_template is empty");
  }
}

json answer_to_json(const Answer& a) {
  json cites = json::array();
  for (const auto& c : a.citations) {
    cites.push_back({{"number", c.number},
                     {"chunk_id", c.chunk_id},
                     {"source_ref", c.source_ref},
                     {"score", c.score}});
  }
  return {{"text", a.text},
          {"citations", cites},
          {"rejected", a.rejected},
          {"session_id", a.session_id},
          {"citation_violations", a.citation_violations},
          {"sources_appended", a.sources_appended}};
}

Prompt assemble_prompt(const GenerationConfig& cfg, std::string_view question,
                       const std::vector<ContextChunk>& results, const Session* history) {
  if (results.empty()) throw Error(ErrorCode::EmptyContext, "no retrieved context");
  if (text::trim(question).empty()) throw Error(ErrorCode::EmptyQuestion, "question is empty");
  if (cfg.context_token_budget <= 0) {
    throw Error(ErrorCode::ConfigError, "context_token_budget must be > 0");
  }

  Prompt p;
  p.system = cfg.system_prompt_template;
  std::size_t used = 0;
  const auto budget = static_cast<std::size_t>(cfg.context_token_budget);
  for (const auto& r : results) {
    const std::size_t cost = text::count_tokens(r.body);
    if (used + cost > budget) continue;
    used += cost;
    p.included.push_back(r);
  }
  if (p.included.empty()) {
    std::size_t smallest = text::count_tokens(results.front().body);
    for (const auto& r : results) smallest = std::min(smallest, text::count_tokens(r.body));
    throw Error(ErrorCode::BudgetTooSmall, "budget " + std::to_string(budget) +
                                               " tokens is below the smallest chunk (" +
                                               std::to_string(smallest) + ")");
  }

  std::string user = "Course sources:\n";
  for (std::size_t i = 0; i < p.included.size(); ++i) {
    const auto& c = p.included[i];
    user += "[" + std::to_string(i + 1) + "] " + c.result.source_ref + ":\n" + c.body + "\n\n";
  }
  if (history != nullptr && !history->turns.empty() && cfg.max_history > 0) {
    user += "Previous conversation:\n";
    const std::size_t n = history->turns.size();
    const std::size_t first = n > static_cast<std::size_t>(cfg.max_history)
                                  ? n - static_cast<std::size_t>(cfg.max_history)
                                  : 0;
    for (std::size_t i = first; i < n; ++i) {
      user += "Student: " + history->turns[i].question + "\n";
      user += "Assistant: " + history->turns[i].answer.text + "\n";
    }
    user += "\n";
  }
  user += "Question: ";
  user += text::trim(question);
  p.user = std::move(user);
  return p;
}

json chat_request_body(const GenerationConfig& cfg, const Prompt& prompt) {
  return {{"model", cfg.model_id},
          {"messages",
           json::array({{{"role", "system"}, {"content", prompt.system}},
                        {{"role", "user"}, {"content", prompt.user}}})},
          {"max_tokens", cfg.max_tokens},
          {"temperature", cfg.temperature},
          {"presence_penalty", cfg.presence_penalty},
          {"frequency_penalty", cfg.frequency_penalty}};
}

std::string generate(const GenerationConfig& cfg, const Prompt& prompt,
                     const std::function<void()>& before_request) {
  if (text::trim(prompt.user).empty() && text::trim(prompt.system).empty()) {
    throw Error(ErrorCode::InvalidArgument, "prompt is empty");
  }
  const std::string key = read_api_key(cfg.api_key_env);
  PostOptions options;
  options.timeout = cfg.timeout;
  options.retry = cfg.retry;
  options.before_attempt = before_request;
  const std::string body = post_json(cfg.endpoint_url, chat_request_body(cfg, prompt).dump(), key,
                                     options);
  json response;
  try {
    response = json::parse(body);
  } catch (const json::parse_error&) {
    throw Error(ErrorCode::TransportError, "chat endpoint returned malformed JSON");
  }
  if (!response.contains("choices") || !response["choices"].is_array() ||
      response["choices"].empty()) {
    throw Error(ErrorCode::ModelRefusal, "completion has no choices");
  }
  const auto& choice = response["choices"][0];
  if (choice.value("finish_reason", json()).is_string() &&
      choice["finish_reason"] == "content_filter") {
    throw Error(ErrorCode::ModelRefusal, "completion was filtered");
  }
  const auto msg = choice.value("message", json::object());
  const auto content = msg.value("content", json());
  if (!content.is_string() || text::trim(content.get<std::string>()).empty()) {
    throw Error(ErrorCode::ModelRefusal, "empty completion");
  }
  return content.get<std::string>();
}

namespace {

const std::regex& marker_regex() {
  static const std::regex re(R"(\[(\d+)\])");
  return re;
}

// Marker value or 0 when it is not a usable positive number.
std::size_t marker_value(const std::string& digits) {
  if (digits.size() > 9) return 0;
  return static_cast<std::size_t>(std::stoul(digits));
}

}  // namespace

Answer validate_citations(std::string_view raw, const std::vector<ContextChunk>& context) {
  Answer a;
  const std::string input(raw);
  std::map<std::size_t, int> renumber;  // context index (1-based) -> citation number
  std::string out;
  std::set<std::size_t> emitted;  // offsets in `out` of markers we wrote
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(input.begin(), input.end(), marker_regex());
       it != std::sregex_iterator(); ++it) {
    const auto pos = static_cast<std::size_t>(it->position());
    out.append(input, last, pos - last);
    last = pos + static_cast<std::size_t>(it->length());
    const std::size_t n = marker_value((*it)[1].str());
    if (n == 0 || n > context.size()) {
      ++a.citation_violations;
      if (!out.empty() && out.back() == ' ') out.pop_back();
      continue;
    }
    auto [slot, fresh] = renumber.try_emplace(n, static_cast<int>(renumber.size()) + 1);
    if (fresh) {
      const auto& r = context[n - 1].result;
      a.citations.push_back({slot->second, r.chunk_id, r.source_ref, r.score});
    }
    emitted.insert(out.size());
    out += "[" + std::to_string(slot->second) + "]";
  }
  out.append(input, last, std::string::npos);

  // Removing a marker can join "[1" and "]" into a new one; defuse those.
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = std::sregex_iterator(out.begin(), out.end(), marker_regex());
         it != std::sregex_iterator(); ++it) {
      const auto pos = static_cast<std::size_t>(it->position());
      if (emitted.count(pos) != 0) continue;
      out[pos] = '(';
      out[pos + static_cast<std::size_t>(it->length()) - 1] = ')';
      changed = true;
      break;
    }
  }

  if (a.citations.empty() && !context.empty()) {
    while (!out.empty() && (out.back() == ' ' || out.back() == '\n')) out.pop_back();
    out += out.empty() ? "Sources:" : "\n\nSources:";
    for (std::size_t i = 0; i < context.size(); ++i) {
      const auto& r = context[i].result;
      const int number = static_cast<int>(i) + 1;
      a.citations.push_back({number, r.chunk_id, r.source_ref, r.score});
      out += " [" + std::to_string(number) + "]";
    }
    a.sources_appended = true;
  }
  a.text = std::move(out);
  return a;
}

Answer rejection_answer(std::string_view message, std::string session_id) {
  Answer a;
  a.text = std::string(message);
  a.rejected = true;
  a.session_id = std::move(session_id);
  return a;
}

std::string new_session_id() {
  std::array<unsigned char, 16> bytes{};
  if (RAND_bytes(bytes.data(), static_cast<int>(bytes.size())) != 1) {
    throw Error(ErrorCode::IoError, "random source unavailable");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  for (unsigned char b : bytes) {
    id.push_back(kHex[b >> 4]);
    id.push_back(kHex[b & 0xF]);
  }
  return id;
}

// Ticket lock so waiters on one session run in arrival order.
struct SessionStore::Lease::Slot {
  std::mutex mu;
  std::condition_variable cv;
  std::uint64_t next_ticket = 0;
  std::uint64_t serving = 0;
  std::chrono::steady_clock::time_point last_used;
  Session session;
};

SessionStore::Lease::Lease(std::shared_ptr<Slot> slot, std::uint64_t ticket,
                           std::size_t max_turns)
    : slot_(std::move(slot)), max_turns_(max_turns) {
  std::unique_lock lock(slot_->mu);
  slot_->cv.wait(lock, [&] { return slot_->serving == ticket; });
}

SessionStore::Lease::Lease(Lease&& other) noexcept
    : slot_(std::move(other.slot_)), max_turns_(other.max_turns_) {}

SessionStore::Lease::~Lease() {
  if (!slot_) return;
  {
    std::lock_guard lock(slot_->mu);
    ++slot_->serving;
  }
  slot_->cv.notify_all();
}

Session& SessionStore::Lease::session() { return slot_->session; }

void SessionStore::Lease::append(Turn turn) {
  auto& turns = slot_->session.turns;
  turns.push_back(std::move(turn));
  if (max_turns_ > 0 && turns.size() > max_turns_) {
    turns.erase(turns.begin(), turns.begin() + static_cast<std::ptrdiff_t>(turns.size() - max_turns_));
  }
}

SessionStore::SessionStore(std::size_t max_turns, std::chrono::seconds ttl, Clock clock)
    : max_turns_(max_turns), ttl_(ttl), clock_(std::move(clock)) {}

std::chrono::steady_clock::time_point SessionStore::now() const {
  return clock_ ? clock_() : std::chrono::steady_clock::now();
}

SessionStore::Lease SessionStore::acquire(const std::optional<std::string>& session_id) {
  std::shared_ptr<Lease::Slot> slot;
  std::uint64_t ticket = 0;
  {
    std::lock_guard lock(mu_);
    const auto t = now();
    if (session_id && !session_id->empty()) {
      auto it = sessions_.find(*session_id);
      if (it != sessions_.end()) {
        auto existing = it->second;
        std::lock_guard slot_lock(existing->mu);
        const bool busy = existing->next_ticket != existing->serving;
        if (!busy && t - existing->last_used > ttl_) {
          sessions_.erase(it);
        } else {
          slot = existing;
        }
      }
    }
    if (!slot) {
      slot = std::make_shared<Lease::Slot>();
      slot->session.session_id = new_session_id();
      slot->session.created_at = std::chrono::system_clock::now();
      sessions_.emplace(slot->session.session_id, slot);
    }
    std::lock_guard slot_lock(slot->mu);
    ticket = slot->next_ticket++;
    slot->last_used = t;
  }
  return Lease(std::move(slot), ticket, max_turns_);
}

std::size_t SessionStore::size() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

void SessionStore::evict_expired() {
  std::lock_guard lock(mu_);
  const auto t = now();
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    auto slot = it->second;
    std::lock_guard slot_lock(slot->mu);
    const bool busy = slot->next_ticket != slot->serving;
    if (!busy && t - slot->last_used > ttl_) {
      it = sessions_.erase(it);
    } else {
      ++it;
    }
  }
}

}  // namespace tutorrag
