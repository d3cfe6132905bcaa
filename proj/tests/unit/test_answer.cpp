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

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <thread>

#include "stub_upstream.hpp"
#include "tutorrag/answer.hpp"
#include "tutorrag/error.hpp"
#include "tutorrag/text_util.hpp"

namespace tutorrag {
namespace {

using nlohmann::json;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

ContextChunk ctx(const std::string& id, int tokens, double score = 0.5) {
  std::string body;
  for (int i = 0; i < tokens; ++i) body += (i ? " t" : "t") + std::to_string(i);
  return {{id, score, 0, "lec:" + id}, body};
}

std::vector<ContextChunk> three() { return {ctx("a", 10, 0.9), ctx("b", 10, 0.8), ctx("c", 10, 0.7)}; }

int count_of(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

TEST(AssemblePrompt, NumbersEachChunkOnce) {
  const auto p = assemble_prompt(GenerationConfig{}, "How is torque related to shear stress?", three(), nullptr);
  const auto context = p.user.substr(0, p.user.find("Question:"));
  for (const char* m : {"[1] lec:a:", "[2] lec:b:", "[3] lec:c:"}) EXPECT_EQ(count_of(context, m), 1) << m;
  EXPECT_EQ(p.included.size(), 3u);
  EXPECT_NE(p.user.find("Question: How is torque related to shear stress?"), std::string::npos);
  EXPECT_EQ(p.system, std::string(kDefaultSystemPrompt));
}

TEST(AssemblePrompt, BudgetFitsTwoOfThree) {
  GenerationConfig cfg;
  cfg.context_token_budget = 25;
  const auto p = assemble_prompt(cfg, "q?", three(), nullptr);
  ASSERT_EQ(p.included.size(), 2u);
  EXPECT_NE(p.user.find("[1] lec:a:"), std::string::npos);
  EXPECT_NE(p.user.find("[2] lec:b:"), std::string::npos);
  EXPECT_EQ(p.user.find("[3]"), std::string::npos);
  EXPECT_EQ(p.user.find("lec:c"), std::string::npos);
}

// Greedy whole-chunk oracle: walk in rank order, take a chunk when it fits.
std::vector<std::string> greedy_oracle(const std::vector<ContextChunk>& cs, std::size_t budget) {
  std::vector<std::string> out;
  std::size_t used = 0;
  for (const auto& c : cs) {
    const auto n = text::split_whitespace(c.body).size();
    if (used + n <= budget) {
      used += n;
      out.push_back(c.result.chunk_id);
    }
  }
  return out;
}

TEST(AssemblePrompt, PackingMatchesGreedyOracle) {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ContextChunk> cs;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) cs.push_back(ctx("k" + std::to_string(i), 1 + static_cast<int>(rng() % 40)));
    GenerationConfig cfg;
    cfg.context_token_budget = 1 + static_cast<int>(rng() % 120);
    const auto expect = greedy_oracle(cs, static_cast<std::size_t>(cfg.context_token_budget));
    if (expect.empty()) {
      EXPECT_EQ(code_of([&] { assemble_prompt(cfg, "q", cs, nullptr); }), ErrorCode::BudgetTooSmall);
      continue;
    }
    const auto p = assemble_prompt(cfg, "q", cs, nullptr);
    std::vector<std::string> got;
    for (const auto& c : p.included) got.push_back(c.result.chunk_id);
    EXPECT_EQ(got, expect);
    // Whole chunks only.
    for (const auto& c : p.included) EXPECT_NE(p.user.find(c.body), std::string::npos);
  }
}

TEST(AssemblePrompt, Errors) {
  EXPECT_EQ(code_of([] { assemble_prompt(GenerationConfig{}, "q", {}, nullptr); }), ErrorCode::EmptyContext);
  EXPECT_EQ(code_of([] { assemble_prompt(GenerationConfig{}, "  ", three(), nullptr); }), ErrorCode::EmptyQuestion);
  GenerationConfig cfg;
  cfg.context_token_budget = 5;
  try {
    assemble_prompt(cfg, "q", three(), nullptr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BudgetTooSmall);
    EXPECT_NE(std::string(e.what()).find("(10)"), std::string::npos);
  }
}

TEST(AssemblePrompt, HistorySection) {
  Session s;
  EXPECT_EQ(assemble_prompt(GenerationConfig{}, "q", three(), &s).user.find("Previous conversation"),
            std::string::npos);
  for (int i = 0; i < 6; ++i) s.turns.push_back({"question " + std::to_string(i), {"answer " + std::to_string(i)}});
  const auto p = assemble_prompt(GenerationConfig{}, "q", three(), &s);
  EXPECT_NE(p.user.find("Previous conversation"), std::string::npos);
  EXPECT_EQ(p.user.find("question 1"), std::string::npos);
  for (int i = 2; i < 6; ++i) EXPECT_NE(p.user.find("question " + std::to_string(i)), std::string::npos);
}

TEST(AssemblePrompt, DeterministicAndTeachingOriented) {
  Session s;
  s.turns.push_back({"earlier", {"reply"}});
  EXPECT_EQ(assemble_prompt(GenerationConfig{}, "q", three(), &s).text(),
            assemble_prompt(GenerationConfig{}, "q", three(), &s).text());
  const std::string sys(kDefaultSystemPrompt);
  EXPECT_NE(sys.find("[1]"), std::string::npos);
}

TEST(RequestBody, CarriesDecodingParameters) {
  const GenerationConfig cfg;
  EXPECT_EQ(cfg.max_tokens, 400);
  EXPECT_DOUBLE_EQ(cfg.temperature, 0.7);
  EXPECT_DOUBLE_EQ(cfg.presence_penalty, 0.1);
  EXPECT_DOUBLE_EQ(cfg.frequency_penalty, 0.1);
  const auto body = chat_request_body(cfg, assemble_prompt(cfg, "q", three(), nullptr));
  EXPECT_EQ(body["max_tokens"], 400);
  EXPECT_EQ(body["temperature"], 0.7);
  EXPECT_EQ(body["presence_penalty"], 0.1);
  EXPECT_EQ(body["frequency_penalty"], 0.1);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["role"], "user");
}

class GenerateTest : public ::testing::Test {
 protected:
  void SetUp() override { setenv(testing::kStubKeyEnv, testing::kStubKey, 1); }
  GenerationConfig cfg() {
    GenerationConfig c;
    c.endpoint_url = stub.chat_url();
    c.api_key_env = testing::kStubKeyEnv;
    c.retry.attempts = 2;
    c.retry.base_delay = std::chrono::milliseconds(1);
    c.retry.max_delay = std::chrono::milliseconds(2);
    return c;
  }
  testing::StubUpstream stub;
};

TEST_F(GenerateTest, PassesThroughTextAndSendsParameters) {
  stub.set_chat_reply([](const json&) { return std::string("Use the torsion formula [1]."); });
  const auto c = cfg();
  EXPECT_EQ(generate(c, assemble_prompt(c, "q", three(), nullptr)), "Use the torsion formula [1].");
  const auto bodies = stub.chat_bodies();
  ASSERT_EQ(bodies.size(), 1u);
  EXPECT_EQ(bodies[0]["temperature"], 0.7);
  EXPECT_EQ(bodies[0]["max_tokens"], 400);
  EXPECT_EQ(stub.last_authorization(), std::string("Bearer ") + testing::kStubKey);
}

TEST_F(GenerateTest, Unauthorized) {
  stub.chat_status = 401;
  const auto c = cfg();
  EXPECT_EQ(code_of([&] { generate(c, assemble_prompt(c, "q", three(), nullptr)); }), ErrorCode::AuthError);
}

TEST_F(GenerateTest, EmptyCompletionIsRefusal) {
  stub.set_chat_reply([](const json&) { return std::string("  "); });
  const auto c = cfg();
  EXPECT_EQ(code_of([&] { generate(c, assemble_prompt(c, "q", three(), nullptr)); }), ErrorCode::ModelRefusal);
}

TEST_F(GenerateTest, ServerErrorIsTransportError) {
  stub.chat_status = 500;
  const auto c = cfg();
  EXPECT_EQ(code_of([&] { generate(c, assemble_prompt(c, "q", three(), nullptr)); }), ErrorCode::TransportError);
  EXPECT_EQ(stub.chat_calls.load(), 2);
}

TEST(Citations, ValidMarkersKept) {
  const auto a = validate_citations("See [1] and [2].", {ctx("a", 3), ctx("b", 3)});
  EXPECT_EQ(a.text, "See [1] and [2].");
  ASSERT_EQ(a.citations.size(), 2u);
  EXPECT_EQ(a.citations[0].chunk_id, "a");
  EXPECT_EQ(a.citations[1].source_ref, "lec:b");
  EXPECT_EQ(a.citation_violations, 0);
}

TEST(Citations, OutOfRangeMarkerStripped) {
  const auto a = validate_citations("See [7].", {ctx("a", 3), ctx("b", 3)});
  EXPECT_EQ(a.citation_violations, 1);
  EXPECT_EQ(a.text.find("[7]"), std::string::npos);
  EXPECT_TRUE(a.text.starts_with("See."));
  // No marker survived, so the context is listed as sources instead.
  EXPECT_TRUE(a.sources_appended);
  for (const auto& c : a.citations) EXPECT_NE(c.chunk_id, "");
}

TEST(Citations, RenumberedByFirstUse) {
  const auto a = validate_citations("First [2], then [1], again [2].", {ctx("a", 3), ctx("b", 3)});
  EXPECT_EQ(a.text, "First [1], then [2], again [1].");
  ASSERT_EQ(a.citations.size(), 2u);
  EXPECT_EQ(a.citations[0].chunk_id, "b");
  EXPECT_EQ(a.citations[1].chunk_id, "a");
}

TEST(Citations, ZeroAndHugeMarkersAreViolations) {
  const auto a = validate_citations("x [0] y [99999999999999999999] z [1]", {ctx("a", 3)});
  EXPECT_EQ(a.citation_violations, 2);
  EXPECT_EQ(a.text, "x y z [1]");
}

TEST(Citations, StrippingCannotForgeMarkers) {
  const auto a = validate_citations("[[5]1]", {ctx("a", 3)});
  EXPECT_EQ(a.citation_violations, 1);
  EXPECT_EQ(std::regex_search(a.text.substr(0, a.text.find("Sources:")), std::regex(R"(\[\d+\])")), false);
}

std::set<int> markers_in(const std::string& s) {
  std::set<int> out;
  static const std::regex re(R"(\[(\d+)\])");
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    out.insert(std::stoi((*it)[1].str()));
  }
  return out;
}

TEST(Citations, ClosureOnFuzzedOutputs) {
  std::mt19937 rng(77);
  const std::vector<std::string> pieces = {"torque ", "[", "]", "[1]", "[2]", "[3]", "[9]", "[0]", " ", "1", "[[",
                                           "]]", "stress", "\n", "[12]", "[4]"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string raw;
    const int len = static_cast<int>(rng() % 30);
    for (int i = 0; i < len; ++i) raw += pieces[rng() % pieces.size()];
    std::vector<ContextChunk> cs;
    const int n = 1 + static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) cs.push_back(ctx("k" + std::to_string(i), 2));
    const auto a = validate_citations(raw, cs);
    std::set<int> numbers;
    for (const auto& c : a.citations) numbers.insert(c.number);
    EXPECT_EQ(markers_in(a.text), numbers) << raw;
    for (std::size_t i = 0; i < a.citations.size(); ++i) EXPECT_EQ(a.citations[i].number, static_cast<int>(i) + 1);
    EXPECT_FALSE(a.citations.empty());
  }
}

TEST(Rejection, AnswerShape) {
  const auto a = rejection_answer("out of scope", "sid");
  EXPECT_TRUE(a.rejected);
  EXPECT_EQ(a.text, "out of scope");
  EXPECT_TRUE(a.citations.empty());
  EXPECT_EQ(a.session_id, "sid");
}

TEST(SessionIds, RandomHex) {
  const auto a = new_session_id();
  EXPECT_EQ(a.size(), 32u);
  EXPECT_NE(a, new_session_id());
  EXPECT_TRUE(std::all_of(a.begin(), a.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); }));
}

TEST(Sessions, ReuseTrimAndExpire) {
  auto now = std::chrono::steady_clock::time_point{};
  SessionStore store(3, std::chrono::seconds(60), [&] { return now; });
  std::string id;
  {
    auto lease = store.acquire(std::nullopt);
    id = lease.session().session_id;
    for (int i = 0; i < 5; ++i) lease.append({"q" + std::to_string(i), {}});
    EXPECT_EQ(lease.session().turns.size(), 3u);
    EXPECT_EQ(lease.session().turns.front().question, "q2");
  }
  {
    auto lease = store.acquire(id);
    EXPECT_EQ(lease.session().session_id, id);
    EXPECT_EQ(lease.session().turns.size(), 3u);
  }
  now += std::chrono::seconds(61);
  {
    auto lease = store.acquire(id);
    EXPECT_NE(lease.session().session_id, id);
    EXPECT_TRUE(lease.session().turns.empty());
  }
  {
    auto lease = store.acquire(std::string("unknown"));
    EXPECT_NE(lease.session().session_id, "unknown");
  }
  now += std::chrono::seconds(61);
  store.evict_expired();
  EXPECT_EQ(store.size(), 0u);
}

TEST(Sessions, SameSessionSerializedInArrivalOrder) {
  SessionStore store;
  std::string id;
  std::vector<int> order;
  std::mutex order_mu;
  std::vector<std::thread> threads;
  {
    auto first = store.acquire(std::nullopt);
    id = first.session().session_id;
    for (int i = 0; i < 4; ++i) {
      threads.emplace_back([&, i] {
        auto lease = store.acquire(id);
        std::lock_guard lock(order_mu);
        order.push_back(i);
        lease.append({"t" + std::to_string(i), {}});
      });
      // Give each waiter time to take its ticket before the next arrives.
      std::this_thread::sleep_for(std::chrono::milliseconds(40));
    }
    std::lock_guard lock(order_mu);
    EXPECT_TRUE(order.empty());
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(order, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Sessions, DifferentSessionsRunInParallel) {
  SessionStore store;
  auto a = store.acquire(std::nullopt);
  std::atomic<bool> done{false};
  std::thread t([&] {
    auto b = store.acquire(std::nullopt);
    done = true;
  });
  t.join();
  EXPECT_TRUE(done.load());
}

}  // namespace
}  // namespace tutorrag
