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

#include <cmath>
#include <cstdlib>
#include <random>

#include "stub_upstream.hpp"
#include "tutorrag/embed.hpp"
#include "tutorrag/error.hpp"
#include "tutorrag/text_util.hpp"

namespace tutorrag {
namespace {

using testing::kStubKey;
using testing::kStubKeyEnv;
using testing::StubUpstream;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

class EmbedEnv : public ::testing::Test {
 protected:
  void SetUp() override { setenv(kStubKeyEnv, kStubKey, 1); }
};

TEST(LocalEmbedder, EqualTextsGiveIdenticalVectors) {
  const auto out = embed_texts(local_embedder_config(256), {"torsion", "torsion"});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], out[1]);
  EXPECT_EQ(out[0].dim(), 256u);
}

TEST(LocalEmbedder, NormalizedToUnitLength) {
  std::mt19937 rng(5);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz ";
  std::vector<std::string> texts = {"a", "ab", "T", "shear flow in thin-walled tubes"};
  for (int i = 0; i < 200; ++i) {
    std::string s(1 + rng() % 60, 'x');
    for (auto& c : s) c = alphabet[rng() % alphabet.size()];
    if (text::trim(s).empty()) s = "q";
    texts.push_back(s);
  }
  for (const auto& v : embed_texts(local_embedder_config(64), texts)) {
    EXPECT_NEAR(l2_norm(v.values), 1.0, 1e-9);
    for (double x : v.values) EXPECT_TRUE(std::isfinite(x));
  }
}

TEST(LocalEmbedder, DependsOnModelAndDim) {
  const auto a = embed_local("polar moment of inertia", "local-a", 128);
  const auto b = embed_local("polar moment of inertia", "local-b", 128);
  EXPECT_NE(a.values, b.values);
  EXPECT_EQ(embed_local("x y z", "local-a", 32).dim(), 32u);
}

TEST(LocalEmbedder, SimilarTextScoresHigher) {
  const auto q = embed_local("angle of twist of a shaft", "local-a", 1024);
  const auto near = embed_local("the angle of twist of the shaft", "local-a", 1024);
  const auto far = embed_local("recipe for tomato pasta sauce", "local-a", 1024);
  EXPECT_GT(cosine_similarity(q, near), cosine_similarity(q, far));
}

TEST(LocalEmbedder, RejectsEmptyInput) {
  const Embedder e(local_embedder_config(16));
  EXPECT_EQ(code_of([&] { e.embed_one("   "); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { e.embed(std::vector<std::string>{}); }), ErrorCode::InvalidArgument);
}

TEST(Cosine, HandExamples) {
  EXPECT_DOUBLE_EQ(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_NEAR(cosine_similarity(std::vector<double>{1, 1}, std::vector<double>{1, 0}), 0.70710678, 1e-8);
}

TEST(Cosine, Errors) {
  EXPECT_EQ(code_of([] { cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{1, 0, 0}); }),
            ErrorCode::DimensionMismatch);
  EXPECT_EQ(code_of([] { cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}); }),
            ErrorCode::ZeroVector);
}

TEST(Cosine, SymmetricScaleInvariantSelfOne) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(48), b(48);
    for (auto& x : a) x = g(rng);
    for (auto& x : b) x = g(rng);
    const double ab = cosine_similarity(a, b);
    EXPECT_NEAR(ab, cosine_similarity(b, a), 1e-12);
    EXPECT_GE(ab, -1.0);
    EXPECT_LE(ab, 1.0);
    auto scaled = a;
    for (auto& x : scaled) x *= 37.5;
    EXPECT_NEAR(cosine_similarity(scaled, b), ab, 1e-9);
    EmbeddingVector v{a, "m"};
    normalize(v);
    EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-9);
  }
}

TEST_F(EmbedEnv, RemoteDefaultDimAgainstConformingEndpoint) {
  StubUpstream stub;
  const auto cfg = testing::stub_embedder_config(stub, kDefaultRemoteDim, "text-embedding-3-large");
  EXPECT_EQ(cfg.dim, 3072);
  const auto out = Embedder(cfg).embed(std::vector<std::string>{"normal stress", "shear stress"});
  ASSERT_EQ(out.size(), 2u);
  for (const auto& v : out) {
    EXPECT_EQ(v.dim(), 3072u);
    EXPECT_NEAR(l2_norm(v.values), 1.0, 1e-9);
  }
  EXPECT_EQ(stub.last_authorization(), std::string("Bearer ") + kStubKey);
}

TEST_F(EmbedEnv, RemoteBatchesPreserveOrder) {
  StubUpstream stub;
  auto cfg = testing::stub_embedder_config(stub, 64);
  cfg.batch_size = 3;
  std::vector<std::string> texts;
  for (int i = 0; i < 10; ++i) texts.push_back("text number " + std::to_string(i));
  const auto out = Embedder(cfg).embed(texts);
  ASSERT_EQ(out.size(), texts.size());
  EXPECT_EQ(stub.embedding_calls.load(), 4);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    // The client re-normalizes, so allow last-bit differences.
    const auto want = embed_local(texts[i], cfg.model_id, 64).values;
    ASSERT_EQ(out[i].values.size(), want.size());
    for (std::size_t j = 0; j < want.size(); ++j) EXPECT_NEAR(out[i].values[j], want[j], 1e-12) << i;
  }
}

TEST_F(EmbedEnv, RemoteDimensionMismatch) {
  StubUpstream stub;
  stub.embedding_dim_override = 100;
  EXPECT_EQ(code_of([&] { Embedder(testing::stub_embedder_config(stub, 64)).embed_one("x"); }),
            ErrorCode::DimensionMismatch);
}

TEST_F(EmbedEnv, RemoteAuthFailureIsNotRetried) {
  StubUpstream stub;
  stub.embedding_status = 401;
  auto cfg = testing::stub_embedder_config(stub, 64);
  cfg.retry.attempts = 3;
  EXPECT_EQ(code_of([&] { Embedder(cfg).embed_one("x"); }), ErrorCode::AuthError);
  EXPECT_EQ(stub.embedding_calls.load(), 1);
}

TEST_F(EmbedEnv, RemoteServerErrorRetriedThenTransportError) {
  StubUpstream stub;
  stub.embedding_status = 503;
  auto cfg = testing::stub_embedder_config(stub, 64);
  cfg.retry.attempts = 3;
  try {
    Embedder(cfg).embed_one("x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TransportError);
    EXPECT_EQ(std::string(e.what()).find(kStubKey), std::string::npos);
  }
  EXPECT_EQ(stub.embedding_calls.load(), 3);
}

TEST_F(EmbedEnv, RemoteUnreachableIsTransportError) {
  auto cfg = local_embedder_config(8);
  cfg.backend = EmbedBackend::Remote;
  cfg.endpoint_url = "http://127.0.0.1:1/v1/embeddings";
  cfg.api_key_env = kStubKeyEnv;
  cfg.retry.attempts = 2;
  cfg.retry.base_delay = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::milliseconds(500);
  EXPECT_EQ(code_of([&] { Embedder(cfg).embed_one("x"); }), ErrorCode::TransportError);
}

TEST(RemoteEmbedder, MissingKeyIsAuthError) {
  StubUpstream stub;
  auto cfg = testing::stub_embedder_config(stub, 8);
  cfg.api_key_env = "TUTORRAG_DEFINITELY_UNSET_KEY";
  unsetenv(cfg.api_key_env.c_str());
  EXPECT_EQ(code_of([&] { Embedder(cfg).embed_one("x"); }), ErrorCode::AuthError);
  EXPECT_EQ(stub.embedding_calls.load(), 0);
}

TEST(EmbedderConfig, Validation) {
  auto cfg = local_embedder_config(0);
  EXPECT_EQ(code_of([&] { validate(cfg); }), ErrorCode::InvalidArgument);
  EmbedderConfig remote;
  remote.endpoint_url = "";
  EXPECT_EQ(code_of([&] { validate(remote); }), ErrorCode::InvalidArgument);
}

TEST(RetryPolicy, BackoffIsCappedAndJittered) {
  RetryPolicy p;
  p.base_delay = std::chrono::milliseconds(100);
  p.max_delay = std::chrono::milliseconds(1000);
  p.jitter = 0.2;
  for (int r = 1; r <= 8; ++r) {
    for (double u : {0.0, 0.5, 1.0}) {
      const auto d = p.delay_before_retry(r, u).count();
      EXPECT_GE(d, 0);
      EXPECT_LE(d, 1200);
    }
  }
  EXPECT_LT(p.delay_before_retry(1, 0.5).count(), p.delay_before_retry(3, 0.5).count());
}

}  // namespace
}  // namespace tutorrag
