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

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fixtures.hpp"
#include "random_corpus.hpp"
#include "tutorrag/error.hpp"
#include "tutorrag/eval.hpp"

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

TEST(ClassificationMetrics, ReportedFilteringResult) {
  const auto m = classification_metrics({20, 2, 0, 58});
  EXPECT_NEAR(m.precision, 0.909, 5e-4);
  EXPECT_NEAR(m.recall, 1.0, 5e-4);
  EXPECT_NEAR(m.f1, 0.952, 5e-4);
  EXPECT_NEAR(m.accuracy, 0.975, 5e-4);
  // Exact fractions.
  EXPECT_DOUBLE_EQ(m.precision, 20.0 / 22.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 78.0 / 80.0);
}

TEST(ClassificationMetrics, ZeroDenominators) {
  EXPECT_EQ(code_of([] { classification_metrics({0, 0, 5, 5}); }), ErrorCode::UndefinedMetric);
  EXPECT_EQ(code_of([] { classification_metrics({0, 5, 0, 5}); }), ErrorCode::UndefinedMetric);
  EXPECT_EQ(code_of([] { classification_metrics({0, 0, 0, 0}); }), ErrorCode::UndefinedMetric);
  EXPECT_EQ(code_of([] { classification_metrics({-1, 0, 0, 5}); }), ErrorCode::InvalidArgument);
  const auto p = partial_classification_metrics({0, 0, 5, 5});
  EXPECT_FALSE(p.precision.has_value());
  EXPECT_DOUBLE_EQ(*p.recall, 0.0);
  EXPECT_DOUBLE_EQ(*p.accuracy, 0.5);
}

TEST(ClassificationMetrics, PerfectClassifier) {
  const auto m = classification_metrics({10, 0, 0, 10});
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_EQ(m.accuracy, 1.0);
}

TEST(Mrr, Examples) {
  EXPECT_DOUBLE_EQ(mrr({1, 1, 1, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(mrr({2}), 0.5);
  EXPECT_DOUBLE_EQ(mrr({1, 0}), 0.5);
  EXPECT_EQ(code_of([] { mrr({}); }), ErrorCode::EmptyInput);
  EXPECT_EQ(code_of([] { mrr({-1}); }), ErrorCode::InvalidArgument);
}

TEST(Mrr, PermutationInvariant) {
  std::mt19937 rng(2);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> r(1 + rng() % 20);
    for (auto& x : r) x = static_cast<int>(rng() % 8);
    const double a = mrr(r);
    std::shuffle(r.begin(), r.end(), rng);
    EXPECT_NEAR(mrr(r), a, 1e-12);
  }
}

TEST(Ndcg, Examples) {
  EXPECT_DOUBLE_EQ(ndcg_at_k({{1}}, 5), 1.0);
  EXPECT_NEAR(ndcg_at_k({{3}}, 5), (1.0 / std::log2(4.0)) / (1.0 / std::log2(2.0)), 1e-12);
  EXPECT_NEAR(ndcg_at_k({{3}}, 5), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(ndcg_at_k({{1}, {1}, {1}, {1}, {1}}, 5), 1.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k({{6}}, 5), 0.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k({{}}, 5), 0.0);  // no relevant items
  EXPECT_EQ(code_of([] { ndcg_at_k({}, 5); }), ErrorCode::EmptyInput);
  EXPECT_EQ(code_of([] { ndcg_at_k({{1}}, 0); }), ErrorCode::InvalidArgument);
}

TEST(Ndcg, BoundedAndOneIffTopPacked) {
  std::mt19937 rng(9);
  for (int t = 0; t < 300; ++t) {
    const int k = 1 + static_cast<int>(rng() % 6);
    std::vector<std::vector<int>> q(1 + rng() % 4);
    bool ideal = true;
    for (auto& ranks : q) {
      const int n = 1 + static_cast<int>(rng() % 4);
      std::vector<int> pool = {1, 2, 3, 4, 5, 6, 7, 8};
      std::shuffle(pool.begin(), pool.end(), rng);
      ranks.assign(pool.begin(), pool.begin() + n);
      std::vector<int> sorted = ranks;
      std::sort(sorted.begin(), sorted.end());
      for (int i = 0; i < std::min(n, k); ++i) ideal = ideal && sorted[i] == i + 1;
    }
    const double v = ndcg_at_k(q, k);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0 + 1e-12);
    EXPECT_EQ(std::abs(v - 1.0) < 1e-12, ideal);
  }
}

TEST(AccuracyAtK, Basic) {
  EXPECT_DOUBLE_EQ(accuracy_at_k({1, 5, 6, 0}, 5), 0.5);
}

TEST(Suite, ShippedFixtureShape) {
  const auto suite = testing::filter_suite();
  ASSERT_EQ(suite.size(), 80u);
  std::map<QuestionCategory, int> per;
  for (const auto& q : suite) {
    ++per[q.category];
    EXPECT_EQ(q.expected_relevant, q.category == QuestionCategory::Relevant);
  }
  for (auto c : {QuestionCategory::Relevant, QuestionCategory::EngineeringAdjacent,
                 QuestionCategory::AcademicNonEngineering, QuestionCategory::GeneralPersonal}) {
    EXPECT_EQ(per[c], 20) << category_name(c);
  }
}

TEST(Suite, ParseErrors) {
  EXPECT_EQ(code_of([] { parse_suite(json::parse(R"([{"id":"a","text":"x","category":"relevant","expected_relevant":false}])")); }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] {
              parse_suite(json::parse(R"([{"id":"a","text":"x","category":"relevant"},{"id":"a","text":"y","category":"relevant"}])"));
            }),
            ErrorCode::SchemaError);
  EXPECT_EQ(code_of([] { parse_suite(json::parse(R"([{"id":"a","text":"x","category":"weather"}])")); }),
            ErrorCode::SchemaError);
}

TEST(FilterExperiment, ShippedSuiteHasNoFalseNegatives) {
  const auto report = run_filter_experiment(default_guardrail_config(), testing::filter_suite());
  EXPECT_EQ(report.matrix.fn, 0);
  EXPECT_EQ(report.matrix.tp, 20);
  EXPECT_GE(report.matrix.tn * 10, (report.matrix.tn + report.matrix.fp) * 9);
}

TEST(FilterExperiment, MatrixMatchesRecount) {
  const auto report = run_filter_experiment(default_guardrail_config(), testing::filter_suite());
  ConfusionMatrix recount;
  for (const auto& o : report.outcomes) {
    if (o.verdict.relevant && o.expected_relevant) ++recount.tp;
    if (o.verdict.relevant && !o.expected_relevant) ++recount.fp;
    if (!o.verdict.relevant && o.expected_relevant) ++recount.fn;
    if (!o.verdict.relevant && !o.expected_relevant) ++recount.tn;
  }
  EXPECT_EQ(recount, report.matrix);
  const auto m = classification_metrics(report.matrix);
  EXPECT_DOUBLE_EQ(*report.metrics.precision, m.precision);
  EXPECT_DOUBLE_EQ(*report.metrics.f1, m.f1);
  // Deterministic.
  EXPECT_EQ(filter_report_to_json(report),
            filter_report_to_json(run_filter_experiment(default_guardrail_config(), testing::filter_suite())));
}

TEST(FilterExperiment, PersonalOnlySuite) {
  std::vector<LabeledQuestion> personal;
  for (const auto& q : testing::filter_suite()) {
    if (q.category == QuestionCategory::GeneralPersonal) personal.push_back(q);
  }
  const auto r = run_filter_experiment(default_guardrail_config(), personal);
  EXPECT_EQ(r.matrix.tp, 0);
  EXPECT_EQ(r.matrix.fn, 0);
  EXPECT_EQ(r.matrix.tn, static_cast<long long>(personal.size()) - r.matrix.fp);
}

TEST(FilterExperiment, SingleNormalStressQuestion) {
  const std::vector<LabeledQuestion> one = {
      {"rel16",
       "A structural member has cross-sectional area A = 2.4 in\xC2\xB2 and is subjected to axial force P = 15 kips. "
       "Calculate the normal stress in the member.",
       QuestionCategory::Relevant, true}};
  EXPECT_EQ(run_filter_experiment(default_guardrail_config(), one).matrix.tp, 1);
}

TEST(FilterExperiment, BlankQuestionsListed) {
  const std::vector<LabeledQuestion> suite = {{"ok", "torque", QuestionCategory::Relevant, true},
                                              {"b1", " ", QuestionCategory::Relevant, true},
                                              {"b2", "", QuestionCategory::GeneralPersonal, false}};
  try {
    run_filter_experiment(default_guardrail_config(), suite);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SuiteError);
    EXPECT_NE(std::string(e.what()).find("b1, b2"), std::string::npos);
  }
}

std::vector<EmbedderConfig> local_backend() { return {local_embedder_config(kDefaultLocalDim)}; }

TEST(RetrievalBench, TorsionFixturePerfectRetrieval) {
  const auto corpus = testing::torsion_chunks();
  const auto queries = testing::torsion_queries();
  ASSERT_EQ(queries.size(), 5u);
  BenchOptions opts;
  opts.latency_repetitions = 2;
  const auto report = run_retrieval_bench(corpus, queries, local_backend(), 5, opts);
  ASSERT_EQ(report.rows.size(), 1u);
  const auto& row = report.rows[0];
  ASSERT_FALSE(row.error.has_value());
  EXPECT_EQ(row.accuracy_at_k, 1.0);
  EXPECT_EQ(row.mrr, 1.0);
  EXPECT_EQ(row.ndcg_at_k, 1.0);
  EXPECT_GE(row.mean_query_latency_s, 0.0);
}

TEST(RetrievalBench, AccuracyMatchesLinearScanOracle) {
  const auto corpus = testing::torsion_chunks();
  const auto queries = testing::torsion_queries();
  std::vector<IndexEntry> entries;
  for (const auto& c : corpus) {
    entries.push_back({c.chunk_id, embed_local(c.body, kDefaultLocalModel, kDefaultLocalDim), c.metadata, c.body});
  }
  int hits = 0;
  for (const auto& q : queries) {
    const auto top = testing::brute_force_top_k(entries, embed_local(q.text, kDefaultLocalModel, kDefaultLocalDim), 5);
    bool found = false;
    for (const auto& [id, score] : top) {
      for (const auto& c : corpus) {
        if (c.chunk_id != id) continue;
        const auto doc = std::string(source_ref_doc(c.metadata.source_ref));
        found = found || std::find(q.relevant_docs.begin(), q.relevant_docs.end(), doc) != q.relevant_docs.end() ||
                std::find(q.relevant_chunk_ids.begin(), q.relevant_chunk_ids.end(), id) != q.relevant_chunk_ids.end();
      }
    }
    hits += found ? 1 : 0;
  }
  BenchOptions opts;
  opts.latency_repetitions = 1;
  const auto row = run_retrieval_bench(corpus, queries, local_backend(), 5, opts).rows[0];
  EXPECT_DOUBLE_EQ(row.accuracy_at_k, static_cast<double>(hits) / static_cast<double>(queries.size()));
}

TEST(RetrievalBench, DuplicateBackendGivesIdenticalRows) {
  BenchOptions opts;
  opts.latency_repetitions = 1;
  const auto b = local_embedder_config(256);
  const auto report = run_retrieval_bench(testing::torsion_chunks(), testing::torsion_queries(), {b, b}, 5, opts);
  ASSERT_EQ(report.rows.size(), 2u);
  const auto& x = report.rows[0];
  const auto& y = report.rows[1];
  EXPECT_EQ(x.accuracy_at_k, y.accuracy_at_k);
  EXPECT_EQ(x.mrr, y.mrr);
  EXPECT_EQ(x.ndcg_at_k, y.ndcg_at_k);
  EXPECT_EQ(x.avg_top3_similarity, y.avg_top3_similarity);
  EXPECT_EQ(x.storage_kb, y.storage_kb);
  EXPECT_EQ(x.first_relevant_ranks, y.first_relevant_ranks);
}

TEST(RetrievalBench, FailingBackendRecordedPerRow) {
  auto broken = local_embedder_config(64);
  broken.backend = EmbedBackend::Remote;
  broken.endpoint_url = "http://127.0.0.1:1/v1/embeddings";
  broken.api_key_env = "TUTORRAG_UNSET_FOR_BENCH";
  BenchOptions opts;
  opts.latency_repetitions = 1;
  const auto report =
      run_retrieval_bench(testing::torsion_chunks(), testing::torsion_queries(), {broken, local_embedder_config(64)}, 5, opts);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_TRUE(report.rows[0].error.has_value());
  EXPECT_FALSE(report.rows[1].error.has_value());
  const auto j = bench_report_to_json(report);
  EXPECT_TRUE(j["rows"][0].contains("error"));
  EXPECT_TRUE(j["rows"][1].contains("mrr"));
}

TEST(RetrievalBench, UnknownRelevantIdRejected) {
  BenchQuery q{"torsion", {"c-does-not-exist"}, {}};
  EXPECT_EQ(code_of([&] { run_retrieval_bench(testing::torsion_chunks(), {q}, local_backend(), 5); }),
            ErrorCode::InvalidArgument);
}

// The published 1024-dim row stores 138 KB for the full 20,760-character
// lecture. Scale that to this corpus and require the same order of size.
TEST(RetrievalBench, StorageWithinTwiceScaledReference) {
  std::size_t chars = 0;
  for (const auto& d : testing::torsion_documents()) chars += d.total_chars();
  const double expected_kb = 138.0 * static_cast<double>(chars) / 20760.0;
  BenchOptions opts;
  opts.latency_repetitions = 1;
  const auto row = run_retrieval_bench(testing::torsion_chunks(), testing::torsion_queries(), local_backend(), 5, opts).rows[0];
  EXPECT_EQ(row.dim, 1024);
  EXPECT_GE(row.storage_kb, expected_kb / 2.0) << "expected about " << expected_kb << " KB";
  EXPECT_LE(row.storage_kb, expected_kb * 2.0) << "expected about " << expected_kb << " KB";
}

TEST(RetrievalBench, ReportJsonRoundsLatency) {
  RetrievalBenchReport r;
  BenchRow row;
  row.model_id = "m";
  row.mean_query_latency_s = 0.123456;
  r.rows.push_back(row);
  EXPECT_DOUBLE_EQ(bench_report_to_json(r)["rows"][0]["mean_query_latency_s"].get<double>(), 0.123);
}

}  // namespace
}  // namespace tutorrag
