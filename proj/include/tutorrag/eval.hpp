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
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tutorrag/chunker.hpp"
#include "tutorrag/embed.hpp"
#include "tutorrag/guardrail.hpp"
#include "tutorrag/index.hpp"

namespace tutorrag {

struct ConfusionMatrix {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;
  long long tn = 0;

  long long total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct ClassificationMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
};

// Throws UndefinedMetric when any denominator is zero (including P + R = 0
// for F1) and InvalidArgument for negative counts.
ClassificationMetrics classification_metrics(const ConfusionMatrix& cm);

// Same formulas; undefined metrics come back empty instead of throwing.
struct PartialMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> accuracy;
};
PartialMetrics partial_classification_metrics(const ConfusionMatrix& cm);

// First-relevant rank per query, 0 when absent. Throws EmptyInput and
// InvalidArgument (negative rank).
double mrr(const std::vector<int>& first_relevant_ranks);

// Per query, the 1-based ranks at which relevant items were retrieved (0 for
// a relevant item that was not retrieved). Binary gain, log2(rank + 1)
// discount, ideal ranking packs all relevant items at the top. A query with
// no relevant items scores 0. Throws EmptyInput and InvalidArgument (k < 1).
double ndcg_at_k(const std::vector<std::vector<int>>& relevant_ranks, int k);

// Fraction of queries with a relevant item in the top k.
double accuracy_at_k(const std::vector<int>& first_relevant_ranks, int k);

enum class QuestionCategory { Relevant, EngineeringAdjacent, AcademicNonEngineering, GeneralPersonal };

std::string_view category_name(QuestionCategory c);
QuestionCategory parse_category(std::string_view name);

struct LabeledQuestion {
  std::string id;
  std::string text;
  QuestionCategory category = QuestionCategory::Relevant;
  bool expected_relevant = true;
};

// Accepts {"questions": [...]} or a bare array. Throws SchemaError, including
// when expected_relevant disagrees with the category.
std::vector<LabeledQuestion> parse_suite(const nlohmann::json& j);

struct QuestionOutcome {
  std::string id;
  QuestionCategory category = QuestionCategory::Relevant;
  bool expected_relevant = true;
  RelevanceVerdict verdict;
};

struct FilterReport {
  ConfusionMatrix matrix;
  PartialMetrics metrics;
  std::vector<QuestionOutcome> outcomes;
};

// Throws EmptyInput and SuiteError (lists ids of blank questions).
FilterReport run_filter_experiment(const GuardrailConfig& cfg,
                                   const std::vector<LabeledQuestion>& suite);
nlohmann::json filter_report_to_json(const FilterReport& report);

struct BenchQuery {
  std::string text;
  // Either list may be empty; a chunk counts as relevant if its id is listed
  // or its source document is.
  std::vector<std::string> relevant_chunk_ids;
  std::vector<std::string> relevant_docs;
};

std::vector<BenchQuery> parse_bench_queries(const nlohmann::json& j);

struct BenchRow {
  std::string model_id;
  int dim = 0;
  double accuracy_at_k = 0.0;
  double mrr = 0.0;
  double ndcg_at_k = 0.0;
  double avg_top3_similarity = 0.0;
  double mean_query_latency_s = 0.0;
  double storage_kb = 0.0;
  std::optional<std::string> error;
  // Per-query first-relevant rank, for inspection.
  std::vector<int> first_relevant_ranks;
};

struct RetrievalBenchReport {
  int k = 5;
  std::vector<BenchRow> rows;
};

struct BenchOptions {
  int latency_repetitions = 20;
  AnnParams index_params;
};

// Throws EmptyInput and InvalidArgument (unknown relevant id, k < 1).
// Backend failures land in BenchRow::error.
RetrievalBenchReport run_retrieval_bench(const std::vector<Chunk>& corpus,
                                         const std::vector<BenchQuery>& queries,
                                         const std::vector<EmbedderConfig>& backends, int k,
                                         const BenchOptions& options = {});
nlohmann::json bench_report_to_json(const RetrievalBenchReport& report);

}  // namespace tutorrag
