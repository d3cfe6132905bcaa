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

#include "tutorrag/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <unordered_set>

#include "tutorrag/error.hpp"
#include "tutorrag/text_util.hpp"

namespace tutorrag {

using nlohmann::json;

namespace {

void check_counts(const ConfusionMatrix& cm) {
  if (cm.tp < 0 || cm.fp < 0 || cm.fn < 0 || cm.tn < 0) {
    throw Error(ErrorCode::InvalidArgument, "confusion matrix counts must be non-negative");
  }
}

double as_d(long long v) { return static_cast<double>(v); }

}  // namespace

PartialMetrics partial_classification_metrics(const ConfusionMatrix& cm) {
  check_counts(cm);
  PartialMetrics m;
  if (cm.tp + cm.fp > 0) m.precision = as_d(cm.tp) / as_d(cm.tp + cm.fp);
  if (cm.tp + cm.fn > 0) m.recall = as_d(cm.tp) / as_d(cm.tp + cm.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  if (cm.total() > 0) m.accuracy = as_d(cm.tp + cm.tn) / as_d(cm.total());
  return m;
}

ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
  const auto p = partial_classification_metrics(cm);
  if (!p.accuracy) throw Error(ErrorCode::UndefinedMetric, "empty confusion matrix");
  if (!p.precision) throw Error(ErrorCode::UndefinedMetric, "precision undefined: tp + fp = 0");
  if (!p.recall) throw Error(ErrorCode::UndefinedMetric, "recall undefined: tp + fn = 0");
  if (!p.f1) throw Error(ErrorCode::UndefinedMetric, "f1 undefined: precision + recall = 0");
  return {*p.precision, *p.recall, *p.f1, *p.accuracy};
}

double mrr(const std::vector<int>& ranks) {
  if (ranks.empty()) throw Error(ErrorCode::EmptyInput, "no queries");
  double sum = 0.0;
  for (int r : ranks) {
    if (r < 0) throw Error(ErrorCode::InvalidArgument, "negative rank");
    if (r > 0) sum += 1.0 / static_cast<double>(r);
  }
  return sum / static_cast<double>(ranks.size());
}

double ndcg_at_k(const std::vector<std::vector<int>>& relevant_ranks, int k) {
  if (relevant_ranks.empty()) throw Error(ErrorCode::EmptyInput, "no queries");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  double total = 0.0;
  for (const auto& ranks : relevant_ranks) {
    if (ranks.empty()) continue;
    std::set<int> seen;
    double dcg = 0.0;
    for (int r : ranks) {
      if (r < 0) throw Error(ErrorCode::InvalidArgument, "negative rank");
      if (r >= 1 && r <= k && seen.insert(r).second) dcg += 1.0 / std::log2(r + 1.0);
    }
    double idcg = 0.0;
    const int ideal = std::min<int>(static_cast<int>(ranks.size()), k);
    for (int i = 1; i <= ideal; ++i) idcg += 1.0 / std::log2(i + 1.0);
    total += dcg / idcg;
  }
  return total / static_cast<double>(relevant_ranks.size());
}

double accuracy_at_k(const std::vector<int>& ranks, int k) {
  if (ranks.empty()) throw Error(ErrorCode::EmptyInput, "no queries");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](int r) { return r >= 1 && r <= k; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

std::string_view category_name(QuestionCategory c) {
  switch (c) {
    case QuestionCategory::Relevant: return "relevant";
    case QuestionCategory::EngineeringAdjacent: return "engineering_adjacent";
    case QuestionCategory::AcademicNonEngineering: return "academic_non_engineering";
    case QuestionCategory::GeneralPersonal: return "general_personal";
  }
  return "relevant";
}

QuestionCategory parse_category(std::string_view name) {
  for (auto c : {QuestionCategory::Relevant, QuestionCategory::EngineeringAdjacent,
                 QuestionCategory::AcademicNonEngineering, QuestionCategory::GeneralPersonal}) {
    if (category_name(c) == name) return c;
  }
  throw Error(ErrorCode::SchemaError, "unknown question category '" + std::string(name) + "'");
}

std::vector<LabeledQuestion> parse_suite(const json& j) {
  const json& list = j.is_object() && j.contains("questions") ? j["questions"] : j;
  if (!list.is_array()) throw Error(ErrorCode::SchemaError, "suite must be an array of questions");
  std::vector<LabeledQuestion> out;
  std::set<std::string> ids;
  for (const auto& q : list) {
    try {
      LabeledQuestion lq;
      lq.id = q.at("id").get<std::string>();
      lq.text = q.at("text").get<std::string>();
      lq.category = parse_category(q.at("category").get<std::string>());
      lq.expected_relevant = q.value("expected_relevant", lq.category == QuestionCategory::Relevant);
      if (lq.expected_relevant != (lq.category == QuestionCategory::Relevant)) {
        throw Error(ErrorCode::SchemaError,
                    "question " + lq.id + ": expected_relevant disagrees with category");
      }
      if (!ids.insert(lq.id).second) {
        throw Error(ErrorCode::SchemaError, "duplicate question id " + lq.id);
      }
      out.push_back(std::move(lq));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError, std::string("bad suite entry: ") + e.what());
    }
  }
  return out;
}

FilterReport run_filter_experiment(const GuardrailConfig& cfg,
                                   const std::vector<LabeledQuestion>& suite) {
  if (suite.empty()) throw Error(ErrorCode::EmptyInput, "suite is empty");
  std::vector<std::string> blank;
  for (const auto& q : suite) {
    if (text::trim(q.text).empty()) blank.push_back(q.id);
  }
  if (!blank.empty()) {
    std::string ids;
    for (const auto& id : blank) ids += (ids.empty() ? "" : ", ") + id;
    throw Error(ErrorCode::SuiteError, "empty questions: " + ids);
  }

  const Guardrail guard(cfg);
  FilterReport report;
  for (const auto& q : suite) {
    QuestionOutcome o{q.id, q.category, q.expected_relevant, guard.classify(q.text)};
    auto& m = report.matrix;
    if (o.verdict.relevant) {
      (q.expected_relevant ? m.tp : m.fp) += 1;
    } else {
      (q.expected_relevant ? m.fn : m.tn) += 1;
    }
    report.outcomes.push_back(std::move(o));
  }
  report.metrics = partial_classification_metrics(report.matrix);
  return report;
}

json filter_report_to_json(const FilterReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json outcomes = json::array();
  for (const auto& o : r.outcomes) {
    outcomes.push_back({{"id", o.id},
                        {"category", category_name(o.category)},
                        {"expected_relevant", o.expected_relevant},
                        {"verdict", verdict_to_json(o.verdict)}});
  }
  return {{"confusion_matrix",
           {{"tp", r.matrix.tp}, {"fp", r.matrix.fp}, {"fn", r.matrix.fn}, {"tn", r.matrix.tn}}},
          {"metrics",
           {{"precision", opt(r.metrics.precision)},
            {"recall", opt(r.metrics.recall)},
            {"f1", opt(r.metrics.f1)},
            {"accuracy", opt(r.metrics.accuracy)}}},
          {"questions", outcomes}};
}

std::vector<BenchQuery> parse_bench_queries(const json& j) {
  const json& list = j.is_object() && j.contains("queries") ? j["queries"] : j;
  if (!list.is_array()) throw Error(ErrorCode::SchemaError, "queries must be an array");
  std::vector<BenchQuery> out;
  for (const auto& q : list) {
    try {
      BenchQuery bq;
      bq.text = q.at("text").get<std::string>();
      bq.relevant_chunk_ids = q.value("relevant_chunk_ids", std::vector<std::string>{});
      bq.relevant_docs = q.value("relevant_docs", std::vector<std::string>{});
      if (bq.relevant_chunk_ids.empty() && bq.relevant_docs.empty()) {
        throw Error(ErrorCode::SchemaError, "query '" + bq.text + "' lists nothing relevant");
      }
      out.push_back(std::move(bq));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::SchemaError, std::string("bad query entry: ") + e.what());
    }
  }
  return out;
}

namespace {

// Ids of every corpus chunk that counts as relevant for the query.
std::unordered_set<std::string> relevant_set(const BenchQuery& q, const std::vector<Chunk>& corpus) {
  std::unordered_set<std::string> ids;
  std::unordered_set<std::string> docs(q.relevant_docs.begin(), q.relevant_docs.end());
  std::unordered_set<std::string> listed(q.relevant_chunk_ids.begin(), q.relevant_chunk_ids.end());
  for (const auto& c : corpus) {
    if (listed.count(c.chunk_id) != 0 ||
        docs.count(std::string(source_ref_doc(c.metadata.source_ref))) != 0) {
      ids.insert(c.chunk_id);
    }
  }
  return ids;
}

BenchRow bench_backend(const std::vector<Chunk>& corpus, const std::vector<BenchQuery>& queries,
                       const std::vector<std::unordered_set<std::string>>& relevant,
                       const EmbedderConfig& backend, int k, const BenchOptions& options) {
  BenchRow row;
  row.model_id = backend.model_id;
  row.dim = backend.dim;
  Embedder embedder(backend);

  std::vector<std::string> bodies;
  bodies.reserve(corpus.size());
  for (const auto& c : corpus) bodies.push_back(c.body);
  auto vectors = embedder.embed(bodies);
  std::vector<IndexEntry> entries;
  entries.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    entries.push_back({corpus[i].chunk_id, std::move(vectors[i]), corpus[i].metadata, corpus[i].body});
  }
  const auto index = VectorIndex::build(std::move(entries), options.index_params);
  row.storage_kb = static_cast<double>(index.save().size()) / 1024.0;

  std::vector<EmbeddingVector> qvecs;
  std::vector<std::vector<RetrievalResult>> results;
  for (const auto& q : queries) {
    qvecs.push_back(embedder.embed_one(q.text));
    results.push_back(index.search(qvecs.back(), std::max(k, 3)));
  }

  std::vector<std::vector<int>> ndcg_input;
  double top3_sum = 0.0;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    int first = 0;
    std::vector<int> ranks;
    for (const auto& r : results[qi]) {
      if (r.rank > k) break;
      if (relevant[qi].count(r.chunk_id) != 0) {
        ranks.push_back(r.rank);
        if (first == 0) first = r.rank;
      }
    }
    // Relevant items outside the top k still count toward the ideal DCG.
    ranks.resize(relevant[qi].size(), 0);
    row.first_relevant_ranks.push_back(first);
    ndcg_input.push_back(std::move(ranks));

    const std::size_t top = std::min<std::size_t>(3, results[qi].size());
    double s = 0.0;
    for (std::size_t i = 0; i < top; ++i) s += results[qi][i].score;
    top3_sum += top > 0 ? s / static_cast<double>(top) : 0.0;
  }
  row.accuracy_at_k = accuracy_at_k(row.first_relevant_ranks, k);
  row.mrr = mrr(row.first_relevant_ranks);
  row.ndcg_at_k = ndcg_at_k(ndcg_input, k);
  row.avg_top3_similarity = top3_sum / static_cast<double>(queries.size());

  // One warmup pass, then timed repetitions of embed + search per query.
  for (const auto& q : queries) (void)index.search(embedder.embed_one(q.text), k);
  const int reps = std::max(1, options.latency_repetitions);
  const auto start = std::chrono::steady_clock::now();
  for (int rep = 0; rep < reps; ++rep) {
    for (const auto& q : queries) (void)index.search(embedder.embed_one(q.text), k);
  }
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  row.mean_query_latency_s = elapsed.count() / static_cast<double>(reps * queries.size());
  return row;
}

}  // namespace

RetrievalBenchReport run_retrieval_bench(const std::vector<Chunk>& corpus,
                                         const std::vector<BenchQuery>& queries,
                                         const std::vector<EmbedderConfig>& backends, int k,
                                         const BenchOptions& options) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyInput, "corpus is empty");
  if (queries.empty()) throw Error(ErrorCode::EmptyInput, "no queries");
  if (backends.empty()) throw Error(ErrorCode::EmptyInput, "no backends");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");

  std::unordered_set<std::string> known_ids;
  std::unordered_set<std::string> known_docs;
  for (const auto& c : corpus) {
    known_ids.insert(c.chunk_id);
    known_docs.insert(std::string(source_ref_doc(c.metadata.source_ref)));
  }
  std::vector<std::unordered_set<std::string>> relevant;
  for (const auto& q : queries) {
    for (const auto& id : q.relevant_chunk_ids) {
      if (known_ids.count(id) == 0) {
        throw Error(ErrorCode::InvalidArgument, "relevant chunk " + id + " is not in the corpus");
      }
    }
    for (const auto& d : q.relevant_docs) {
      if (known_docs.count(d) == 0) {
        throw Error(ErrorCode::InvalidArgument, "relevant doc " + d + " is not in the corpus");
      }
    }
    relevant.push_back(relevant_set(q, corpus));
  }

  RetrievalBenchReport report;
  report.k = k;
  for (const auto& backend : backends) {
    try {
      report.rows.push_back(bench_backend(corpus, queries, relevant, backend, k, options));
    } catch (const std::exception& e) {
      BenchRow row;
      row.model_id = backend.model_id;
      row.dim = backend.dim;
      row.error = e.what();
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

json bench_report_to_json(const RetrievalBenchReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row = {{"model_id", r.model_id}, {"dim", r.dim}};
    if (r.error) {
      row["error"] = *r.error;
    } else {
      row["accuracy_at_k"] = r.accuracy_at_k;
      row["mrr"] = r.mrr;
      row["ndcg_at_k"] = r.ndcg_at_k;
      row["avg_top3_similarity"] = r.avg_top3_similarity;
      row["mean_query_latency_s"] = std::round(r.mean_query_latency_s * 1000.0) / 1000.0;
      row["storage_kb"] = r.storage_kb;
      row["first_relevant_ranks"] = r.first_relevant_ranks;
    }
    rows.push_back(std::move(row));
  }
  return {{"k", report.k}, {"rows", rows}};
}

}  // namespace tutorrag
