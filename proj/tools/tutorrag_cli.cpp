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

// Command-line front end: ingest, chunk, index, guardrail, eval, serve.

#include <csignal>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tutorrag/chunker.hpp"
#include "tutorrag/config.hpp"
#include "tutorrag/embed.hpp"
#include "tutorrag/error.hpp"
#include "tutorrag/eval.hpp"
#include "tutorrag/guardrail.hpp"
#include "tutorrag/index.hpp"
#include "tutorrag/ingest.hpp"
#include "tutorrag/service.hpp"
#include "tutorrag/text_util.hpp"

namespace {

using nlohmann::json;
using namespace tutorrag;

json read_json(const std::string& path) {
  const std::string text = text::read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path + ": " + e.what());
  }
}

void emit(const json& j, const std::string& out) {
  const std::string text = j.dump(2) + "\n";
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    text::write_file_atomic(out, text);
  }
}

// Local-model indexes can be queried without any configuration.
EmbedderConfig embedder_for(const std::string& config_path, const VectorIndex* index) {
  if (!config_path.empty()) return load_embedder_config(config_path);
  if (index != nullptr) {
    if (index->model_id().rfind(kLocalModelPrefix, 0) != 0) {
      throw Error(ErrorCode::InvalidArgument, "index was built with remote model '" +
                                                  index->model_id() + "'; pass --embedder");
    }
    return local_embedder_config(index->dim(), index->model_id());
  }
  return local_embedder_config(kDefaultLocalDim);
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Course question-answering engine: ingest, index, filter, evaluate, serve"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Merge extractor payloads into a Document JSON");
  DocumentMeta meta;
  std::vector<std::string> payloads;
  std::string ingest_out;
  std::string difficulty;
  ingest->add_option("--doc-id", meta.doc_id, "Document id")->required();
  ingest->add_option("--title", meta.title, "Document title")->required();
  ingest->add_option("--pages", meta.pages, "Page count")->required()->check(CLI::PositiveNumber);
  ingest->add_option("--source-path", meta.source_path, "Original file path");
  ingest->add_option("--difficulty", difficulty, "foundational|intermediate|advanced");
  ingest->add_option("--prerequisite", meta.prerequisites, "Prerequisite topic (repeatable)");
  ingest->add_option("--out", ingest_out, "Output file (default stdout)");
  ingest->add_option("payloads", payloads, "Interchange JSON payloads")->required();

  // chunk
  auto* chunk = app.add_subcommand("chunk", "Split a merged Document into chunks");
  ChunkPolicy policy;
  bool no_boundaries = false;
  std::string chunk_in;
  std::string chunk_out;
  chunk->add_option("--max-tokens", policy.max_chunk_tokens, "Window size in tokens");
  chunk->add_option("--overlap", policy.overlap_tokens, "Overlap between windows");
  chunk->add_flag("--no-boundaries", no_boundaries, "Ignore headings and atomic blocks");
  chunk->add_option("--out", chunk_out, "Output file (default stdout)");
  chunk->add_option("document", chunk_in, "Merged Document JSON")->required();

  // index
  auto* index = app.add_subcommand("index", "Build or query a vector index");
  index->require_subcommand(1);
  auto* build = index->add_subcommand("build", "Embed chunks and write an index file");
  std::string build_chunks;
  std::string build_out;
  std::string build_embedder;
  std::string build_mode = "exact";
  AnnParams ann;
  build->add_option("--chunks", build_chunks, "Chunks JSON")->required();
  build->add_option("--out", build_out, "Index file")->required();
  build->add_option("--embedder", build_embedder, "Embedder TOML (default: local, dim 1024)");
  build->add_option("--mode", build_mode, "exact|approximate");
  build->add_option("--neighbors", ann.neighbors_per_node, "ANN graph degree");
  build->add_option("--search-breadth", ann.search_breadth, "ANN search candidate list");
  build->add_option("--construction-breadth", ann.construction_breadth, "ANN build candidate list");

  auto* query = index->add_subcommand("query", "Search an index");
  std::string query_idx;
  std::string query_embedder;
  std::string query_text;
  int query_k = 5;
  bool query_exact = false;
  query->add_option("--idx", query_idx, "Index file")->required();
  query->add_option("--k", query_k, "Results")->check(CLI::PositiveNumber);
  query->add_option("--embedder", query_embedder, "Embedder TOML (needed for remote models)");
  query->add_flag("--exact", query_exact, "Force an exact scan");
  query->add_option("question", query_text, "Query text")->required();

  // guardrail
  auto* guard = app.add_subcommand("guardrail", "Domain relevance classifier");
  guard->require_subcommand(1);
  auto* classify_cmd = guard->add_subcommand("classify", "Print the verdict for a question");
  std::string guard_config;
  std::string guard_question;
  classify_cmd->add_option("--config", guard_config, "Guardrail TOML (default: built-in)");
  classify_cmd->add_option("question", guard_question, "Question text")->required();
  auto* dump_cmd = guard->add_subcommand("dump-default", "Print the built-in config as TOML");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluation harness");
  eval->require_subcommand(1);
  auto* filter = eval->add_subcommand("filter", "Domain filtering experiment");
  std::string filter_config;
  std::string filter_suite;
  std::string filter_out;
  filter->add_option("--config", filter_config, "Guardrail TOML (default: built-in)");
  filter->add_option("--suite", filter_suite, "Labeled question suite JSON")->required();
  filter->add_option("--out", filter_out, "Report JSON (default stdout)");

  auto* bench = eval->add_subcommand("bench", "Retrieval benchmark");
  std::string bench_corpus;
  std::string bench_queries;
  std::string bench_backends;
  std::string bench_out;
  int bench_k = 5;
  int bench_reps = 20;
  bench->add_option("--corpus", bench_corpus, "Chunks JSON")->required();
  bench->add_option("--queries", bench_queries, "Queries JSON")->required();
  bench->add_option("--backends", bench_backends, "Backends TOML")->required();
  bench->add_option("--k", bench_k, "Cutoff")->check(CLI::PositiveNumber);
  bench->add_option("--reps", bench_reps, "Latency repetitions")->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_out, "Report JSON (default stdout)");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP JSON API");
  std::string serve_config;
  serve->add_option("--config", serve_config, "Service TOML")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      if (!difficulty.empty()) {
        (void)parse_difficulty(difficulty);
        meta.difficulty_tier = difficulty;
      }
      std::vector<Extraction> extractions;
      for (const auto& p : payloads) extractions.push_back(parse_extraction(text::read_file(p)));
      emit(document_to_json(merge_documents(extractions, meta)), ingest_out);
    } else if (*chunk) {
      policy.respect_boundaries = !no_boundaries;
      const Document doc = document_from_json(read_json(chunk_in));
      emit(chunks_to_json(chunk_document(doc, policy)), chunk_out);
    } else if (*build) {
      const auto chunks = chunks_from_json(read_json(build_chunks));
      if (chunks.empty()) throw Error(ErrorCode::EmptyIndex, "no chunks to index");
      const Embedder embedder(embedder_for(build_embedder, nullptr));
      std::vector<std::string> bodies;
      for (const auto& c : chunks) bodies.push_back(c.body);
      auto vectors = embedder.embed(bodies);
      std::vector<IndexEntry> entries;
      for (std::size_t i = 0; i < chunks.size(); ++i) {
        entries.push_back({chunks[i].chunk_id, std::move(vectors[i]), chunks[i].metadata, chunks[i].body});
      }
      ann.mode = parse_search_mode(build_mode);
      const auto idx = VectorIndex::build(std::move(entries), ann);
      idx.save_file(build_out);
      std::cout << json{{"entries", idx.size()}, {"dim", idx.dim()}, {"model_id", idx.model_id()},
                        {"mode", search_mode_name(ann.mode)}}
                       .dump()
                << "\n";
    } else if (*query) {
      const auto idx = VectorIndex::load_file(query_idx);
      const Embedder embedder(embedder_for(query_embedder, &idx));
      const auto q = embedder.embed_one(query_text);
      const auto results = query_exact ? idx.search_exact(q, query_k) : idx.search(q, query_k);
      json out = json::array();
      for (const auto& r : results) {
        const auto* e = idx.find(r.chunk_id);
        out.push_back({{"rank", r.rank},
                       {"chunk_id", r.chunk_id},
                       {"score", r.score},
                       {"source_ref", r.source_ref},
                       {"topic_domain", e != nullptr ? e->metadata.topic_domain : ""}});
      }
      emit(out, "");
    } else if (*classify_cmd) {
      const GuardrailConfig cfg =
          guard_config.empty() ? default_guardrail_config() : load_guardrail_config(guard_config);
      emit(verdict_to_json(Guardrail(cfg).classify(guard_question)), "");
    } else if (*dump_cmd) {
      std::cout << guardrail_config_to_toml(default_guardrail_config());
    } else if (*filter) {
      const GuardrailConfig cfg =
          filter_config.empty() ? default_guardrail_config() : load_guardrail_config(filter_config);
      const auto report = run_filter_experiment(cfg, parse_suite(read_json(filter_suite)));
      emit(filter_report_to_json(report), filter_out);
      const auto& m = report.matrix;
      std::cerr << "tp=" << m.tp << " fp=" << m.fp << " fn=" << m.fn << " tn=" << m.tn << "\n";
    } else if (*bench) {
      BenchOptions opts;
      opts.latency_repetitions = bench_reps;
      const auto report =
          run_retrieval_bench(chunks_from_json(read_json(bench_corpus)),
                              parse_bench_queries(read_json(bench_queries)),
                              load_backends(bench_backends), bench_k, opts);
      emit(bench_report_to_json(report), bench_out);
    } else if (*serve) {
      const ServiceConfig cfg = load_service_config(serve_config);
      Service service(cfg, make_pipeline(cfg));
      const int port = service.bind();
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::clog << json{{"event", "listening"}, {"port", port}}.dump() << std::endl;
      service.serve();
      g_service = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
