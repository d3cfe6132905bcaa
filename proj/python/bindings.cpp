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


// Thin pybind11 layer. Structured values cross the boundary as JSON text;
// the Python package turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "tutorrag/answer.hpp"
#include "tutorrag/chunker.hpp"
#include "tutorrag/config.hpp"
#include "tutorrag/embed.hpp"
#include "tutorrag/error.hpp"
#include "tutorrag/eval.hpp"
#include "tutorrag/guardrail.hpp"
#include "tutorrag/index.hpp"
#include "tutorrag/ingest.hpp"
#include "tutorrag/text_util.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace tutorrag {
namespace {

GuardrailConfig guardrail_config_for(const std::string& path) {
  return path.empty() ? default_guardrail_config() : load_guardrail_config(path);
}

std::string merge(const std::vector<std::string>& payloads, const std::string& doc_id,
                  const std::string& title, int pages) {
  std::vector<Extraction> ex;
  for (const auto& p : payloads) ex.push_back(parse_extraction(p));
  DocumentMeta meta;
  meta.doc_id = doc_id;
  meta.title = title;
  meta.pages = pages;
  return document_to_json(merge_documents(ex, meta)).dump();
}

std::string chunk(const std::string& document_json, int max_tokens, int overlap, bool boundaries) {
  ChunkPolicy p;
  p.max_chunk_tokens = max_tokens;
  p.overlap_tokens = overlap;
  p.respect_boundaries = boundaries;
  return chunks_to_json(chunk_document(document_from_json(json::parse(document_json)), p)).dump();
}

std::string results_json(const VectorIndex& idx, const std::vector<RetrievalResult>& rs) {
  json out = json::array();
  for (const auto& r : rs) {
    const auto* e = idx.find(r.chunk_id);
    out.push_back({{"rank", r.rank},
                   {"chunk_id", r.chunk_id},
                   {"score", r.score},
                   {"source_ref", r.source_ref},
                   {"body", e != nullptr ? e->body : ""}});
  }
  return out.dump();
}

VectorIndex build_local(const std::string& chunks_json, int dim, const std::string& mode) {
  const auto chunks = chunks_from_json(json::parse(chunks_json));
  const std::string model(kDefaultLocalModel);
  std::vector<IndexEntry> entries;
  for (const auto& c : chunks) {
    entries.push_back({c.chunk_id, embed_local(c.body, model, dim), c.metadata, c.body});
  }
  AnnParams params;
  params.mode = parse_search_mode(mode);
  return VectorIndex::build(std::move(entries), params);
}

std::string query_local(const VectorIndex& idx, const std::string& text, int k, bool exact) {
  const auto q = embed_local(text, idx.model_id(), idx.dim());
  return results_json(idx, exact ? idx.search_exact(q, k) : idx.search(q, k));
}

std::string citations(const std::string& text, const std::vector<std::pair<std::string, std::string>>& ctx) {
  std::vector<ContextChunk> context;
  int rank = 0;
  for (const auto& [id, ref] : ctx) context.push_back({{id, 0.0, ++rank, ref}, ""});
  return answer_to_json(validate_citations(text, context)).dump();
}

std::string metrics(long long tp, long long fp, long long fn, long long tn) {
  const auto m = partial_classification_metrics({tp, fp, fn, tn});
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"precision", opt(m.precision)},
              {"recall", opt(m.recall)},
              {"f1", opt(m.f1)},
              {"accuracy", opt(m.accuracy)}}
      .dump();
}

}  // namespace
}  // namespace tutorrag

PYBIND11_MODULE(_core, m) {
  using namespace tutorrag;
  m.doc() = "tutorrag native core";
  py::register_exception<Error>(m, "TutorragError", PyExc_RuntimeError);

  m.def("classify", [](const std::string& q, const std::string& config) {
    return verdict_to_json(Guardrail(guardrail_config_for(config)).classify(q)).dump();
  }, py::arg("question"), py::arg("config_path") = "");
  m.def("default_guardrail_toml", [] { return guardrail_config_to_toml(default_guardrail_config()); });
  m.def("filter_experiment", [](const std::string& suite_json, const std::string& config) {
    return filter_report_to_json(run_filter_experiment(guardrail_config_for(config),
                                                       parse_suite(json::parse(suite_json))))
        .dump();
  }, py::arg("suite_json"), py::arg("config_path") = "");
  m.def("classification_metrics", &metrics);
  m.def("merge", &merge, py::arg("payloads"), py::arg("doc_id"), py::arg("title"), py::arg("pages"));
  m.def("chunk", &chunk, py::arg("document_json"), py::arg("max_tokens") = 400,
        py::arg("overlap") = 50, py::arg("respect_boundaries") = true);
  m.def("embed_local", [](const std::string& text, int dim, const std::string& model) {
    return embed_local(text, model, dim).values;
  }, py::arg("text"), py::arg("dim") = kDefaultLocalDim, py::arg("model_id") = std::string(kDefaultLocalModel));
  m.def("validate_citations", &citations, py::arg("text"), py::arg("context"));

  py::class_<VectorIndex>(m, "Index")
      .def_static("build_local", &build_local, py::arg("chunks_json"), py::arg("dim") = kDefaultLocalDim,
                  py::arg("mode") = "exact")
      .def_static("load", [](const std::string& path) { return VectorIndex::load_file(path); })
      .def("save", [](const VectorIndex& idx, const std::string& path) { idx.save_file(path); })
      .def("query", &query_local, py::arg("text"), py::arg("k") = 5, py::arg("exact") = false)
      .def_property_readonly("dim", &VectorIndex::dim)
      .def_property_readonly("model_id", &VectorIndex::model_id)
      .def("__len__", &VectorIndex::size);
}
