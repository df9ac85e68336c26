#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gor/gradcheck.hpp"
#include "gor/inference.hpp"
#include "gor/objective.hpp"
#include "gor/pipeline.hpp"
#include "gor/rouge.hpp"
#include "gor/simscore.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_gor, m) {
  m.doc() = "Graph-of-records core: chunking, graph construction, GAT training, "
            "retrieval and evaluation";

  m.def(
      "tokenize",
      [](const std::string& text) {
        const gor::TokenSeq seq = gor::tokenize(text);
        return std::make_pair(seq.tokens, seq.offsets);
      },
      py::arg("text"));

  m.def(
      "split_chunks",
      [](const std::string& doc_id, const std::string& text, std::size_t chunk_size,
         std::size_t overlap) {
        gor::Document doc{doc_id, text, {}};
        std::vector<std::tuple<std::string, std::size_t, std::size_t, std::string>> out;
        for (const auto& ch : gor::split_chunks(doc, chunk_size, overlap)) {
          out.emplace_back(ch.chunk_id, ch.token_begin, ch.token_end, ch.text);
        }
        return out;
      },
      py::arg("doc_id"), py::arg("text"), py::arg("chunk_size") = 256, py::arg("overlap") = 32);

  m.def(
      "bertscore_f1",
      [](const std::string& candidate, const std::string& reference, std::size_t token_dim) {
        const auto embedder = gor::TokenEmbedder::deterministic(token_dim);
        return gor::bertscore_f1(candidate, reference, embedder);
      },
      py::arg("candidate"), py::arg("reference"), py::arg("token_dim") = 64);

  m.def(
      "rouge_scores",
      [](const std::string& candidate, const std::string& reference) {
        const auto r1 = gor::rouge_n(candidate, reference, 1);
        const auto r2 = gor::rouge_n(candidate, reference, 2);
        const auto rl = gor::rouge_l(candidate, reference);
        py::dict d;
        d["rouge_1"] = r1.f1;
        d["rouge_2"] = r2.f1;
        d["rouge_l"] = rl.f1;
        return d;
      },
      py::arg("candidate"), py::arg("reference"));

  m.def("lr_at", &gor::lr_at, py::arg("epoch"), py::arg("total_epochs") = 150,
        py::arg("base_lr") = 1e-3);

  m.def(
      "grad_check", [](std::uint64_t seed) { return gor::grad_check(seed); }, py::arg("seed"));

  m.def(
      "run_pipeline",
      [](const std::string& config_json) {
        const gor::PipelineConfig cfg = gor::config_from_json(config_json);
        const gor::EvalResult res = gor::run_pipeline(cfg);
        py::dict d;
        d["rouge_l"] = res.report.rouge_l;
        d["rouge_1"] = res.report.rouge_1;
        d["rouge_2"] = res.report.rouge_2;
        d["n_docs"] = res.report.n_docs;
        d["report_path"] = res.report_path;
        return d;
      },
      py::arg("config_json"),
      "Full offline pipeline (build, train, summarize, eval) from a config JSON string.");
}
