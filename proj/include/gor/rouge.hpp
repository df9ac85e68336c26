#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gor/corpus.hpp"

namespace gor {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // a side had too few tokens for the metric
};

/// Metric tokenization: lowercase, split on non-alphanumeric characters.
std::vector<std::string> eval_tokens(const std::string& text);

/// Clipped n-gram overlap, n in {1, 2}.
RougeScore rouge_n(const std::string& candidate, const std::string& reference, int n);

/// Whole-text LCS variant (sentence-agnostic), F-score with beta = 1.
RougeScore rouge_l(const std::string& candidate, const std::string& reference);

struct DocScores {
  std::string doc_id;
  double rouge_l = 0.0;
  double rouge_1 = 0.0;
  double rouge_2 = 0.0;
};

struct EvalReport {
  std::size_t n_docs = 0;
  double rouge_l = 0.0;  // mean over docs of max-over-references F1
  double rouge_1 = 0.0;
  double rouge_2 = 0.0;
  std::vector<DocScores> per_doc;
};

/// Per document: max F1 over that document's references for each metric, then
/// the mean over documents.
EvalReport evaluate(const std::vector<std::pair<std::string, std::string>>& predictions,
                    const std::vector<Document>& docs);

std::string report_to_json(const EvalReport& r);

/// Scores scaled x100 with one decimal.
std::string render_report(const EvalReport& r);

}  // namespace gor
