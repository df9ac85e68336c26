#include "gor/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>

#include "gor/util.hpp"
#include "json.hpp"

namespace gor {

namespace {

RougeScore prf(double matches, double cand_total, double ref_total) {
  RougeScore s;
  if (cand_total > 0.0) s.precision = matches / cand_total;
  if (ref_total > 0.0) s.recall = matches / ref_total;
  if (s.precision + s.recall > 0.0) {
    s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return s;
}

std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& toks,
                                                     int n) {
  std::map<std::vector<std::string>, int> counts;
  if (static_cast<int>(toks.size()) < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)] += 1;
  }
  return counts;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace

std::vector<std::string> eval_tokens(const std::string& text) {
  std::vector<std::string> toks;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      toks.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) toks.push_back(std::move(cur));
  return toks;
}

RougeScore rouge_n(const std::string& candidate, const std::string& reference, int n) {
  if (n != 1 && n != 2) throw GorError("rouge", "rouge_n supports n in {1, 2}");
  const auto cand = eval_tokens(candidate);
  const auto ref = eval_tokens(reference);
  if (static_cast<int>(ref.size()) < n || static_cast<int>(cand.size()) < n) {
    RougeScore s;
    s.degenerate = true;
    return s;
  }
  const auto cand_counts = ngram_counts(cand, n);
  const auto ref_counts = ngram_counts(ref, n);
  double matches = 0.0, cand_total = 0.0, ref_total = 0.0;
  for (const auto& [g, c] : cand_counts) cand_total += c;
  for (const auto& [g, c] : ref_counts) ref_total += c;
  for (const auto& [g, c] : cand_counts) {
    auto it = ref_counts.find(g);
    if (it != ref_counts.end()) matches += std::min(c, it->second);
  }
  return prf(matches, cand_total, ref_total);
}

RougeScore rouge_l(const std::string& candidate, const std::string& reference) {
  const auto cand = eval_tokens(candidate);
  const auto ref = eval_tokens(reference);
  if (cand.empty() || ref.empty()) {
    RougeScore s;
    s.degenerate = true;
    return s;
  }
  const double lcs = static_cast<double>(lcs_length(cand, ref));
  return prf(lcs, static_cast<double>(cand.size()), static_cast<double>(ref.size()));
}

EvalReport evaluate(const std::vector<std::pair<std::string, std::string>>& predictions,
                    const std::vector<Document>& docs) {
  EvalReport report;
  std::map<std::string, const Document*> by_id;
  for (const auto& d : docs) by_id[d.doc_id] = &d;

  for (const auto& [doc_id, summary] : predictions) {
    auto it = by_id.find(doc_id);
    if (it == by_id.end() || it->second->reference_summaries.empty()) {
      throw GorError("eval", "no reference summary for doc " + doc_id);
    }
    DocScores ds;
    ds.doc_id = doc_id;
    for (const auto& ref : it->second->reference_summaries) {
      ds.rouge_l = std::max(ds.rouge_l, rouge_l(summary, ref).f1);
      ds.rouge_1 = std::max(ds.rouge_1, rouge_n(summary, ref, 1).f1);
      ds.rouge_2 = std::max(ds.rouge_2, rouge_n(summary, ref, 2).f1);
    }
    report.per_doc.push_back(ds);
  }
  report.n_docs = report.per_doc.size();
  if (report.n_docs == 0) throw GorError("eval", "no predictions to evaluate");
  for (const auto& ds : report.per_doc) {
    report.rouge_l += ds.rouge_l;
    report.rouge_1 += ds.rouge_1;
    report.rouge_2 += ds.rouge_2;
  }
  report.rouge_l /= static_cast<double>(report.n_docs);
  report.rouge_1 /= static_cast<double>(report.n_docs);
  report.rouge_2 /= static_cast<double>(report.n_docs);
  return report;
}

std::string report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["n_docs"] = r.n_docs;
  j["rouge_l"] = r.rouge_l;
  j["rouge_1"] = r.rouge_1;
  j["rouge_2"] = r.rouge_2;
  j["per_doc"] = nlohmann::json::array();
  for (const auto& d : r.per_doc) {
    j["per_doc"].push_back({{"doc_id", d.doc_id},
                            {"rouge_l", d.rouge_l},
                            {"rouge_1", d.rouge_1},
                            {"rouge_2", d.rouge_2}});
  }
  return j.dump(2) + "\n";
}

std::string render_report(const EvalReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "n_docs=%zu  R-L %.1f  R-1 %.1f  R-2 %.1f", r.n_docs,
                100.0 * r.rouge_l, 100.0 * r.rouge_1, 100.0 * r.rouge_2);
  return buf;
}

}  // namespace gor
