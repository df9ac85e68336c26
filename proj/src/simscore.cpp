#include "gor/simscore.hpp"

#include <algorithm>
#include <numeric>

#include "gor/util.hpp"
#include "json.hpp"

namespace gor {

namespace {

double greedy_recall(const std::vector<Vec>& ref, const std::vector<Vec>& cand) {
  double sum = 0.0;
  for (const auto& r : ref) {
    double best = -1.0;
    for (const auto& c : cand) {
      const double cos = std::inner_product(r.begin(), r.end(), c.begin(), 0.0);
      best = std::max(best, cos);
    }
    sum += best;
  }
  return sum / static_cast<double>(ref.size());
}

}  // namespace

double bertscore_f1(const std::string& candidate, const std::string& reference,
                    const TokenEmbedder& embedder) {
  const std::vector<Vec> cand = embedder.embed_tokens(candidate);
  const std::vector<Vec> ref = embedder.embed_tokens(reference);
  if (cand.empty() || ref.empty()) {
    throw GorError("simscore", "bertscore_f1 requires at least one token on each side");
  }
  const double recall = greedy_recall(ref, cand);
  const double precision = greedy_recall(cand, ref);
  // anti-correlated token sets floor at zero rather than producing a
  // meaningless negative (or sign-flipped) harmonic mean
  if (precision <= 0.0 || recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

RankingList rank_nodes_by_label(const GraphOfRecords& g, std::size_t pair_index,
                                const std::string& label_text, const TokenEmbedder& embedder) {
  RankingList rl;
  rl.pair_index = pair_index;
  std::vector<double> score(g.nodes.size());
  const std::vector<Vec> label_tokens = embedder.embed_tokens(label_text);
  if (label_tokens.empty()) throw GorError("simscore", "empty label text");
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    try {
      score[i] = bertscore_f1(g.nodes[i].text, label_text, embedder);
    } catch (const GorError& e) {
      throw GorError(e.category(), "node " + g.nodes[i].node_id + ": " + std::string(e.what()));
    }
  }
  rl.ordered_nodes.resize(g.nodes.size());
  std::iota(rl.ordered_nodes.begin(), rl.ordered_nodes.end(), 0);
  std::stable_sort(rl.ordered_nodes.begin(), rl.ordered_nodes.end(),
                   [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  rl.scores.reserve(g.nodes.size());
  for (std::size_t idx : rl.ordered_nodes) rl.scores.push_back(score[idx]);
  return rl;
}

RankingList rank_nodes(const GraphOfRecords& g, std::size_t pair_index,
                       const TokenEmbedder& embedder) {
  if (pair_index >= g.training_pairs.size()) {
    throw GorError("simscore", "pair_index out of range");
  }
  const std::string& label_id = g.training_pairs[pair_index].label_chunk_id;
  const Node& label = g.nodes[g.node_index(label_id)];
  return rank_nodes_by_label(g, pair_index, label.text, embedder);
}

std::vector<RankingList> precompute_rankings(const GraphOfRecords& g,
                                             const TokenEmbedder& embedder) {
  std::vector<RankingList> out;
  out.reserve(g.training_pairs.size());
  for (std::size_t i = 0; i < g.training_pairs.size(); ++i) {
    out.push_back(rank_nodes(g, i, embedder));
  }
  return out;
}

std::vector<RankingList> precompute_rankings_for_labels(const GraphOfRecords& g,
                                                        const std::vector<std::string>& labels,
                                                        const TokenEmbedder& embedder) {
  std::vector<RankingList> out;
  out.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.push_back(rank_nodes_by_label(g, i, labels[i], embedder));
  }
  return out;
}

std::string rankings_to_json(const GraphOfRecords& g, const std::vector<RankingList>& rankings,
                             const std::string& config_hash) {
  nlohmann::json j;
  j["doc_id"] = g.doc_id;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  j["rankings"] = nlohmann::json::array();
  for (const auto& rl : rankings) {
    nlohmann::json rj;
    rj["pair_index"] = rl.pair_index;
    rj["ordered_nodes"] = nlohmann::json::array();
    for (std::size_t idx : rl.ordered_nodes) rj["ordered_nodes"].push_back(g.nodes[idx].node_id);
    rj["scores"] = rl.scores;
    j["rankings"].push_back(std::move(rj));
  }
  return j.dump(2) + "\n";
}

std::vector<RankingList> rankings_from_json(const GraphOfRecords& g,
                                            const std::string& json_text,
                                            std::string* config_hash) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw GorError("parse", std::string("rankings file: ") + e.what());
  }
  if (j.at("doc_id").get<std::string>() != g.doc_id) {
    throw GorError("simscore", "rankings file doc_id does not match graph " + g.doc_id);
  }
  if (config_hash) *config_hash = j.value("config_hash", "");
  std::vector<RankingList> out;
  for (const auto& rj : j.at("rankings")) {
    RankingList rl;
    rl.pair_index = rj.at("pair_index").get<std::size_t>();
    for (const auto& id : rj.at("ordered_nodes")) {
      rl.ordered_nodes.push_back(g.node_index(id.get<std::string>()));
    }
    rl.scores = rj.at("scores").get<std::vector<double>>();
    if (rl.scores.size() != rl.ordered_nodes.size()) {
      throw GorError("parse", "rankings file: scores/nodes length mismatch");
    }
    out.push_back(std::move(rl));
  }
  return out;
}

void save_rankings(const GraphOfRecords& g, const std::vector<RankingList>& rankings,
                   const std::string& path, const std::string& config_hash) {
  write_file(path, rankings_to_json(g, rankings, config_hash));
}

std::vector<RankingList> load_rankings(const GraphOfRecords& g, const std::string& path,
                                       std::string* config_hash) {
  return rankings_from_json(g, read_file(path), config_hash);
}

}  // namespace gor
