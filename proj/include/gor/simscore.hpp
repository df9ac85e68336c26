#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gor/graph.hpp"
#include "gor/providers.hpp"

namespace gor {

/// All node indices of one graph ordered by greedy-matching F1 against a
/// training pair's label text. Position 0 is the positive.
struct RankingList {
  std::size_t pair_index = 0;
  std::vector<std::size_t> ordered_nodes;  // permutation of node indices
  std::vector<double> scores;              // aligned, non-increasing
};

/// Greedy token-matching similarity: recall is the mean over reference tokens
/// of the max cosine to any candidate token, precision symmetric, F1 harmonic.
double bertscore_f1(const std::string& candidate, const std::string& reference,
                    const TokenEmbedder& embedder);

/// Ranks every node of the graph against the given label text.
RankingList rank_nodes_by_label(const GraphOfRecords& g, std::size_t pair_index,
                                const std::string& label_text, const TokenEmbedder& embedder);

/// Ranks every node against training pair `pair_index`'s label chunk text.
RankingList rank_nodes(const GraphOfRecords& g, std::size_t pair_index,
                       const TokenEmbedder& embedder);

/// One ranking list per training pair, computed ahead of training so the
/// token embedder is never called inside the training loop.
std::vector<RankingList> precompute_rankings(const GraphOfRecords& g,
                                             const TokenEmbedder& embedder);

/// As above but with explicit label texts (supervised mode replaces the chunk
/// labels with the document's reference summary).
std::vector<RankingList> precompute_rankings_for_labels(const GraphOfRecords& g,
                                                        const std::vector<std::string>& labels,
                                                        const TokenEmbedder& embedder);

std::string rankings_to_json(const GraphOfRecords& g, const std::vector<RankingList>& rankings,
                             const std::string& config_hash = "");
std::vector<RankingList> rankings_from_json(const GraphOfRecords& g,
                                            const std::string& json_text,
                                            std::string* config_hash = nullptr);

void save_rankings(const GraphOfRecords& g, const std::vector<RankingList>& rankings,
                   const std::string& path, const std::string& config_hash = "");
std::vector<RankingList> load_rankings(const GraphOfRecords& g, const std::string& path,
                                       std::string* config_hash = nullptr);

}  // namespace gor
