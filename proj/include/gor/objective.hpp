#pragma once

#include <cstdint>
#include <vector>

#include "gor/providers.hpp"
#include "gor/simscore.hpp"
#include "gor/tensor.hpp"

namespace gor {

struct LossConfig {
  double tau = 0.07;
  double alpha = 0.9;                    // weight of the ranking loss
  std::size_t max_rank_pairs = 256;      // sampled extra pairs above the threshold
  std::size_t full_pair_threshold = 64;  // full O(n^2) pair enumeration up to this size
  bool use_in_batch_negatives = true;
  bool in_batch_all_nodes = false;  // negatives from other graphs: positives only vs all nodes
  std::uint64_t seed = 0;           // pair subsampling
};

/// One training pair inside a batch: a frozen query embedding, its
/// precomputed ranking list, and the graph it belongs to.
struct BatchItem {
  std::size_t graph_index = 0;
  Vec q_emb;
  const RankingList* ranking = nullptr;
};

struct LossReport {
  double l_cl = 0.0;
  double l_rank = 0.0;
  double total = 0.0;
  double entropy = 0.0;  // mean similarity-distribution entropy, diagnostic
};

/// s(q, h) = exp(q . h / tau). Losses use log_sim_s to stay in log space.
double sim_s(const Vec& q_emb, const Vec& h, double tau);
double log_sim_s(const Vec& q_emb, const Vec& h, double tau);

/// InfoNCE over each item's own-graph nodes, extended with negatives from the
/// other graphs in the batch. `grads`, when non-null, must hold one zeroed
/// matrix per graph (shaped like its node embeddings); gradients accumulate.
double contrastive_loss(const std::vector<BatchItem>& batch,
                        const std::vector<const Mat*>& node_embs, const LossConfig& config,
                        std::vector<Mat>* grads = nullptr);

/// Softplus-of-margin penalty over ordered pairs of each item's ranking list.
double ranking_loss(const std::vector<BatchItem>& batch,
                    const std::vector<const Mat*>& node_embs, const LossConfig& config,
                    std::vector<Mat>* grads = nullptr);

/// L = L_CL + alpha * L_RANK, with gradient additivity.
LossReport total_loss(const std::vector<BatchItem>& batch,
                      const std::vector<const Mat*>& node_embs, const LossConfig& config,
                      std::vector<Mat>* grads = nullptr);

/// Shannon entropy (nats) of softmax(q . h_v / tau) over all nodes.
double similarity_entropy(const Vec& q_emb, const Mat& node_embs, double tau);

}  // namespace gor
