#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gor/gat.hpp"
#include "gor/objective.hpp"
#include "gor/simscore.hpp"

namespace gor {

inline constexpr const char* kGlobalSummaryQuery = "Summarize the whole document.";

enum class TrainMode { SelfSupervised, Supervised };

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t epochs = 150;      // schedule length; the LR decays to zero here
  std::size_t stop_epoch = 0;    // pause after this many epochs (0: run to `epochs`)
  double base_lr = 1e-3;
  GatConfig gat;
  LossConfig loss;
  TrainMode mode = TrainMode::SelfSupervised;
  std::uint64_t seed = 7;
  std::size_t checkpoint_interval = 0;  // 0: final checkpoint only
  std::string out_dir;                  // empty: keep checkpoints in memory only
  std::string log_path;                 // empty: no JSON-lines step log
  std::string config_hash;              // embedded into artifacts
};

struct StepLog {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  double l_cl = 0.0;
  double l_rank = 0.0;
  double total = 0.0;
  double entropy = 0.0;
  double lr = 0.0;
};

struct Checkpoint {
  GatModel model;
  AdamState adam;
  std::size_t epoch = 0;  // completed epochs
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<StepLog> trace;
};

/// Supervised-mode training pair: the global summarization query paired with
/// the document's reference summary as the ranking label.
struct SupervisedPair {
  std::string query;
  std::string label_text;
};

std::vector<SupervisedPair> build_supervised_pairs(const GraphOfRecords& g, const Document& doc,
                                                   std::size_t n_copies);

/// Graph-level mini-batch training. `queries[g]` and `rankings[g]` must align
/// with each other; for self-supervised mode they come from the graph's
/// training pairs. The query encoder is frozen: embeddings are computed once
/// before epoch 1. `resume` continues an earlier run bit-exactly.
Checkpoint train(const std::vector<GraphOfRecords>& graphs,
                 const std::vector<std::vector<std::string>>& queries,
                 const std::vector<std::vector<RankingList>>& rankings,
                 const TrainConfig& config, const EmbeddingProvider& emb,
                 const Checkpoint* resume = nullptr);

/// Convenience for self-supervised mode: queries taken from training pairs.
Checkpoint train(const std::vector<GraphOfRecords>& graphs,
                 const std::vector<std::vector<RankingList>>& rankings,
                 const TrainConfig& config, const EmbeddingProvider& emb,
                 const Checkpoint* resume = nullptr);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gor
