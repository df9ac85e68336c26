#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "gor/gat.hpp"
#include "gor/graph.hpp"
#include "gor/providers.hpp"

namespace gor {

struct RetrievalResult {
  std::string query;
  std::vector<std::size_t> node_indices;  // descending score, ties by node index
  std::vector<std::string> node_ids;
  std::vector<double> scores;
};

struct SummaryRecord {
  std::string query;
  std::string summary;
  RetrievalResult retrieval;
  std::vector<NodeKind> retrieved_kinds;
  std::string checkpoint_hash;
};

/// Cheap stable digest of the model parameters, used as cache/provenance key.
std::string model_digest(const GatModel& model);

/// Learned node embeddings with dropout disabled.
Mat node_embeddings_for_inference(const GraphOfRecords& g, const GatModel& model);

/// Memoizes inference embeddings per (graph, model) pair.
class InferenceCache {
public:
  const Mat& embeddings(const GraphOfRecords& g, const GatModel& model);
  std::size_t recompute_count() const { return recomputes_; }

private:
  std::unordered_map<std::string, Mat> cache_;
  std::size_t recomputes_ = 0;
};

/// Exact top-k nodes by dot(embed_query(query), learned embedding). With
/// `chunks_only`, response nodes are excluded (ablation switch).
RetrievalResult retrieve_top_k(const std::string& query, const GraphOfRecords& g,
                               const GatModel& model, const EmbeddingProvider& emb,
                               std::size_t k = 6, InferenceCache* cache = nullptr,
                               bool chunks_only = false);

/// Retrieval followed by greedy-decoded generation over the RAG prompt;
/// materials appear in descending score order.
SummaryRecord summarize(const std::string& query, const GraphOfRecords& g, const GatModel& model,
                        const LlmClient& llm, const EmbeddingProvider& emb, std::size_t k = 6,
                        InferenceCache* cache = nullptr);

std::string summary_record_to_json(const SummaryRecord& rec);

}  // namespace gor
