#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gor/corpus.hpp"
#include "gor/providers.hpp"

namespace gor {

enum class NodeKind { Chunk, Response };

struct Node {
  std::string node_id;
  NodeKind kind = NodeKind::Chunk;
  std::string text;
  Vec init_embedding;     // embed_context(text)
  std::size_t round = 0;  // 0 for chunks, i for the response generated in round i
};

struct Edge {
  std::size_t src = 0;  // node indices
  std::size_t dst = 0;
};

struct TrainingPair {
  std::string query;
  std::string label_chunk_id;
};

/// Nodes (document chunks + LLM responses), directed provenance edges
/// (retrieved source -> generated response, plus self-loops on isolated
/// nodes), and the self-supervised corpus of (query, source chunk) pairs.
struct GraphOfRecords {
  std::string doc_id;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  std::vector<TrainingPair> training_pairs;

  std::size_t node_index(const std::string& node_id) const;
};

/// Top-k candidate indices by descending dot(embed_query(query), init_embedding),
/// ties broken by ascending candidate position.
std::vector<std::size_t> retrieve_corpus(const std::string& query,
                                         const std::vector<Node>& candidates, std::size_t k,
                                         const EmbeddingProvider& emb);

struct BuildOptions {
  std::size_t n_queries = 30;
  std::size_t k = 6;
  std::uint64_t seed = 0;
  double sim_temperature = 0.5;
  std::size_t max_dedup_attempts = 10;
};

/// Runs `n_queries` retrieve-then-generate rounds over the chunks, wiring each
/// retrieved node to the response it produced and growing the retrieval corpus
/// with prior responses.
GraphOfRecords build_graph(const std::vector<Chunk>& chunks, const BuildOptions& opts,
                           const LlmClient& llm, const EmbeddingProvider& emb);

constexpr int kGraphSchemaVersion = 1;

std::string graph_to_json(const GraphOfRecords& g, const std::string& config_hash = "");
GraphOfRecords graph_from_json(const std::string& json_text, std::string* config_hash = nullptr);

void save_graph(const GraphOfRecords& g, const std::string& path,
                const std::string& config_hash = "");
GraphOfRecords load_graph(const std::string& path, std::string* config_hash = nullptr);

}  // namespace gor
