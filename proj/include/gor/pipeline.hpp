#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gor/corpus.hpp"
#include "gor/inference.hpp"
#include "gor/rouge.hpp"
#include "gor/trainer.hpp"

namespace gor {

/// End-to-end configuration: one JSON file, command-line overrides, secrets
/// from the environment only.
struct PipelineConfig {
  std::string dataset_path;
  std::string out_dir;
  std::string provider_mode = "deterministic";  // deterministic | live
  std::size_t embed_dim = 768;
  std::size_t token_dim = 64;
  std::size_t chunk_size = 256;
  std::size_t overlap = 32;
  std::size_t n_queries = 30;
  std::size_t k = 6;
  TrainConfig train;
  std::uint64_t seed = 7;
  bool force = false;  // combine artifacts despite config-hash mismatch
};

PipelineConfig config_from_json(const std::string& json_text);
std::string config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::string& path);

/// Hash over every field that affects artifact content (paths excluded).
std::string config_hash(const PipelineConfig& cfg);

struct Providers {
  EmbeddingProvider emb;
  TokenEmbedder tok;
  LlmClient llm;
};

/// Deterministic providers, or live HTTP providers configured from
/// GOR_LLM_BASE_URL / GOR_LLM_API_KEY / GOR_EMBED_BASE_URL / GOR_EMBED_API_KEY.
Providers make_providers(const PipelineConfig& cfg);

struct BuildResult {
  std::vector<std::string> graph_paths;
  std::vector<std::string> rankings_paths;
  std::size_t built = 0;
  std::size_t skipped = 0;
};

/// ingest -> simulate/build -> precompute rankings, one graph file and one
/// rankings file per document. Idempotent when outputs match the config hash.
BuildResult cmd_build(const PipelineConfig& cfg);

struct TrainResult {
  std::string checkpoint_path;
  Checkpoint checkpoint;
};

TrainResult cmd_train(const PipelineConfig& cfg, const std::string& resume_path = "");

struct SummarizeResult {
  std::string output_path;
  std::vector<std::string> doc_ids;
  std::vector<SummaryRecord> records;
};

/// One summary record per document; empty `query` means the global
/// summarization query.
SummarizeResult cmd_summarize(const PipelineConfig& cfg, const std::string& checkpoint_path,
                              const std::string& query = "");

struct EvalResult {
  std::string report_path;
  EvalReport report;
};

EvalResult cmd_eval(const PipelineConfig& cfg, const std::string& predictions_path);

/// Full offline pipeline: build, train, summarize (global query), evaluate.
EvalResult run_pipeline(const PipelineConfig& cfg);

}  // namespace gor
