#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "gor/corpus.hpp"

namespace gor {

using Vec = std::vector<double>;

struct HttpEndpoint {
  std::string base_url;   // e.g. http://host:port/v1
  std::string api_key;
  std::string model;
  int max_retries = 3;
};

/// Prompt templates shared by graph construction and inference.
std::string rag_prompt(const std::string& materials, const std::string& question);
std::string query_simulation_prompt(const std::string& chunk_text);

/// Dual-encoder retriever interface: query and context embeddings of a fixed
/// dimension. The deterministic implementation derives a vector from the
/// token multiset (per-token seeded projections, summed and L2-normalized),
/// so texts sharing tokens get correlated embeddings without model weights.
class EmbeddingProvider {
public:
  using Transport = std::function<Vec(const std::string& text, bool is_query)>;

  static EmbeddingProvider deterministic(std::size_t dim = 768, std::uint64_t seed = 0);
  static EmbeddingProvider live(const HttpEndpoint& query_ep, const HttpEndpoint& context_ep,
                                std::size_t dim = 768);
  static EmbeddingProvider with_transport(Transport t, std::size_t dim);

  Vec embed_query(const std::string& q) const;
  Vec embed_context(const std::string& c) const;
  std::size_t dimension() const { return dim_; }

private:
  EmbeddingProvider(Transport t, std::size_t dim) : transport_(std::move(t)), dim_(dim) {}
  Vec embed(const std::string& text, bool is_query) const;

  Transport transport_;
  std::size_t dim_;
};

/// Per-token unit vectors, the substrate for greedy-matching similarity.
class TokenEmbedder {
public:
  using Transport = std::function<std::vector<Vec>(const std::string& text)>;

  static TokenEmbedder deterministic(std::size_t token_dim = 64, std::uint64_t seed = 0);
  static TokenEmbedder with_transport(Transport t, std::size_t token_dim);

  /// One unit-norm row per token of tokenize(text).
  std::vector<Vec> embed_tokens(const std::string& text) const;
  std::size_t token_dim() const { return token_dim_; }

private:
  TokenEmbedder(Transport t, std::size_t dim) : transport_(std::move(t)), token_dim_(dim) {}
  Transport transport_;
  std::size_t token_dim_;
};

/// Generative LLM client. Canned mode is a pure function of its inputs; live
/// mode caches by (prompt, temperature, salt) so reruns are free.
class LlmClient {
public:
  using Transport = std::function<std::string(const std::string& prompt, double temperature)>;

  static LlmClient canned();
  static LlmClient live(const HttpEndpoint& ep, const std::string& cache_path);
  static LlmClient with_transport(Transport t, const std::string& cache_path = "");

  std::string generate(const std::string& prompt, double temperature) const;

  /// One interrogative question grounded in the chunk text. `salt` varies the
  /// output to emulate temperature sampling; distinct salts yield distinct
  /// canned questions for the same chunk.
  std::string simulate_query(const Chunk& chunk, double temperature = 0.5,
                             std::uint64_t salt = 0) const;

  bool canned_mode() const { return canned_; }
  std::size_t transport_calls() const;

private:
  struct State {
    std::mutex mu;
    std::unordered_map<std::string, std::string> cache;
    std::size_t transport_calls = 0;
  };

  LlmClient(Transport t, std::string cache_path, bool canned);
  std::string generate_with_salt(const std::string& prompt, double temperature,
                                 std::uint64_t salt) const;
  void load_cache();
  void append_cache(const std::string& key_hash, const std::string& prompt_sha,
                    double temperature, const std::string& response) const;

  Transport transport_;
  std::string cache_path_;
  bool canned_;
  std::shared_ptr<State> state_;
};

}  // namespace gor
