#include "gor/providers.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "gor/util.hpp"
#include "httplib.h"
#include "json.hpp"

namespace gor {

namespace {

constexpr std::uint64_t kEmbedSalt = 0x6f72655f656d62ULL;   // dual-encoder family
constexpr std::uint64_t kTokenSalt = 0x6f72655f746f6bULL;   // token-embedder family

Vec token_vector(const std::string& token, std::uint64_t salt, std::size_t dim) {
  Rng rng(fnv1a64(token) ^ salt);
  Vec v(dim);
  for (auto& x : v) x = rng.next_symmetric(1.0);
  return v;
}

void l2_normalize(Vec& v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  if (ss == 0.0) return;
  const double inv = 1.0 / std::sqrt(ss);
  for (auto& x : v) x *= inv;
}

std::string first_tokens(const std::string& text, std::size_t n) {
  const TokenSeq toks = tokenize(text);
  std::string out;
  for (std::size_t i = 0; i < toks.size() && i < n; ++i) {
    if (i) out += ' ';
    out += toks.tokens[i];
  }
  return out;
}

std::pair<httplib::Client, std::string> split_endpoint(const std::string& base_url) {
  // base_url = scheme://host[:port][/path-prefix]
  auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos)
    throw GorError("config", "endpoint url missing scheme: " + base_url);
  auto path_start = base_url.find('/', scheme_end + 3);
  std::string origin = path_start == std::string::npos ? base_url : base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : base_url.substr(path_start);
  return {httplib::Client(origin), prefix};
}

std::string http_post_json(const HttpEndpoint& ep, const std::string& path,
                           const nlohmann::json& body) {
  std::string last_error;
  for (int attempt = 0; attempt <= ep.max_retries; ++attempt) {
    if (attempt) std::this_thread::sleep_for(std::chrono::milliseconds(200 << attempt));
    auto [client, prefix] = split_endpoint(ep.base_url);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    httplib::Headers headers;
    if (!ep.api_key.empty()) headers.emplace("Authorization", "Bearer " + ep.api_key);
    auto res = client.Post(prefix + path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "http status " + std::to_string(res->status) + ": " + res->body;
      if (res->status >= 400 && res->status < 500 && res->status != 429) break;
      continue;
    }
    return res->body;
  }
  throw GorError("transport", ep.base_url + path + ": " + last_error);
}

}  // namespace

std::string rag_prompt(const std::string& materials, const std::string& question) {
  return "Refer to the following supporting materials and answer the question with brief but "
         "complete explanations.\n\nSUPPORTING MATERIALS:\n" +
         materials + "\n\nQUESTION:\n" + question;
}

std::string query_simulation_prompt(const std::string& chunk_text) {
  return "You are a great questioner of any text, and are adept at asking valuable and "
         "insightful questions. Your goal is to generate 1 summary question for the text "
         "provided below. The generated summary question should try to simulate the tone of "
         "human questions as much as possible, and make sure that the generated question must "
         "be interrogative sentences and a summary question. Important! Please make sure this "
         "text must be a complete and non-redundant answer to the generated summary question. "
         "Please directly output the generated summary question, do not output irrelevant "
         "text.\n\nDOCUMENT:\n" +
         chunk_text;
}

// ---------------------------------------------------------------------------
// EmbeddingProvider

EmbeddingProvider EmbeddingProvider::deterministic(std::size_t dim, std::uint64_t seed) {
  auto transport = [dim, seed](const std::string& text, bool /*is_query*/) {
    const TokenSeq toks = tokenize(text);
    Vec acc(dim, 0.0);
    for (const auto& tok : toks.tokens) {
      const Vec tv = token_vector(tok, kEmbedSalt ^ splitmix64(seed), dim);
      for (std::size_t i = 0; i < dim; ++i) acc[i] += tv[i];
    }
    l2_normalize(acc);
    return acc;
  };
  return EmbeddingProvider(std::move(transport), dim);
}

EmbeddingProvider EmbeddingProvider::live(const HttpEndpoint& query_ep,
                                          const HttpEndpoint& context_ep, std::size_t dim) {
  auto transport = [query_ep, context_ep, dim](const std::string& text, bool is_query) {
    const HttpEndpoint& ep = is_query ? query_ep : context_ep;
    nlohmann::json body{{"model", ep.model}, {"input", text}};
    const std::string resp = http_post_json(ep, "/embeddings", body);
    nlohmann::json j = nlohmann::json::parse(resp);
    Vec v = j.at("data").at(0).at("embedding").get<Vec>();
    if (v.size() != dim)
      throw GorError("provider", "embedding dimension mismatch: got " +
                                     std::to_string(v.size()) + ", want " + std::to_string(dim));
    return v;
  };
  return EmbeddingProvider(std::move(transport), dim);
}

EmbeddingProvider EmbeddingProvider::with_transport(Transport t, std::size_t dim) {
  return EmbeddingProvider(std::move(t), dim);
}

Vec EmbeddingProvider::embed(const std::string& text, bool is_query) const {
  if (text.empty()) throw GorError("provider", "cannot embed empty text");
  Vec v = transport_(text, is_query);
  if (v.size() != dim_)
    throw GorError("provider", "embedding dimension mismatch: got " + std::to_string(v.size()) +
                                   ", want " + std::to_string(dim_));
  for (double x : v) {
    if (!std::isfinite(x)) throw GorError("provider", "non-finite embedding entry");
  }
  return v;
}

Vec EmbeddingProvider::embed_query(const std::string& q) const { return embed(q, true); }
Vec EmbeddingProvider::embed_context(const std::string& c) const { return embed(c, false); }

// ---------------------------------------------------------------------------
// TokenEmbedder

TokenEmbedder TokenEmbedder::deterministic(std::size_t token_dim, std::uint64_t seed) {
  auto transport = [token_dim, seed](const std::string& text) {
    const TokenSeq toks = tokenize(text);
    std::vector<Vec> rows;
    rows.reserve(toks.size());
    for (const auto& tok : toks.tokens) {
      Vec v = token_vector(tok, kTokenSalt ^ splitmix64(seed), token_dim);
      l2_normalize(v);
      rows.push_back(std::move(v));
    }
    return rows;
  };
  return TokenEmbedder(std::move(transport), token_dim);
}

TokenEmbedder TokenEmbedder::with_transport(Transport t, std::size_t token_dim) {
  return TokenEmbedder(std::move(t), token_dim);
}

std::vector<Vec> TokenEmbedder::embed_tokens(const std::string& text) const {
  std::vector<Vec> rows = transport_(text);
  const std::size_t expected = tokenize(text).size();
  if (rows.size() != expected)
    throw GorError("provider", "token embedding row count mismatch");
  for (auto& row : rows) {
    if (row.size() != token_dim_) throw GorError("provider", "token embedding dim mismatch");
    l2_normalize(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// LlmClient

LlmClient::LlmClient(Transport t, std::string cache_path, bool canned)
    : transport_(std::move(t)),
      cache_path_(std::move(cache_path)),
      canned_(canned),
      state_(std::make_shared<State>()) {
  if (!cache_path_.empty()) load_cache();
}

LlmClient LlmClient::canned() {
  auto transport = [](const std::string& prompt, double /*temperature*/) {
    // Extractive template: echo the head of the supporting materials when the
    // prompt follows the RAG layout, otherwise the head of the prompt itself.
    const std::string mat_tag = "SUPPORTING MATERIALS:\n";
    const std::string q_tag = "\n\nQUESTION:\n";
    auto mpos = prompt.find(mat_tag);
    auto qpos = prompt.find(q_tag);
    if (mpos != std::string::npos && qpos != std::string::npos && qpos > mpos) {
      const std::string materials =
          prompt.substr(mpos + mat_tag.size(), qpos - mpos - mat_tag.size());
      return "SUMMARY[" + first_tokens(materials, 40) + "]";
    }
    return "ECHO[" + first_tokens(prompt, 40) + "]";
  };
  return LlmClient(std::move(transport), "", true);
}

LlmClient LlmClient::live(const HttpEndpoint& ep, const std::string& cache_path) {
  auto transport = [ep](const std::string& prompt, double temperature) {
    nlohmann::json body{{"model", ep.model},
                        {"messages", {{{"role", "user"}, {"content", prompt}}}},
                        {"temperature", temperature}};
    const std::string resp = http_post_json(ep, "/chat/completions", body);
    nlohmann::json j = nlohmann::json::parse(resp);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  };
  return LlmClient(std::move(transport), cache_path, false);
}

LlmClient LlmClient::with_transport(Transport t, const std::string& cache_path) {
  return LlmClient(std::move(t), cache_path, false);
}

std::size_t LlmClient::transport_calls() const {
  std::lock_guard<std::mutex> lock(state_->mu);
  return state_->transport_calls;
}

void LlmClient::load_cache() {
  std::ifstream in(cache_path_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      state_->cache[j.at("key_hash").get<std::string>()] = j.at("response").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      // skip damaged cache lines; they are re-fetched on demand
    }
  }
}

void LlmClient::append_cache(const std::string& key_hash, const std::string& prompt_sha,
                             double temperature, const std::string& response) const {
  if (cache_path_.empty()) return;
  nlohmann::json j{{"key_hash", key_hash},
                   {"prompt_sha256", prompt_sha},
                   {"temperature", temperature},
                   {"response", response}};
  std::ofstream out(cache_path_, std::ios::app);
  out << j.dump() << "\n";
}

std::string LlmClient::generate_with_salt(const std::string& prompt, double temperature,
                                          std::uint64_t salt) const {
  if (prompt.empty()) throw GorError("llm", "empty prompt");
  if (canned_) {
    std::string resp = transport_(prompt, temperature);
    if (resp.empty()) throw GorError("llm_empty", "canned transport produced empty output");
    return resp;
  }
  const std::string prompt_sha = sha256_hex(prompt);
  std::ostringstream key;
  key << prompt_sha << '|' << temperature << '|' << salt;
  std::ostringstream kh;
  kh << std::hex << fnv1a64(key.str());
  const std::string key_hash = kh.str();
  {
    std::lock_guard<std::mutex> lock(state_->mu);
    auto it = state_->cache.find(key_hash);
    if (it != state_->cache.end()) return it->second;
  }
  std::string resp;
  {
    std::lock_guard<std::mutex> lock(state_->mu);
    ++state_->transport_calls;
  }
  resp = transport_(prompt, temperature);
  if (resp.empty()) throw GorError("llm_empty", "model returned empty output");
  {
    std::lock_guard<std::mutex> lock(state_->mu);
    state_->cache[key_hash] = resp;
  }
  append_cache(key_hash, prompt_sha, temperature, resp);
  return resp;
}

std::string LlmClient::generate(const std::string& prompt, double temperature) const {
  return generate_with_salt(prompt, temperature, 0);
}

std::string LlmClient::simulate_query(const Chunk& chunk, double temperature,
                                      std::uint64_t salt) const {
  if (chunk.text.empty()) throw GorError("llm", "cannot simulate a query for an empty chunk");
  if (canned_) {
    std::string q = "What does the passage about " + first_tokens(chunk.text, 8) + " summarize?";
    if (salt != 0) q += " (v" + std::to_string(salt) + ")";
    return q;
  }
  std::string resp =
      generate_with_salt(query_simulation_prompt(chunk.text), temperature, salt);
  // strip surrounding whitespace and quotes
  auto begin = resp.find_first_not_of(" \t\r\n");
  auto end = resp.find_last_not_of(" \t\r\n");
  if (begin == std::string::npos) throw GorError("llm_empty", "blank simulated query");
  resp = resp.substr(begin, end - begin + 1);
  if (resp.size() >= 2 && (resp.front() == '"' || resp.front() == '\'') &&
      resp.back() == resp.front()) {
    resp = resp.substr(1, resp.size() - 2);
  }
  return resp;
}

}  // namespace gor
