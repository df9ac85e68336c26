#include "gor/inference.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>

#include "gor/util.hpp"
#include "json.hpp"

namespace gor {

std::string model_digest(const GatModel& model) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t x) { h = splitmix64(h ^ x); };
  mix(model.config.in_dim);
  mix(model.config.hidden_per_head);
  mix(model.config.heads);
  mix(model.config.out_dim);
  model.for_each_param([&](const Mat& m) {
    mix(m.rows);
    mix(m.cols);
    for (double d : m.data) {
      std::uint64_t bits;
      std::memcpy(&bits, &d, sizeof(bits));
      mix(bits);
    }
  });
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

Mat node_embeddings_for_inference(const GraphOfRecords& g, const GatModel& model) {
  return gat_forward(g, model, /*training=*/false, /*seed=*/0, nullptr);
}

const Mat& InferenceCache::embeddings(const GraphOfRecords& g, const GatModel& model) {
  const std::string key = g.doc_id + ":" + model_digest(model);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  ++recomputes_;
  return cache_.emplace(key, node_embeddings_for_inference(g, model)).first->second;
}

RetrievalResult retrieve_top_k(const std::string& query, const GraphOfRecords& g,
                               const GatModel& model, const EmbeddingProvider& emb,
                               std::size_t k, InferenceCache* cache, bool chunks_only) {
  if (g.nodes.empty()) throw GorError("inference", "empty graph");
  if (k < 1) throw GorError("inference", "k must be >= 1");

  InferenceCache local;
  const Mat& h = (cache ? *cache : local).embeddings(g, model);
  const Vec q = emb.embed_query(query);
  if (q.size() != h.cols) throw GorError("dims", "query/model dimension mismatch");

  std::vector<std::size_t> order;
  order.reserve(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (chunks_only && g.nodes[i].kind != NodeKind::Chunk) continue;
    order.push_back(i);
  }
  std::vector<double> scores(g.nodes.size());
  for (std::size_t i : order) {
    const double* r = h.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) s += q[j] * r[j];
    scores[i] = s;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));

  RetrievalResult res;
  res.query = query;
  for (std::size_t i : order) {
    res.node_indices.push_back(i);
    res.node_ids.push_back(g.nodes[i].node_id);
    res.scores.push_back(scores[i]);
  }
  return res;
}

SummaryRecord summarize(const std::string& query, const GraphOfRecords& g, const GatModel& model,
                        const LlmClient& llm, const EmbeddingProvider& emb, std::size_t k,
                        InferenceCache* cache) {
  SummaryRecord rec;
  rec.retrieval = retrieve_top_k(query, g, model, emb, k, cache);
  rec.query = query;
  rec.checkpoint_hash = model_digest(model);

  std::string materials;
  for (std::size_t i = 0; i < rec.retrieval.node_indices.size(); ++i) {
    if (i) materials += "\n\n";
    materials += g.nodes[rec.retrieval.node_indices[i]].text;
    rec.retrieved_kinds.push_back(g.nodes[rec.retrieval.node_indices[i]].kind);
  }
  rec.summary = llm.generate(rag_prompt(materials, query), /*temperature=*/0.0);
  if (rec.summary.empty()) throw GorError("llm_empty", "empty summary");
  return rec;
}

std::string summary_record_to_json(const SummaryRecord& rec) {
  nlohmann::json j;
  j["query"] = rec.query;
  j["summary"] = rec.summary;
  j["retrieved"] = nlohmann::json::array();
  for (std::size_t i = 0; i < rec.retrieval.node_ids.size(); ++i) {
    j["retrieved"].push_back(
        {{"node_id", rec.retrieval.node_ids[i]},
         {"kind", rec.retrieved_kinds[i] == NodeKind::Chunk ? "chunk" : "response"},
         {"score", rec.retrieval.scores[i]}});
  }
  j["checkpoint_hash"] = rec.checkpoint_hash;
  return j.dump();
}

}  // namespace gor
