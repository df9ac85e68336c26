#include "gor/graph.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "gor/util.hpp"
#include "json.hpp"

namespace gor {

namespace {

std::string fold_case(const std::string& s) {
  std::string out = s;
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::size_t GraphOfRecords::node_index(const std::string& node_id) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].node_id == node_id) return i;
  }
  throw GorError("graph", "unknown node id: " + node_id);
}

std::vector<std::size_t> retrieve_corpus(const std::string& query,
                                         const std::vector<Node>& candidates, std::size_t k,
                                         const EmbeddingProvider& emb) {
  if (candidates.empty()) throw GorError("graph", "retrieve_corpus: no candidates");
  const Vec q = emb.embed_query(query);
  std::vector<double> scores(candidates.size(), 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Vec& h = candidates[i].init_embedding;
    scores[i] = std::inner_product(q.begin(), q.end(), h.begin(), 0.0);
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));
  return order;
}

GraphOfRecords build_graph(const std::vector<Chunk>& chunks, const BuildOptions& opts,
                           const LlmClient& llm, const EmbeddingProvider& emb) {
  if (chunks.empty()) throw GorError("graph", "build_graph: need at least one chunk");

  GraphOfRecords g;
  g.doc_id = chunks.front().doc_id;
  for (const auto& ch : chunks) {
    Node n;
    n.node_id = ch.chunk_id;
    n.kind = NodeKind::Chunk;
    n.text = ch.text;
    n.round = 0;
    n.init_embedding = emb.embed_context(ch.text);
    g.nodes.push_back(std::move(n));
  }

  Rng rng(derive_seed(opts.seed, "graph-build", fnv1a64(g.doc_id)));
  std::unordered_set<std::string> used_queries;

  for (std::size_t round = 1; round <= opts.n_queries; ++round) {
    std::string query;
    std::size_t source_chunk = 0;
    bool found = false;
    for (std::size_t attempt = 0; attempt < opts.max_dedup_attempts; ++attempt) {
      const std::size_t idx = rng.next_index(chunks.size());
      Chunk ch;
      ch.doc_id = g.doc_id;
      ch.chunk_id = chunks[idx].chunk_id;
      ch.text = chunks[idx].text;
      const std::uint64_t salt = (round - 1) * opts.max_dedup_attempts + attempt;
      std::string q;
      try {
        q = llm.simulate_query(ch, opts.sim_temperature, salt);
      } catch (const GorError& e) {
        throw GorError(e.category(),
                       "round " + std::to_string(round) + ": " + std::string(e.what()));
      }
      if (used_queries.insert(fold_case(q)).second) {
        query = q;
        source_chunk = idx;
        found = true;
        break;
      }
    }
    if (!found) {
      throw GorError("graph", "query deduplication exhausted for document " + g.doc_id +
                                  " at round " + std::to_string(round));
    }

    std::vector<std::size_t> retrieved;
    std::string response;
    try {
      retrieved = retrieve_corpus(query, g.nodes, opts.k, emb);
      std::string materials;
      for (std::size_t i = 0; i < retrieved.size(); ++i) {
        if (i) materials += "\n\n";
        materials += g.nodes[retrieved[i]].text;
      }
      response = llm.generate(rag_prompt(materials, query), 0.0);
    } catch (const GorError& e) {
      throw GorError(e.category(),
                     "round " + std::to_string(round) + ": " + std::string(e.what()));
    }

    Node r;
    r.node_id = g.doc_id + "#r" + std::to_string(round);
    r.kind = NodeKind::Response;
    r.text = response;
    r.round = round;
    try {
      r.init_embedding = emb.embed_context(response);
    } catch (const GorError& e) {
      throw GorError(e.category(),
                     "round " + std::to_string(round) + ": " + std::string(e.what()));
    }
    const std::size_t dst = g.nodes.size();
    g.nodes.push_back(std::move(r));
    for (std::size_t src : retrieved) g.edges.push_back({src, dst});
    g.training_pairs.push_back({query, chunks[source_chunk].chunk_id});
  }

  // isolated nodes stay in the graph with a self-loop
  std::vector<bool> touched(g.nodes.size(), false);
  for (const auto& e : g.edges) {
    touched[e.src] = true;
    touched[e.dst] = true;
  }
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!touched[i]) g.edges.push_back({i, i});
  }
  return g;
}

std::string graph_to_json(const GraphOfRecords& g, const std::string& config_hash) {
  nlohmann::json j;
  j["version"] = kGraphSchemaVersion;
  j["doc_id"] = g.doc_id;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : g.nodes) {
    j["nodes"].push_back({{"id", n.node_id},
                          {"kind", n.kind == NodeKind::Chunk ? "chunk" : "response"},
                          {"text", n.text},
                          {"round", n.round},
                          {"embedding", n.init_embedding}});
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges) {
    j["edges"].push_back({g.nodes[e.src].node_id, g.nodes[e.dst].node_id});
  }
  j["training_pairs"] = nlohmann::json::array();
  for (const auto& p : g.training_pairs) {
    j["training_pairs"].push_back({p.query, p.label_chunk_id});
  }
  return j.dump(2) + "\n";
}

GraphOfRecords graph_from_json(const std::string& json_text, std::string* config_hash) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw GorError("parse", std::string("graph file: ") + e.what());
  }
  if (!j.contains("version") || !j["version"].is_number_integer() ||
      j["version"].get<int>() != kGraphSchemaVersion) {
    throw GorError("version", "graph file schema version mismatch (want " +
                                  std::to_string(kGraphSchemaVersion) + ")");
  }
  GraphOfRecords g;
  g.doc_id = j.at("doc_id").get<std::string>();
  if (config_hash) *config_hash = j.value("config_hash", "");
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& nj : j.at("nodes")) {
    Node n;
    n.node_id = nj.at("id").get<std::string>();
    const std::string kind = nj.at("kind").get<std::string>();
    if (kind == "chunk") {
      n.kind = NodeKind::Chunk;
    } else if (kind == "response") {
      n.kind = NodeKind::Response;
    } else {
      throw GorError("parse", "unknown node kind: " + kind);
    }
    n.text = nj.at("text").get<std::string>();
    n.round = nj.at("round").get<std::size_t>();
    n.init_embedding = nj.at("embedding").get<Vec>();
    index[n.node_id] = g.nodes.size();
    g.nodes.push_back(std::move(n));
  }
  for (const auto& ej : j.at("edges")) {
    g.edges.push_back({index.at(ej.at(0).get<std::string>()),
                       index.at(ej.at(1).get<std::string>())});
  }
  for (const auto& pj : j.at("training_pairs")) {
    g.training_pairs.push_back({pj.at(0).get<std::string>(), pj.at(1).get<std::string>()});
  }
  return g;
}

void save_graph(const GraphOfRecords& g, const std::string& path,
                const std::string& config_hash) {
  write_file(path, graph_to_json(g, config_hash));
}

GraphOfRecords load_graph(const std::string& path, std::string* config_hash) {
  return graph_from_json(read_file(path), config_hash);
}

}  // namespace gor
