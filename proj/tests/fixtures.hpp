#pragma once

// Synthetic separable training fixture shared by trainer tests and the
// acceptance suite. A single signed-permutation rotation R links latent node
// directions to stored embeddings, so one learnable transform explains every
// graph: node v stores R u_v, the query for pair i is u of its positive node
// plus noise, and ranking lists order nodes by the latent dot product.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "gor/gat.hpp"
#include "gor/graph.hpp"
#include "gor/providers.hpp"
#include "gor/simscore.hpp"
#include "gor/util.hpp"

namespace fixtures {

struct Rotation {
  std::vector<std::size_t> perm;
  std::vector<double> sign;

  static Rotation make(std::size_t dim, std::uint64_t seed) {
    Rotation r;
    r.perm.resize(dim);
    std::iota(r.perm.begin(), r.perm.end(), 0);
    gor::Rng rng(gor::derive_seed(seed, "rotation"));
    rng.shuffle(r.perm);
    r.sign.resize(dim);
    for (auto& s : r.sign) s = rng.next_bernoulli(0.5) ? 1.0 : -1.0;
    return r;
  }

  gor::Vec apply(const gor::Vec& x) const {
    gor::Vec y(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) y[j] = sign[j] * x[perm[j]];
    return y;
  }
};

inline gor::Vec random_unit(gor::Rng& rng, std::size_t dim) {
  gor::Vec v(dim);
  double norm2 = 0.0;
  for (auto& x : v) {
    x = rng.next_symmetric(1.0);
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(std::max(norm2, 1e-12));
  for (auto& x : v) x *= inv;
  return v;
}

struct Synthetic {
  std::vector<gor::GraphOfRecords> graphs;
  std::vector<std::vector<std::string>> queries;
  std::vector<std::vector<gor::RankingList>> rankings;
  std::unordered_map<std::string, gor::Vec> query_vectors;
  std::vector<std::vector<std::size_t>> positives;  // positives[g][i] = node index

  gor::EmbeddingProvider provider(std::size_t dim) const {
    auto table = query_vectors;  // the provider owns a copy
    return gor::EmbeddingProvider::with_transport(
        [table](const std::string& text, bool) {
          const auto it = table.find(text);
          if (it == table.end()) throw gor::GorError("fixture", "unknown query: " + text);
          return it->second;
        },
        dim);
  }
};

struct SyntheticOptions {
  std::size_t n_graphs = 8;
  std::size_t n_nodes = 12;
  std::size_t n_pairs = 10;
  std::size_t dim = 768;
  double query_noise = 0.05;
  bool supervised = false;  // every pair shares one global query vector
};

inline Synthetic make_synthetic(std::uint64_t seed, const SyntheticOptions& opt = {}) {
  Synthetic out;
  const Rotation rot = Rotation::make(opt.dim, seed);
  gor::Rng rng(gor::derive_seed(seed, "synthetic"));
  const gor::Vec global_q = random_unit(rng, opt.dim);

  for (std::size_t g = 0; g < opt.n_graphs; ++g) {
    gor::GraphOfRecords graph;
    graph.doc_id = "syn" + std::to_string(g);
    std::vector<gor::Vec> latents;
    for (std::size_t v = 0; v < opt.n_nodes; ++v) {
      gor::Node node;
      node.node_id = graph.doc_id + "#c" + std::to_string(v);
      node.kind = gor::NodeKind::Chunk;
      node.text = "node " + std::to_string(v);
      gor::Vec u = random_unit(rng, opt.dim);
      latents.push_back(u);
      node.init_embedding = rot.apply(u);
      graph.nodes.push_back(std::move(node));
    }
    // no provenance edges: adjacency degenerates to self-loops, which keeps
    // the learning problem a pure per-node transform

    std::vector<std::string> qs;
    std::vector<gor::RankingList> rls;
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < opt.n_pairs; ++i) {
      const std::size_t positive = i % opt.n_nodes;
      gor::Vec q;
      gor::Vec ref;  // direction that orders the ranking list
      if (opt.supervised) {
        // replicated global label: every pair presents the same query while
        // the underlying targets still differ, so the supervision contradicts
        // itself within each graph
        q = global_q;
        ref = latents[positive];
      } else {
        q = latents[positive];
        const gor::Vec noise = random_unit(rng, opt.dim);
        for (std::size_t j = 0; j < opt.dim; ++j) q[j] += opt.query_noise * noise[j];
        double n2 = 0.0;
        for (double x : q) n2 += x * x;
        for (auto& x : q) x /= std::sqrt(n2);
        ref = q;
      }

      gor::RankingList rl;
      rl.pair_index = i;
      std::vector<std::size_t> order(opt.n_nodes);
      std::iota(order.begin(), order.end(), 0);
      std::vector<double> score(opt.n_nodes);
      for (std::size_t v = 0; v < opt.n_nodes; ++v) score[v] = gor::dot(ref, latents[v]);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
      // the positive must head its own list by construction
      auto it = std::find(order.begin(), order.end(), positive);
      std::rotate(order.begin(), it, it + 1);
      rl.ordered_nodes = order;
      for (std::size_t v : order) rl.scores.push_back(score[v]);
      pos.push_back(positive);

      const std::string qid = graph.doc_id + "?q" + std::to_string(i);
      out.query_vectors[qid] = q;
      qs.push_back(qid);
      rls.push_back(std::move(rl));
      graph.training_pairs.push_back({qid, graph.nodes[positive].node_id});
    }
    out.graphs.push_back(std::move(graph));
    out.queries.push_back(std::move(qs));
    out.rankings.push_back(std::move(rls));
    out.positives.push_back(std::move(pos));
  }
  return out;
}

/// Fraction of training pairs whose positive node wins top-1 retrieval under
/// the given model.
inline double top1_accuracy(const Synthetic& fx, const gor::GatModel& model) {
  std::size_t hits = 0, total = 0;
  for (std::size_t g = 0; g < fx.graphs.size(); ++g) {
    const gor::Mat h = gor::gat_forward(fx.graphs[g], model, false, 0);
    for (std::size_t i = 0; i < fx.queries[g].size(); ++i) {
      const gor::Vec& q = fx.query_vectors.at(fx.queries[g][i]);
      std::size_t best = 0;
      double best_score = -1e300;
      for (std::size_t v = 0; v < h.rows; ++v) {
        double s = 0.0;
        for (std::size_t j = 0; j < h.cols; ++j) s += q[j] * h.at(v, j);
        if (s > best_score) {
          best_score = s;
          best = v;
        }
      }
      hits += (best == fx.positives[g][i]) ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace fixtures
