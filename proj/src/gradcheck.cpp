#include "gor/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gor/util.hpp"

namespace gor {

double grad_check(std::uint64_t seed, const GradCheckOptions& opts) {
  Rng rng(derive_seed(seed, "grad-check"));

  // random connected-ish graph
  std::vector<Edge> edges;
  for (std::size_t v = 1; v < opts.n_nodes; ++v) {
    edges.push_back({rng.next_index(v), v});
  }
  for (std::size_t extra = 0; extra < opts.n_nodes; ++extra) {
    const std::size_t a = rng.next_index(opts.n_nodes);
    const std::size_t b = rng.next_index(opts.n_nodes);
    if (a != b) edges.push_back({a, b});
  }
  const Adjacency adj = Adjacency::from_edges(opts.n_nodes, edges);

  Mat x0(opts.n_nodes, opts.in_dim);
  for (auto& x : x0.data) x = rng.next_symmetric(1.0);

  GatConfig gcfg;
  gcfg.in_dim = opts.in_dim;
  gcfg.hidden_per_head = opts.hidden_per_head;
  gcfg.heads = opts.heads;
  gcfg.out_dim = opts.out_dim;
  gcfg.dropout_p = opts.dropout_p;
  GatModel model = GatModel::init(gcfg, derive_seed(seed, "gc-init"));

  LossConfig lcfg;
  lcfg.tau = opts.tau;
  lcfg.alpha = opts.alpha;
  lcfg.seed = derive_seed(seed, "gc-pairs");

  // synthetic training pairs: random queries and random ranking permutations
  std::vector<RankingList> rankings(opts.n_pairs);
  std::vector<BatchItem> batch;
  for (std::size_t p = 0; p < opts.n_pairs; ++p) {
    RankingList& rl = rankings[p];
    rl.pair_index = p;
    rl.ordered_nodes.resize(opts.n_nodes);
    std::iota(rl.ordered_nodes.begin(), rl.ordered_nodes.end(), 0);
    rng.shuffle(rl.ordered_nodes);
    rl.scores.resize(opts.n_nodes);
    for (std::size_t i = 0; i < opts.n_nodes; ++i) {
      rl.scores[i] = 1.0 - static_cast<double>(i) / static_cast<double>(opts.n_nodes);
    }
    BatchItem item;
    item.graph_index = 0;
    item.ranking = &rl;
    item.q_emb.resize(opts.out_dim);
    for (auto& x : item.q_emb) x = rng.next_symmetric(1.0);
    batch.push_back(std::move(item));
  }

  const std::uint64_t fwd_seed = derive_seed(seed, "gc-dropout");
  const bool training = opts.dropout_p > 0.0;

  auto loss_of = [&](const GatModel& m) {
    const Mat h = gat_forward(adj, x0, m, training, fwd_seed, nullptr);
    std::vector<const Mat*> embs{&h};
    return total_loss(batch, embs, lcfg, nullptr).total;
  };

  // analytic gradients
  ForwardCache cache;
  const Mat h = gat_forward(adj, x0, model, training, fwd_seed, &cache);
  std::vector<const Mat*> embs{&h};
  std::vector<Mat> dh{Mat(h.rows, h.cols)};
  total_loss(batch, embs, lcfg, &dh);
  const GatModel analytic = gat_backward(model, cache, dh[0]);

  // central finite differences per parameter
  std::vector<Mat*> params;
  model.for_each_param([&](Mat& m) { params.push_back(&m); });
  std::vector<const Mat*> agrads;
  analytic.for_each_param([&](const Mat& m) { agrads.push_back(&m); });

  double max_rel = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Mat& p = *params[t];
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      const double orig = p.data[i];
      p.data[i] = orig + opts.fd_step;
      const double lp = loss_of(model);
      p.data[i] = orig - opts.fd_step;
      const double lm = loss_of(model);
      p.data[i] = orig;
      const double fd = (lp - lm) / (2.0 * opts.fd_step);
      const double an = agrads[t]->data[i];
      const double denom = std::max(1e-6, std::abs(fd) + std::abs(an));
      max_rel = std::max(max_rel, std::abs(fd - an) / denom);
    }
  }
  return max_rel;
}

}  // namespace gor
