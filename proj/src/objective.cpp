#include "gor/objective.hpp"

#include <algorithm>
#include <cmath>

#include "gor/util.hpp"

namespace gor {

namespace {

double row_dot(const Vec& q, const Mat& h, std::size_t row) {
  const double* r = h.row(row);
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) s += q[i] * r[i];
  return s;
}

// log(1 + exp(x)) without overflow
double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void add_scaled_row(Mat& g, std::size_t row, const Vec& q, double scale) {
  double* r = g.row(row);
  for (std::size_t i = 0; i < q.size(); ++i) r[i] += scale * q[i];
}

void check_batch(const std::vector<BatchItem>& batch, const std::vector<const Mat*>& node_embs) {
  if (batch.empty()) throw GorError("objective", "empty batch");
  for (const auto& item : batch) {
    if (item.graph_index >= node_embs.size() || node_embs[item.graph_index] == nullptr) {
      throw GorError("objective", "batch item references a missing graph");
    }
    if (item.ranking == nullptr || item.ranking->ordered_nodes.empty()) {
      throw GorError("objective", "batch item has no ranking list");
    }
  }
}

}  // namespace

double log_sim_s(const Vec& q_emb, const Vec& h, double tau) {
  if (tau <= 0.0) throw GorError("objective", "tau must be positive");
  return dot(q_emb, h) / tau;
}

double sim_s(const Vec& q_emb, const Vec& h, double tau) {
  return std::exp(log_sim_s(q_emb, h, tau));
}

double contrastive_loss(const std::vector<BatchItem>& batch,
                        const std::vector<const Mat*>& node_embs, const LossConfig& config,
                        std::vector<Mat>* grads) {
  check_batch(batch, node_embs);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double inv_tau = 1.0 / config.tau;

  // Candidate nodes contributed by *other* graphs in the batch.
  std::vector<std::vector<std::size_t>> extra_nodes(node_embs.size());
  if (config.use_in_batch_negatives) {
    if (config.in_batch_all_nodes) {
      for (std::size_t g = 0; g < node_embs.size(); ++g) {
        if (!node_embs[g]) continue;
        extra_nodes[g].resize(node_embs[g]->rows);
        for (std::size_t i = 0; i < node_embs[g]->rows; ++i) extra_nodes[g][i] = i;
      }
    } else {
      for (const auto& item : batch) {
        extra_nodes[item.graph_index].push_back(item.ranking->ordered_nodes.front());
      }
      for (auto& v : extra_nodes) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
      }
    }
  }

  double total = 0.0;
  for (const auto& item : batch) {
    const std::size_t g = item.graph_index;
    const Mat& h = *node_embs[g];
    const std::size_t pos = item.ranking->ordered_nodes.front();

    // candidates: (graph, node) with own graph first
    std::vector<std::pair<std::size_t, std::size_t>> cands;
    cands.reserve(h.rows + 8);
    for (std::size_t i = 0; i < h.rows; ++i) cands.emplace_back(g, i);
    if (config.use_in_batch_negatives) {
      for (std::size_t og = 0; og < node_embs.size(); ++og) {
        if (og == g) continue;
        for (std::size_t i : extra_nodes[og]) cands.emplace_back(og, i);
      }
    }

    std::vector<double> logits(cands.size());
    double max_logit = -1e300;
    for (std::size_t c = 0; c < cands.size(); ++c) {
      logits[c] = row_dot(item.q_emb, *node_embs[cands[c].first], cands[c].second) * inv_tau;
      max_logit = std::max(max_logit, logits[c]);
    }
    double z = 0.0;
    for (double l : logits) z += std::exp(l - max_logit);
    const double lse = max_logit + std::log(z);
    const double pos_logit = row_dot(item.q_emb, h, pos) * inv_tau;
    total += lse - pos_logit;

    if (grads) {
      for (std::size_t c = 0; c < cands.size(); ++c) {
        const double p = std::exp(logits[c] - lse);
        add_scaled_row((*grads)[cands[c].first], cands[c].second, item.q_emb,
                       inv_n * inv_tau * p);
      }
      add_scaled_row((*grads)[g], pos, item.q_emb, -inv_n * inv_tau);
    }
  }
  return total * inv_n;
}

double ranking_loss(const std::vector<BatchItem>& batch,
                    const std::vector<const Mat*>& node_embs, const LossConfig& config,
                    std::vector<Mat>* grads) {
  check_batch(batch, node_embs);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  const double inv_tau = 1.0 / config.tau;

  double total = 0.0;
  for (std::size_t item_idx = 0; item_idx < batch.size(); ++item_idx) {
    const auto& item = batch[item_idx];
    const Mat& h = *node_embs[item.graph_index];
    const auto& order = item.ranking->ordered_nodes;
    const std::size_t n = order.size();
    if (n < 2) throw GorError("objective", "ranking list needs at least two entries");

    std::vector<double> dots(n);
    for (std::size_t i = 0; i < n; ++i) dots[i] = row_dot(item.q_emb, h, order[i]);

    // pairs are positions (a better, b worse) in the ranking list
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (n <= config.full_pair_threshold) {
      pairs.reserve(n * (n - 1) / 2);
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
      }
    } else {
      for (std::size_t b = 1; b < n; ++b) pairs.emplace_back(0, b);
      Rng rng(derive_seed(config.seed, "rank-pairs", item_idx));
      for (std::size_t s = 0; s < config.max_rank_pairs; ++s) {
        std::size_t a = rng.next_index(n);
        std::size_t b = rng.next_index(n - 1);
        if (b >= a) ++b;
        if (a > b) std::swap(a, b);
        pairs.emplace_back(a, b);
      }
    }

    for (const auto& [a, b] : pairs) {
      const double margin = (dots[b] - dots[a]) * inv_tau;
      total += softplus(margin);
      if (grads) {
        const double sg = sigmoid(margin) * inv_tau * inv_n;
        Mat& gm = (*grads)[item.graph_index];
        add_scaled_row(gm, order[b], item.q_emb, sg);
        add_scaled_row(gm, order[a], item.q_emb, -sg);
      }
    }
  }
  return total * inv_n;
}

LossReport total_loss(const std::vector<BatchItem>& batch,
                      const std::vector<const Mat*>& node_embs, const LossConfig& config,
                      std::vector<Mat>* grads) {
  check_batch(batch, node_embs);
  LossReport report;

  std::vector<Mat> rank_grads;
  std::vector<Mat>* rank_grads_ptr = nullptr;
  if (grads) {
    rank_grads.reserve(node_embs.size());
    for (const Mat* m : node_embs) {
      rank_grads.emplace_back(m ? m->rows : 0, m ? m->cols : 0);
    }
    rank_grads_ptr = &rank_grads;
  }

  report.l_cl = contrastive_loss(batch, node_embs, config, grads);
  report.l_rank = ranking_loss(batch, node_embs, config, rank_grads_ptr);
  report.total = report.l_cl + config.alpha * report.l_rank;
  if (grads) {
    for (std::size_t g = 0; g < grads->size(); ++g) {
      if (rank_grads[g].data.empty()) continue;
      for (std::size_t i = 0; i < (*grads)[g].data.size(); ++i) {
        (*grads)[g].data[i] += config.alpha * rank_grads[g].data[i];
      }
    }
  }

  double ent = 0.0;
  for (const auto& item : batch) {
    ent += similarity_entropy(item.q_emb, *node_embs[item.graph_index], config.tau);
  }
  report.entropy = ent / static_cast<double>(batch.size());
  return report;
}

double similarity_entropy(const Vec& q_emb, const Mat& node_embs, double tau) {
  if (node_embs.rows == 0) throw GorError("objective", "entropy over an empty graph");
  std::vector<double> logits(node_embs.rows);
  double max_logit = -1e300;
  for (std::size_t i = 0; i < node_embs.rows; ++i) {
    logits[i] = row_dot(q_emb, node_embs, i) / tau;
    max_logit = std::max(max_logit, logits[i]);
  }
  double z = 0.0;
  for (double l : logits) z += std::exp(l - max_logit);
  const double lse = max_logit + std::log(z);
  double ent = 0.0;
  for (double l : logits) {
    const double logp = l - lse;
    const double p = std::exp(logp);
    if (p > 0.0) ent -= p * logp;
  }
  return std::max(ent, 0.0);
}

}  // namespace gor
