#include "gor/gat.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "gor/util.hpp"
#include "json.hpp"

namespace gor {

namespace {

Mat glorot(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Mat m(rows, cols);
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Rng rng(seed);
  for (auto& x : m.data) x = rng.next_symmetric(limit);
  return m;
}

std::vector<double> feature_dropout(Mat& x, double p, std::uint64_t seed) {
  if (p <= 0.0) return {};
  std::vector<double> mask(x.data.size());
  Rng rng(seed);
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    mask[i] = rng.next_bernoulli(p) ? 0.0 : keep_scale;
    x.data[i] *= mask[i];
  }
  return mask;
}

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
double elu_grad(double x) { return x > 0.0 ? 1.0 : std::exp(x); }

enum class Combine { Concat, Average };

void run_layer(int layer_no, const GatLayer& layer, const GatConfig& cfg, const Mat& x_in,
               const Adjacency& adj, const std::vector<std::size_t>& offsets, bool training,
               std::uint64_t seed, Combine combine, bool apply_elu, LayerCache& out) {
  const std::size_t n = adj.n;
  const std::size_t n_heads = layer.heads.size();
  const std::size_t head_dim = layer.heads.front().w.cols;
  if (x_in.cols != layer.heads.front().w.rows) {
    throw GorError("dims", "layer " + std::to_string(layer_no) + ": input width " +
                               std::to_string(x_in.cols) + " != weight fan-in " +
                               std::to_string(layer.heads.front().w.rows));
  }

  out.x_drop = x_in;
  out.drop_mask.clear();
  if (training && cfg.dropout_p > 0.0) {
    out.drop_mask =
        feature_dropout(out.x_drop, cfg.dropout_p, derive_seed(seed, "feat-drop", layer_no));
  }

  const std::size_t n_edges = offsets.back();
  out.heads.assign(n_heads, HeadCache{});
  const std::size_t width = combine == Combine::Concat ? n_heads * head_dim : head_dim;
  out.combined_pre = Mat(n, width);

  for (std::size_t h = 0; h < n_heads; ++h) {
    HeadCache& hc = out.heads[h];
    const HeadParams& hp = layer.heads[h];
    hc.z = matmul(out.x_drop, hp.w);

    std::vector<double> s(n, 0.0), t(n, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
      const double* zr = hc.z.row(u);
      double ss = 0.0, tt = 0.0;
      for (std::size_t j = 0; j < head_dim; ++j) {
        ss += zr[j] * hp.a_src.data[j];
        tt += zr[j] * hp.a_dst.data[j];
      }
      s[u] = ss;
      t[u] = tt;
    }

    hc.score_pre.resize(n_edges);
    hc.alpha.resize(n_edges);
    for (std::size_t v = 0; v < n; ++v) {
      const auto& nb = adj.in_neighbors[v];
      const std::size_t off = offsets[v];
      double max_e = -1e300;
      for (std::size_t i = 0; i < nb.size(); ++i) {
        const double pre = s[nb[i]] + t[v];
        hc.score_pre[off + i] = pre;
        const double rect = pre > 0.0 ? pre : cfg.leaky_slope * pre;
        hc.alpha[off + i] = rect;  // temporarily the rectified score
        max_e = std::max(max_e, rect);
      }
      double denom = 0.0;
      for (std::size_t i = 0; i < nb.size(); ++i) {
        hc.alpha[off + i] = std::exp(hc.alpha[off + i] - max_e);
        denom += hc.alpha[off + i];
      }
      for (std::size_t i = 0; i < nb.size(); ++i) hc.alpha[off + i] /= denom;
    }

    hc.alpha_dropped = hc.alpha;
    if (training && cfg.dropout_p > 0.0) {
      Rng rng(derive_seed(seed, "attn-drop", layer_no, h));
      const double keep_scale = 1.0 / (1.0 - cfg.dropout_p);
      for (auto& a : hc.alpha_dropped) a *= rng.next_bernoulli(cfg.dropout_p) ? 0.0 : keep_scale;
    }

    // aggregate
    const std::size_t col0 = combine == Combine::Concat ? h * head_dim : 0;
    const double head_scale =
        combine == Combine::Average ? 1.0 / static_cast<double>(n_heads) : 1.0;
    for (std::size_t v = 0; v < n; ++v) {
      const auto& nb = adj.in_neighbors[v];
      const std::size_t off = offsets[v];
      double* orow = out.combined_pre.row(v) + col0;
      for (std::size_t i = 0; i < nb.size(); ++i) {
        const double a = hc.alpha_dropped[off + i] * head_scale;
        if (a == 0.0) continue;
        const double* zr = hc.z.row(nb[i]);
        for (std::size_t j = 0; j < head_dim; ++j) orow[j] += a * zr[j];
      }
    }
  }

  if (layer.bias.cols != width) {
    throw GorError("dims", "layer " + std::to_string(layer_no) + ": bias width mismatch");
  }
  for (std::size_t v = 0; v < n; ++v) {
    double* orow = out.combined_pre.row(v);
    for (std::size_t j = 0; j < width; ++j) orow[j] += layer.bias.data[j];
  }

  out.activated = out.combined_pre;
  if (apply_elu) {
    for (auto& x : out.activated.data) x = elu(x);
  }
  if (!all_finite(out.activated)) {
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t j = 0; j < width; ++j) {
        if (!std::isfinite(out.activated.at(v, j))) {
          throw GorError("nonfinite", "layer " + std::to_string(layer_no) +
                                          ": non-finite activation at node row " +
                                          std::to_string(v));
        }
      }
    }
  }
}

struct LayerGrads {
  std::vector<HeadParams> heads;
  Mat bias;
  Mat d_input;
};

LayerGrads layer_backward(int layer_no, const GatLayer& layer, const GatConfig& cfg,
                          const LayerCache& cache, const Adjacency& adj,
                          const std::vector<std::size_t>& offsets, const Mat& d_out,
                          Combine combine, bool apply_elu) {
  const std::size_t n = adj.n;
  const std::size_t n_heads = layer.heads.size();
  const std::size_t head_dim = layer.heads.front().w.cols;
  const std::size_t width = d_out.cols;

  Mat d_pre = d_out;
  if (apply_elu) {
    for (std::size_t i = 0; i < d_pre.data.size(); ++i) {
      d_pre.data[i] *= elu_grad(cache.combined_pre.data[i]);
    }
  }

  LayerGrads g;
  g.bias = Mat(1, width);
  for (std::size_t v = 0; v < n; ++v) {
    const double* pr = d_pre.row(v);
    for (std::size_t j = 0; j < width; ++j) g.bias.data[j] += pr[j];
  }

  Mat d_xdrop(cache.x_drop.rows, cache.x_drop.cols);
  g.heads.resize(n_heads);

  for (std::size_t h = 0; h < n_heads; ++h) {
    const HeadCache& hc = cache.heads[h];
    const HeadParams& hp = layer.heads[h];
    const std::size_t col0 = combine == Combine::Concat ? h * head_dim : 0;
    const double head_scale =
        combine == Combine::Average ? 1.0 / static_cast<double>(n_heads) : 1.0;

    Mat d_z(n, head_dim);
    std::vector<double> d_pre_edge(offsets.back(), 0.0);
    std::vector<double> ds(n, 0.0), dt(n, 0.0);

    for (std::size_t v = 0; v < n; ++v) {
      const auto& nb = adj.in_neighbors[v];
      const std::size_t off = offsets[v];
      const double* dor = d_pre.row(v) + col0;

      // through the weighted aggregation
      std::vector<double> d_alpha(nb.size(), 0.0);
      for (std::size_t i = 0; i < nb.size(); ++i) {
        const std::size_t u = nb[i];
        const double* zr = hc.z.row(u);
        double dad = 0.0;
        for (std::size_t j = 0; j < head_dim; ++j) dad += dor[j] * zr[j];
        dad *= head_scale;
        const double ad = hc.alpha_dropped[off + i];
        if (ad != 0.0) {
          double* dzr = d_z.row(u);
          const double w = ad * head_scale;
          for (std::size_t j = 0; j < head_dim; ++j) dzr[j] += w * dor[j];
        }
        // attention-dropout multiplier (0 or 1/(1-p))
        const double m = hc.alpha[off + i] > 0.0 ? ad / hc.alpha[off + i] : 0.0;
        d_alpha[i] = dad * m;
      }

      // softmax backward per destination
      double dot_ad = 0.0;
      for (std::size_t i = 0; i < nb.size(); ++i) dot_ad += hc.alpha[off + i] * d_alpha[i];
      for (std::size_t i = 0; i < nb.size(); ++i) {
        const double d_rect = hc.alpha[off + i] * (d_alpha[i] - dot_ad);
        const double pre = hc.score_pre[off + i];
        const double dp = d_rect * (pre > 0.0 ? 1.0 : cfg.leaky_slope);
        d_pre_edge[off + i] = dp;
        ds[nb[i]] += dp;
        dt[v] += dp;
      }
    }

    // through s_u = z_u . a_src and t_v = z_v . a_dst
    g.heads[h].a_src = Mat(1, head_dim);
    g.heads[h].a_dst = Mat(1, head_dim);
    for (std::size_t u = 0; u < n; ++u) {
      const double* zr = hc.z.row(u);
      double* dzr = d_z.row(u);
      const double dsu = ds[u];
      const double dtu = dt[u];
      for (std::size_t j = 0; j < head_dim; ++j) {
        g.heads[h].a_src.data[j] += dsu * zr[j];
        g.heads[h].a_dst.data[j] += dtu * zr[j];
        dzr[j] += dsu * hp.a_src.data[j] + dtu * hp.a_dst.data[j];
      }
    }

    g.heads[h].w = matmul_at_b(cache.x_drop, d_z);
    Mat dx = matmul_a_bt(d_z, hp.w);
    add_inplace(d_xdrop, dx);
  }

  g.d_input = std::move(d_xdrop);
  if (!cache.drop_mask.empty()) {
    for (std::size_t i = 0; i < g.d_input.data.size(); ++i) {
      g.d_input.data[i] *= cache.drop_mask[i];
    }
  }
  return g;
}

}  // namespace

GatModel GatModel::init(const GatConfig& config, std::uint64_t seed) {
  if (config.heads * config.hidden_per_head == 0) {
    throw GorError("dims", "GAT configuration has zero width");
  }
  GatModel m;
  m.config = config;
  const std::size_t concat = config.heads * config.hidden_per_head;
  for (std::size_t h = 0; h < config.heads; ++h) {
    HeadParams hp;
    hp.w = glorot(config.in_dim, config.hidden_per_head, derive_seed(seed, "l1.w", h));
    hp.a_src = glorot(1, config.hidden_per_head, derive_seed(seed, "l1.asrc", h));
    hp.a_dst = glorot(1, config.hidden_per_head, derive_seed(seed, "l1.adst", h));
    m.layer1.heads.push_back(std::move(hp));
  }
  m.layer1.bias = Mat(1, concat);
  for (std::size_t h = 0; h < config.heads; ++h) {
    HeadParams hp;
    hp.w = glorot(concat, config.out_dim, derive_seed(seed, "l2.w", h));
    hp.a_src = glorot(1, config.out_dim, derive_seed(seed, "l2.asrc", h));
    hp.a_dst = glorot(1, config.out_dim, derive_seed(seed, "l2.adst", h));
    m.layer2.heads.push_back(std::move(hp));
  }
  m.layer2.bias = Mat(1, config.out_dim);
  return m;
}

void GatModel::for_each_param(const std::function<void(Mat&)>& fn) {
  for (auto* layer : {&layer1, &layer2}) {
    for (auto& h : layer->heads) {
      fn(h.w);
      fn(h.a_src);
      fn(h.a_dst);
    }
    fn(layer->bias);
  }
}

void GatModel::for_each_param(const std::function<void(const Mat&)>& fn) const {
  const_cast<GatModel*>(this)->for_each_param([&](Mat& m) { fn(m); });
}

GatModel GatModel::zeros_like() const {
  GatModel z = *this;
  z.for_each_param([](Mat& m) { std::fill(m.data.begin(), m.data.end(), 0.0); });
  return z;
}

Adjacency Adjacency::from_edges(std::size_t n, const std::vector<Edge>& edges) {
  std::vector<std::set<std::size_t>> nb(n);
  for (std::size_t v = 0; v < n; ++v) nb[v].insert(v);
  for (const auto& e : edges) {
    nb[e.dst].insert(e.src);
    nb[e.src].insert(e.dst);
  }
  Adjacency adj;
  adj.n = n;
  adj.in_neighbors.reserve(n);
  for (auto& s : nb) adj.in_neighbors.emplace_back(s.begin(), s.end());
  return adj;
}

Adjacency Adjacency::from_graph(const GraphOfRecords& g) {
  return from_edges(g.nodes.size(), g.edges);
}

Mat init_embedding_matrix(const GraphOfRecords& g) {
  if (g.nodes.empty()) throw GorError("graph", "empty graph");
  Mat x(g.nodes.size(), g.nodes.front().init_embedding.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const Vec& e = g.nodes[i].init_embedding;
    if (e.size() != x.cols) throw GorError("dims", "inconsistent node embedding widths");
    std::copy(e.begin(), e.end(), x.row(i));
  }
  return x;
}

Mat gat_forward(const Adjacency& adj, const Mat& x0, const GatModel& model, bool training,
                std::uint64_t seed, ForwardCache* cache) {
  if (x0.cols != model.config.in_dim) {
    throw GorError("dims", "layer 1: input dim " + std::to_string(x0.cols) +
                               " != configured in_dim " +
                               std::to_string(model.config.in_dim));
  }
  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  fc.adj = &adj;
  fc.training = training;
  fc.edge_offsets.assign(adj.n + 1, 0);
  for (std::size_t v = 0; v < adj.n; ++v) {
    fc.edge_offsets[v + 1] = fc.edge_offsets[v] + adj.in_neighbors[v].size();
  }
  run_layer(1, model.layer1, model.config, x0, adj, fc.edge_offsets, training, seed,
            Combine::Concat, /*apply_elu=*/true, fc.l1);
  run_layer(2, model.layer2, model.config, fc.l1.activated, adj, fc.edge_offsets, training, seed,
            Combine::Average, /*apply_elu=*/false, fc.l2);
  return fc.l2.activated;
}

Mat gat_forward(const GraphOfRecords& g, const GatModel& model, bool training,
                std::uint64_t seed, ForwardCache* cache) {
  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  fc.owned_adj = Adjacency::from_graph(g);
  Mat x0 = init_embedding_matrix(g);
  try {
    return gat_forward(fc.owned_adj, x0, model, training, seed, &fc);
  } catch (const GorError& e) {
    if (e.category() == "nonfinite") {
      throw GorError("nonfinite", std::string(e.what()) + " (doc " + g.doc_id + ")");
    }
    throw;
  }
}

GatModel gat_backward(const GatModel& model, const ForwardCache& cache,
                      const Mat& upstream_grad) {
  if (cache.adj == nullptr) throw GorError("cache", "backward called without a forward cache");
  if (!upstream_grad.same_shape(cache.l2.activated)) {
    throw GorError("dims", "upstream gradient shape mismatch");
  }
  GatModel grads = model.zeros_like();

  LayerGrads g2 = layer_backward(2, model.layer2, model.config, cache.l2, *cache.adj,
                                 cache.edge_offsets, upstream_grad, Combine::Average,
                                 /*apply_elu=*/false);
  LayerGrads g1 = layer_backward(1, model.layer1, model.config, cache.l1, *cache.adj,
                                 cache.edge_offsets, g2.d_input, Combine::Concat,
                                 /*apply_elu=*/true);

  for (std::size_t h = 0; h < model.config.heads; ++h) {
    grads.layer1.heads[h] = std::move(g1.heads[h]);
    grads.layer2.heads[h] = std::move(g2.heads[h]);
  }
  grads.layer1.bias = std::move(g1.bias);
  grads.layer2.bias = std::move(g2.bias);
  return grads;
}

AdamState adam_init(const GatModel& model) {
  AdamState st;
  model.for_each_param([&](const Mat& m) {
    st.m.emplace_back(m.data.size(), 0.0);
    st.v.emplace_back(m.data.size(), 0.0);
  });
  st.step = 0;
  return st;
}

void adam_step(GatModel& model, const GatModel& grads, AdamState& state, double lr,
               const AdamConfig& cfg) {
  std::vector<const Mat*> gs;
  grads.for_each_param([&](const Mat& m) { gs.push_back(&m); });
  for (const Mat* g : gs) {
    if (!all_finite(*g)) throw GorError("nonfinite", "non-finite gradient in adam_step");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  std::size_t t = 0;
  model.for_each_param([&](Mat& p) {
    const Mat& g = *gs[t];
    auto& m = state.m[t];
    auto& v = state.v[t];
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g.data[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.data[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
    ++t;
  });
}

double lr_at(std::size_t epoch, std::size_t total_epochs, double base_lr) {
  if (epoch > total_epochs) throw GorError("schedule", "epoch beyond schedule end");
  return base_lr * (1.0 - static_cast<double>(epoch) / static_cast<double>(total_epochs));
}

std::string model_to_json(const GatModel& model, const AdamState* adam) {
  nlohmann::json j;
  j["config"] = {{"in_dim", model.config.in_dim},
                 {"hidden_per_head", model.config.hidden_per_head},
                 {"heads", model.config.heads},
                 {"out_dim", model.config.out_dim},
                 {"leaky_slope", model.config.leaky_slope},
                 {"dropout_p", model.config.dropout_p}};
  j["params"] = nlohmann::json::array();
  model.for_each_param([&](const Mat& m) {
    j["params"].push_back({{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}});
  });
  if (adam) {
    j["adam"] = {{"step", adam->step}, {"m", adam->m}, {"v", adam->v}};
  }
  return j.dump();
}

GatModel model_from_json(const std::string& json_text, AdamState* adam) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw GorError("parse", std::string("model: ") + e.what());
  }
  GatConfig cfg;
  const auto& cj = j.at("config");
  cfg.in_dim = cj.at("in_dim").get<std::size_t>();
  cfg.hidden_per_head = cj.at("hidden_per_head").get<std::size_t>();
  cfg.heads = cj.at("heads").get<std::size_t>();
  cfg.out_dim = cj.at("out_dim").get<std::size_t>();
  cfg.leaky_slope = cj.at("leaky_slope").get<double>();
  cfg.dropout_p = cj.at("dropout_p").get<double>();
  GatModel model = GatModel::init(cfg, 0);
  std::size_t t = 0;
  const auto& params = j.at("params");
  model.for_each_param([&](Mat& m) {
    const auto& pj = params.at(t++);
    if (pj.at("rows").get<std::size_t>() != m.rows ||
        pj.at("cols").get<std::size_t>() != m.cols) {
      throw GorError("dims", "checkpoint parameter shape mismatch");
    }
    m.data = pj.at("data").get<std::vector<double>>();
  });
  if (adam) {
    if (!j.contains("adam")) throw GorError("parse", "checkpoint missing adam state");
    adam->step = j["adam"].at("step").get<std::size_t>();
    adam->m = j["adam"].at("m").get<std::vector<std::vector<double>>>();
    adam->v = j["adam"].at("v").get<std::vector<std::vector<double>>>();
  }
  return model;
}

}  // namespace gor
