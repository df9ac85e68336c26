// End-to-end acceptance checks. Each numbered check prints one [PASS]/[FAIL]
// line; the process exits nonzero if any check fails. Everything runs with
// deterministic providers and no network access.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <sstream>
#include <vector>

#include "fixtures.hpp"
#include "gor/gradcheck.hpp"
#include "gor/inference.hpp"
#include "gor/objective.hpp"
#include "gor/pipeline.hpp"
#include "gor/rouge.hpp"
#include "gor/simscore.hpp"
#include "gor/trainer.hpp"
#include "gor/util.hpp"

using namespace gor;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail = "") {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << number << ": " << name;
  if (!detail.empty()) std::cout << " (" << detail << ")";
  std::cout << std::endl;
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1: gradient correctness ----
void check_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  GradCheckOptions opts;  // 6 nodes, dim 8, 2 heads, alpha 0.5
  for (double tau : {0.07, 1.0}) {
    opts.tau = tau;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      worst = std::max(worst, grad_check(seed, opts));
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "max rel err " << worst << ", " << secs << "s";
  report(1, "analytic gradients match finite differences", worst < 1e-4 && secs < 30.0, d.str());
}

// ---- 2: loss closed forms ----
void check_loss_fixtures() {
  bool ok = true;
  std::ostringstream d;

  for (std::size_t n : {2u, 4u, 16u}) {
    Mat h(n, 3);
    for (std::size_t i = 0; i < n; ++i) {
      h.at(i, 0) = 0.3;
      h.at(i, 1) = -0.2;
      h.at(i, 2) = 0.4;
    }
    RankingList rl;
    for (std::size_t i = 0; i < n; ++i) rl.ordered_nodes.push_back(i);
    const BatchItem item{0, Vec{1.0, 0.5, -0.25}, &rl};
    const double l = contrastive_loss({item}, {&h}, LossConfig{});
    if (std::abs(l - std::log(double(n))) >= 1e-9) {
      ok = false;
      d << "InfoNCE N=" << n << " off; ";
    }
  }

  {
    Mat h(2, 2);
    h.at(0, 0) = 0.5;
    h.at(1, 0) = 0.5;  // equal dots: zero margin
    RankingList rl;
    rl.ordered_nodes = {0, 1};
    const BatchItem item{0, Vec{1.0, 0.0}, &rl};
    const double l = ranking_loss({item}, {&h}, LossConfig{});
    if (std::abs(l - std::log(2.0)) >= 1e-9) {
      ok = false;
      d << "zero-margin ranking off; ";
    }

    LossConfig zero_alpha;
    zero_alpha.alpha = 0.0;
    const LossReport rep = total_loss({item}, {&h}, zero_alpha);
    if (rep.total != rep.l_cl || rep.total != contrastive_loss({item}, {&h}, zero_alpha)) {
      ok = false;
      d << "alpha=0 total != L_CL; ";
    }
  }
  report(2, "loss closed forms (ln N, ln 2, alpha=0 identity)", ok, d.str());
}

// ---- 3: graph shape ----
void check_graph_shape() {
  const auto llm = LlmClient::canned();
  const auto emb = EmbeddingProvider::deterministic(64);
  std::vector<Chunk> chunks;
  static const char* topics[] = {"rivers carve canyons", "volcanoes erupt rock",
                                 "reefs host species", "deserts expand north",
                                 "glaciers retreat fast"};
  for (std::size_t i = 0; i < 5; ++i) {
    chunks.push_back(Chunk{"doc#c" + std::to_string(i), "doc", i * 4, i * 4 + 4, topics[i]});
  }
  BuildOptions opts;
  opts.n_queries = 30;
  opts.k = 6;
  opts.seed = 7;
  const GraphOfRecords g = build_graph(chunks, opts, llm, emb);

  std::size_t expected = 0;
  for (std::size_t i = 1; i <= 30; ++i) expected += std::min<std::size_t>(6, 4 + i);
  std::size_t provenance = 0, self_loops = 0, backward = 0;
  for (const auto& e : g.edges) {
    if (e.src == e.dst) {
      ++self_loops;
      continue;
    }
    ++provenance;
    if (g.nodes[e.dst].kind != NodeKind::Response || g.nodes[e.src].round >= g.nodes[e.dst].round) {
      ++backward;
    }
  }
  // with k >= the chunk count every node gains an incident edge, so no
  // isolated-node self-loops remain
  const bool ok = g.nodes.size() == 35 && provenance == expected && self_loops == 0 &&
                  backward == 0 && g.training_pairs.size() == 30;
  std::ostringstream d;
  d << g.nodes.size() << " nodes, " << provenance << "/" << expected << " edges, " << backward
    << " backward";
  report(3, "graph shape: 5 chunks, 30 rounds, k=6", ok, d.str());
}

// ---- 4: greedy-matching similarity oracle ----
void check_bertscore_oracle() {
  const auto tok = TokenEmbedder::deterministic(24);
  static const char* words[] = {"ant", "bee", "cat", "dog", "elk", "fox", "gnu", "hen"};
  Rng rng(404);
  bool ok = true;
  for (int trial = 0; trial < 200 && ok; ++trial) {
    auto sample = [&]() {
      std::string s;
      const std::size_t len = 1 + rng.next_index(12);
      for (std::size_t i = 0; i < len; ++i) {
        if (i) s += ' ';
        s += words[rng.next_index(8)];
      }
      return s;
    };
    const std::string cand = sample(), ref = sample();
    const auto cr = tok.embed_tokens(cand), rr = tok.embed_tokens(ref);
    auto side = [&](const std::vector<Vec>& from, const std::vector<Vec>& to) {
      double acc = 0.0;
      for (const auto& f : from) {
        double best = -1e300;
        for (const auto& t : to) best = std::max(best, dot(f, t));
        acc += best;
      }
      return acc / double(from.size());
    };
    const double r = side(rr, cr), p = side(cr, rr);
    const double want = (p > 0 && r > 0) ? 2.0 * p * r / (p + r) : 0.0;
    const double got = bertscore_f1(cand, ref, tok);
    ok = ok && std::abs(got - want) < 1e-12;
    ok = ok && std::abs(got - bertscore_f1(ref, cand, tok)) < 1e-12;
    ok = ok && std::abs(bertscore_f1(cand, cand, tok) - 1.0) < 1e-12;
  }
  report(4, "greedy-matching F1 oracle, symmetry, self-score", ok);
}

// ---- 5: retrieval oracle ----
void check_retrieval_oracle() {
  GatConfig cfg;
  cfg.in_dim = 16;
  cfg.hidden_per_head = 8;
  cfg.heads = 2;
  cfg.out_dim = 16;
  Rng rng(505);
  bool ok = true;
  for (int trial = 0; trial < 200 && ok; ++trial) {
    GraphOfRecords g;
    g.doc_id = "a";
    const std::size_t n = 2 + rng.next_index(8);
    for (std::size_t i = 0; i < n; ++i) {
      Node node;
      node.node_id = "a#c" + std::to_string(i);
      node.text = "t" + std::to_string(i);
      node.init_embedding = Vec(16);
      for (auto& x : node.init_embedding) x = rng.next_symmetric(1.0);
      if (trial % 9 == 0 && i > 0) node.init_embedding = g.nodes[0].init_embedding;  // ties
      g.nodes.push_back(std::move(node));
    }
    const GatModel model = GatModel::init(cfg, 600 + trial % 7);

    // provider pair: identical direction, one scaled by a positive constant
    Vec qv(16);
    for (auto& x : qv) x = rng.next_symmetric(1.0);
    const double scale = 0.25 + 7.5 * rng.next_unit();
    const auto base = EmbeddingProvider::with_transport(
        [qv](const std::string&, bool) { return qv; }, 16);
    const auto scaled = EmbeddingProvider::with_transport(
        [qv, scale](const std::string&, bool) {
          Vec s = qv;
          for (auto& x : s) x *= scale;
          return s;
        },
        16);

    const std::size_t k = 1 + rng.next_index(n);
    const RetrievalResult got = retrieve_top_k("q", g, model, base, k);
    const RetrievalResult got_scaled = retrieve_top_k("q", g, model, scaled, k);

    const Mat h = node_embeddings_for_inference(g, model);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      double sa = 0.0, sb = 0.0;
      for (std::size_t j = 0; j < 16; ++j) {
        sa += qv[j] * h.at(a, j);
        sb += qv[j] * h.at(b, j);
      }
      return sa > sb;
    });
    order.resize(k);
    ok = ok && got.node_indices == order && got_scaled.node_indices == order;
  }
  report(5, "top-k retrieval matches exhaustive scan; scale-invariant order", ok);
}

// ---- 6: Rouge fixtures ----
void check_rouge_fixtures() {
  bool ok = true;
  ok = ok && std::abs(rouge_n("a b c d", "a c d", 1).f1 - 6.0 / 7.0) < 1e-9;
  ok = ok && std::abs(rouge_l("a b c d", "a c d").f1 - 6.0 / 7.0) < 1e-9;
  ok = ok && std::abs(rouge_n("a b c d", "a c d", 2).f1 - 0.4) < 1e-9;
  ok = ok && rouge_n("x y z", "x y z", 1).f1 == 1.0;
  ok = ok && rouge_n("x y z", "p q r", 1).f1 == 0.0;
  ok = ok && rouge_l("x y z", "x y z").f1 == 1.0;
  ok = ok && rouge_l("x y z", "p q r").f1 == 0.0;
  report(6, "Rouge hand-derived fixtures and extremes", ok);
}

// ---- 7: training efficacy on the separable fixture ----
double mean_epoch_total(const Checkpoint& ckpt, std::size_t epoch) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& s : ckpt.trace) {
    if (s.epoch == epoch) {
      acc += s.total;
      ++n;
    }
  }
  return n ? acc / double(n) : 0.0;
}

void check_training_efficacy() {
  const auto t0 = std::chrono::steady_clock::now();
  fixtures::SyntheticOptions opt;  // 8 graphs x 12 nodes, 10 pairs, dim 768
  const auto fx = fixtures::make_synthetic(7, opt);
  const auto emb = fx.provider(opt.dim);

  TrainConfig cfg;  // batch 32, 150 epochs, lr 1e-3, 4 heads x 192 -> 768
  cfg.seed = 7;
  cfg.gat.dropout_p = 0.1;

  const GatModel untrained = GatModel::init(cfg.gat, derive_seed(cfg.seed, "model-init"));
  const double acc_before = fixtures::top1_accuracy(fx, untrained);

  const Checkpoint ckpt = train(fx.graphs, fx.queries, fx.rankings, cfg, emb);
  const double acc_after = fixtures::top1_accuracy(fx, ckpt.model);
  const double first = mean_epoch_total(ckpt, 0);
  const double last = mean_epoch_total(ckpt, cfg.epochs - 1);
  const double secs = seconds_since(t0);

  std::ostringstream d;
  d << "acc " << acc_before << " -> " << acc_after << ", loss " << first << " -> " << last
    << ", " << secs << "s";
  report(7, "training lifts top-1 retrieval accuracy on the synthetic fixture",
         acc_before <= 0.4 && acc_after >= 0.95 && last < first && secs < 300.0, d.str());
}

// ---- 8: supervised vs self-supervised entropy/loss ----
void check_supervision_contrast() {
  double sup_entropy = 0.0, self_entropy = 0.0, sup_loss = 0.0, self_loss = 0.0;
  const std::size_t epochs = 30;
  for (std::uint64_t seed : {7ull, 8ull, 9ull}) {
    for (const bool supervised : {false, true}) {
      fixtures::SyntheticOptions opt;
      opt.supervised = supervised;
      const auto fx = fixtures::make_synthetic(seed, opt);
      const auto emb = fx.provider(opt.dim);
      TrainConfig cfg;
      cfg.epochs = epochs;
      cfg.seed = seed;
      cfg.gat.dropout_p = 0.1;
      const Checkpoint ckpt = train(fx.graphs, fx.queries, fx.rankings, cfg, emb);
      const double loss = mean_epoch_total(ckpt, epochs - 1);
      double entropy = 0.0;
      std::size_t n = 0;
      for (const auto& s : ckpt.trace) {
        if (s.epoch == epochs - 1) {
          entropy += s.entropy;
          ++n;
        }
      }
      entropy /= double(n);
      (supervised ? sup_entropy : self_entropy) += entropy / 3.0;
      (supervised ? sup_loss : self_loss) += loss / 3.0;
    }
  }
  std::ostringstream d;
  d << "entropy sup " << sup_entropy << " vs self " << self_entropy << "; loss sup " << sup_loss
    << " vs self " << self_loss;
  report(8, "replicated-label supervision ends with higher entropy and loss",
         sup_entropy > self_entropy && sup_loss > self_loss, d.str());
}

// ---- 9: full-pipeline determinism ----
std::string slurp(const std::string& path) { return read_file(path); }

void check_pipeline_determinism() {
  const std::string root = (fs::temp_directory_path() / "gor_acceptance_pipe").string();
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string dataset = root + "/docs.jsonl";
  write_file(
      dataset,
      R"({"doc_id":"river","text":"The river rises in the high meadows where snowmelt gathers into a cold clear stream. It falls through a basalt gorge, turning the wheels of an old grain mill. Salmon return each autumn to the gravel beds above the second falls. Farmers draw irrigation water under a compact signed ninety years ago.","summaries":["A snowmelt river powers an old mill, hosts returning salmon, and irrigates farms."]})"
      "\n"
      R"({"doc_id":"observatory","text":"The hilltop observatory opened with a twenty-inch refractor donated by a railroad magnate. Astronomers there measured double stars for half a century before city lights washed out the sky. The dome now serves school groups, and a small radio dish tracks meteor echoes at dawn.","summaries":["An old observatory now serves school groups and tracks meteors by radio."]})"
      "\n");

  PipelineConfig cfg;
  cfg.dataset_path = dataset;
  cfg.embed_dim = 32;
  cfg.token_dim = 16;
  cfg.chunk_size = 16;
  cfg.overlap = 4;
  cfg.n_queries = 4;
  cfg.k = 2;
  cfg.seed = 7;
  cfg.train.gat.in_dim = 32;
  cfg.train.gat.hidden_per_head = 8;
  cfg.train.gat.heads = 4;
  cfg.train.gat.out_dim = 32;
  cfg.train.gat.dropout_p = 0.1;
  cfg.train.epochs = 4;
  cfg.train.batch_size = 4;
  cfg.train.seed = cfg.seed;

  bool ok = true;
  std::ostringstream d;
  try {
    cfg.out_dir = root + "/run1";
    run_pipeline(cfg);
    cfg.out_dir = root + "/run2";
    run_pipeline(cfg);
    static const char* files[] = {"river.graph.json",       "river.rankings.json",
                                  "observatory.graph.json", "observatory.rankings.json",
                                  "epoch4.ckpt",            "summaries.jsonl",
                                  "train_log.jsonl",        "eval_report.json"};
    for (const char* f : files) {
      if (slurp(root + "/run1/" + f) != slurp(root + "/run2/" + f)) {
        ok = false;
        d << f << " differs; ";
      }
    }
  } catch (const std::exception& e) {
    ok = false;
    d << e.what();
  }
  fs::remove_all(root);
  report(9, "two identical pipeline runs are byte-identical", ok, d.str());
}

// ---- 10: checkpoint resume ----
void check_resume() {
  fixtures::SyntheticOptions opt;
  opt.n_graphs = 2;
  opt.n_nodes = 6;
  opt.n_pairs = 4;
  opt.dim = 8;
  const auto fx = fixtures::make_synthetic(10, opt);
  const auto emb = fx.provider(8);

  TrainConfig cfg;
  cfg.gat.in_dim = 8;
  cfg.gat.hidden_per_head = 4;
  cfg.gat.heads = 2;
  cfg.gat.out_dim = 8;
  cfg.gat.dropout_p = 0.2;
  cfg.epochs = 150;
  cfg.batch_size = 2;
  cfg.seed = 7;
  cfg.config_hash = "resume-check";

  const Checkpoint straight = train(fx.graphs, fx.queries, fx.rankings, cfg, emb);

  TrainConfig half = cfg;
  half.stop_epoch = 75;  // unchanged 150-epoch LR schedule
  const Checkpoint mid = train(fx.graphs, fx.queries, fx.rankings, half, emb);
  const Checkpoint resumed = train(fx.graphs, fx.queries, fx.rankings, cfg, emb, &mid);

  std::vector<double> a, b;
  straight.model.for_each_param(
      [&](const Mat& m) { a.insert(a.end(), m.data.begin(), m.data.end()); });
  resumed.model.for_each_param(
      [&](const Mat& m) { b.insert(b.end(), m.data.begin(), m.data.end()); });
  report(10, "75 + resume-75 epochs equals 150 straight epochs exactly",
         a == b && resumed.epoch == straight.epoch);
}

}  // namespace

int main() {
  check_gradients();
  check_loss_fixtures();
  check_graph_shape();
  check_bertscore_oracle();
  check_retrieval_oracle();
  check_rouge_fixtures();
  check_training_efficacy();
  check_supervision_contrast();
  check_pipeline_determinism();
  check_resume();
  if (g_failures) {
    std::cout << g_failures << " acceptance check(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all acceptance checks passed" << std::endl;
  return 0;
}
