#include "gor/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "gor/util.hpp"
#include "json.hpp"

namespace gor {

namespace {

constexpr int kCheckpointSchemaVersion = 1;

void append_step_log(const std::string& path, const StepLog& s) {
  if (path.empty()) return;
  nlohmann::json j{{"epoch", s.epoch},   {"batch", s.batch},     {"l_cl", s.l_cl},
                   {"l_rank", s.l_rank}, {"total", s.total},     {"entropy", s.entropy},
                   {"lr", s.lr}};
  std::ofstream out(path, std::ios::app);
  out << j.dump() << "\n";
}

}  // namespace

std::vector<SupervisedPair> build_supervised_pairs(const GraphOfRecords& g, const Document& doc,
                                                   std::size_t n_copies) {
  if (doc.reference_summaries.empty()) {
    throw GorError("trainer", "document " + doc.doc_id + " has no reference summary");
  }
  (void)g;
  std::vector<SupervisedPair> pairs;
  pairs.reserve(n_copies);
  for (std::size_t i = 0; i < n_copies; ++i) {
    pairs.push_back({kGlobalSummaryQuery, doc.reference_summaries.front()});
  }
  return pairs;
}

Checkpoint train(const std::vector<GraphOfRecords>& graphs,
                 const std::vector<std::vector<RankingList>>& rankings,
                 const TrainConfig& config, const EmbeddingProvider& emb,
                 const Checkpoint* resume) {
  std::vector<std::vector<std::string>> queries(graphs.size());
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    for (const auto& p : graphs[g].training_pairs) queries[g].push_back(p.query);
  }
  return train(graphs, queries, rankings, config, emb, resume);
}

Checkpoint train(const std::vector<GraphOfRecords>& graphs,
                 const std::vector<std::vector<std::string>>& queries,
                 const std::vector<std::vector<RankingList>>& rankings,
                 const TrainConfig& config, const EmbeddingProvider& emb,
                 const Checkpoint* resume) {
  if (graphs.empty()) throw GorError("trainer", "no graphs to train on");
  if (queries.size() != graphs.size() || rankings.size() != graphs.size()) {
    throw GorError("trainer", "graphs/queries/rankings count mismatch");
  }
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    if (queries[g].size() != rankings[g].size() || queries[g].empty()) {
      throw GorError("trainer", "rankings do not match training pairs for graph " +
                                    graphs[g].doc_id);
    }
    for (const auto& rl : rankings[g]) {
      if (rl.ordered_nodes.size() != graphs[g].nodes.size()) {
        throw GorError("trainer",
                       "ranking list is not a permutation of graph " + graphs[g].doc_id);
      }
    }
  }

  // frozen inputs: adjacency, initial features, query embeddings
  std::vector<Adjacency> adjs;
  std::vector<Mat> x0s;
  std::vector<std::vector<Vec>> q_embs(graphs.size());
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    adjs.push_back(Adjacency::from_graph(graphs[g]));
    x0s.push_back(init_embedding_matrix(graphs[g]));
    for (const auto& q : queries[g]) q_embs[g].push_back(emb.embed_query(q));
  }

  Checkpoint ckpt;
  if (resume) {
    if (resume->config_hash != config.config_hash) {
      throw GorError("trainer", "resume checkpoint config hash mismatch");
    }
    ckpt = *resume;
  } else {
    ckpt.model = GatModel::init(config.gat, derive_seed(config.seed, "model-init"));
    ckpt.adam = adam_init(ckpt.model);
    ckpt.epoch = 0;
    ckpt.seed = config.seed;
    ckpt.config_hash = config.config_hash;
  }

  const std::size_t batch_size = std::max<std::size_t>(1, config.batch_size);
  if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);

  const std::size_t end_epoch =
      config.stop_epoch > 0 ? std::min(config.stop_epoch, config.epochs) : config.epochs;
  for (std::size_t epoch = ckpt.epoch; epoch < end_epoch; ++epoch) {
    std::vector<std::size_t> order(graphs.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(config.seed, "epoch-shuffle", epoch));
    shuffle_rng.shuffle(order);

    const double lr = lr_at(epoch, config.epochs, config.base_lr);

    std::size_t step = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += batch_size, ++step) {
      const std::size_t b1 = std::min(b0 + batch_size, order.size());

      std::vector<Mat> embs(b1 - b0);
      std::vector<ForwardCache> caches(b1 - b0);
      std::vector<const Mat*> emb_ptrs(b1 - b0);
      std::vector<BatchItem> batch;
      for (std::size_t i = b0; i < b1; ++i) {
        const std::size_t g = order[i];
        const std::size_t slot = i - b0;
        embs[slot] = gat_forward(adjs[g], x0s[g], ckpt.model, /*training=*/true,
                                 derive_seed(config.seed, "dropout", epoch, g), &caches[slot]);
        emb_ptrs[slot] = &embs[slot];
        for (std::size_t p = 0; p < queries[g].size(); ++p) {
          BatchItem item;
          item.graph_index = slot;
          item.q_emb = q_embs[g][p];
          item.ranking = &rankings[g][p];
          batch.push_back(std::move(item));
        }
      }

      LossConfig lcfg = config.loss;
      lcfg.seed = derive_seed(config.seed, "pair-sample", epoch, step);
      std::vector<Mat> dh;
      dh.reserve(embs.size());
      for (const Mat& m : embs) dh.emplace_back(m.rows, m.cols);
      const LossReport report = total_loss(batch, emb_ptrs, lcfg, &dh);
      if (!std::isfinite(report.total)) {
        throw GorError("trainer", "non-finite loss at epoch " + std::to_string(epoch) +
                                      " step " + std::to_string(step));
      }

      GatModel grads = ckpt.model.zeros_like();
      for (std::size_t slot = 0; slot < embs.size(); ++slot) {
        GatModel gg = gat_backward(ckpt.model, caches[slot], dh[slot]);
        std::vector<const Mat*> src;
        gg.for_each_param([&](const Mat& m) { src.push_back(&m); });
        std::size_t t = 0;
        grads.for_each_param([&](Mat& m) { add_inplace(m, *src[t++]); });
      }
      adam_step(ckpt.model, grads, ckpt.adam, lr);

      StepLog log{epoch, step, report.l_cl, report.l_rank, report.total, report.entropy, lr};
      ckpt.trace.push_back(log);
      append_step_log(config.log_path, log);
    }

    ckpt.epoch = epoch + 1;
    if (!config.out_dir.empty() && config.checkpoint_interval > 0 &&
        ckpt.epoch % config.checkpoint_interval == 0 && ckpt.epoch != config.epochs) {
      save_checkpoint(ckpt, config.out_dir + "/epoch" + std::to_string(ckpt.epoch) + ".ckpt");
    }
  }

  if (!config.out_dir.empty()) {
    std::filesystem::create_directories(config.out_dir);
    save_checkpoint(ckpt, config.out_dir + "/epoch" + std::to_string(ckpt.epoch) + ".ckpt");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  nlohmann::json j;
  j["version"] = kCheckpointSchemaVersion;
  j["epoch"] = ckpt.epoch;
  j["seed"] = ckpt.seed;
  j["config_hash"] = ckpt.config_hash;
  j["model"] = nlohmann::json::parse(model_to_json(ckpt.model, &ckpt.adam));
  j["trace"] = nlohmann::json::array();
  for (const auto& s : ckpt.trace) {
    j["trace"].push_back({{"epoch", s.epoch},   {"batch", s.batch},     {"l_cl", s.l_cl},
                          {"l_rank", s.l_rank}, {"total", s.total},     {"entropy", s.entropy},
                          {"lr", s.lr}});
  }
  const auto dir = std::filesystem::path(path).parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  write_file(path, j.dump() + "\n");
}

Checkpoint load_checkpoint(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw GorError("parse", std::string("checkpoint: ") + e.what());
  }
  if (j.value("version", -1) != kCheckpointSchemaVersion) {
    throw GorError("version", "checkpoint schema version mismatch");
  }
  Checkpoint ckpt;
  ckpt.epoch = j.at("epoch").get<std::size_t>();
  ckpt.seed = j.at("seed").get<std::uint64_t>();
  ckpt.config_hash = j.at("config_hash").get<std::string>();
  ckpt.model = model_from_json(j.at("model").dump(), &ckpt.adam);
  for (const auto& sj : j.at("trace")) {
    StepLog s;
    s.epoch = sj.at("epoch").get<std::size_t>();
    s.batch = sj.at("batch").get<std::size_t>();
    s.l_cl = sj.at("l_cl").get<double>();
    s.l_rank = sj.at("l_rank").get<double>();
    s.total = sj.at("total").get<double>();
    s.entropy = sj.at("entropy").get<double>();
    s.lr = sj.at("lr").get<double>();
    ckpt.trace.push_back(s);
  }
  return ckpt;
}

}  // namespace gor
