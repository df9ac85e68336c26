#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "gor/gradcheck.hpp"
#include "gor/pipeline.hpp"
#include "gor/util.hpp"
#include "json.hpp"

namespace {

struct CliOverrides {
  std::string config_path;
  std::string dataset;
  std::string out_dir;
  std::string mode;
  std::string provider_mode;
  long long seed = -1;
  long long epochs = -1;
  long long n_queries = -1;
  long long k = -1;
  double alpha = -1.0;
  double tau = -1.0;
  double dropout = -1.0;
  bool force = false;
};

void add_common(CLI::App* cmd, CliOverrides& o) {
  cmd->add_option("--config", o.config_path, "pipeline config JSON file");
  cmd->add_option("--dataset", o.dataset, "dataset JSONL path");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--seed", o.seed, "root seed");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--n-queries", o.n_queries, "simulated queries per document");
  cmd->add_option("--k", o.k, "retrieval depth");
  cmd->add_option("--alpha", o.alpha, "ranking-loss weight");
  cmd->add_option("--tau", o.tau, "similarity temperature");
  cmd->add_option("--dropout", o.dropout, "GAT dropout rate");
  cmd->add_option("--mode", o.mode, "self_supervised | supervised");
  cmd->add_option("--provider-mode", o.provider_mode, "deterministic | live");
  cmd->add_flag("--force", o.force, "combine artifacts despite config-hash mismatch");
}

gor::PipelineConfig resolve(const CliOverrides& o) {
  gor::PipelineConfig cfg;
  if (!o.config_path.empty()) cfg = gor::load_config(o.config_path);
  if (!o.dataset.empty()) cfg.dataset_path = o.dataset;
  if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
  if (!o.provider_mode.empty()) cfg.provider_mode = o.provider_mode;
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (o.epochs >= 0) cfg.train.epochs = static_cast<std::size_t>(o.epochs);
  if (o.n_queries >= 0) cfg.n_queries = static_cast<std::size_t>(o.n_queries);
  if (o.k >= 0) cfg.k = static_cast<std::size_t>(o.k);
  if (o.alpha >= 0.0) cfg.train.loss.alpha = o.alpha;
  if (o.tau >= 0.0) cfg.train.loss.tau = o.tau;
  if (o.dropout >= 0.0) cfg.train.gat.dropout_p = o.dropout;
  if (!o.mode.empty()) {
    if (o.mode == "self_supervised") {
      cfg.train.mode = gor::TrainMode::SelfSupervised;
    } else if (o.mode == "supervised") {
      cfg.train.mode = gor::TrainMode::Supervised;
    } else {
      throw gor::GorError("config", "unknown mode: " + o.mode);
    }
  }
  cfg.train.seed = cfg.seed;
  cfg.force = o.force;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-of-records pipeline: build, train, summarize, eval"};
  app.require_subcommand(1);

  CliOverrides o;
  auto* build = app.add_subcommand("build", "ingest documents, build graphs and rankings");
  add_common(build, o);
  auto* train = app.add_subcommand("train", "train node embeddings on built graphs");
  add_common(train, o);
  std::string resume_path;
  train->add_option("--resume", resume_path, "checkpoint to resume from");
  bool run_grad_check = false;
  train->add_flag("--grad-check", run_grad_check, "verify gradients and exit");
  auto* summ = app.add_subcommand("summarize", "retrieve from the graph and generate summaries");
  add_common(summ, o);
  std::string checkpoint_path, query;
  bool global_query = false;
  summ->add_option("--checkpoint", checkpoint_path, "trained checkpoint path");
  summ->add_option("--query", query, "summarization query");
  summ->add_flag("--global", global_query, "use the global summarization query");
  auto* eval = app.add_subcommand("eval", "score predictions against reference summaries");
  add_common(eval, o);
  std::string predictions_path;
  eval->add_option("--predictions", predictions_path, "predictions JSONL")->required();
  auto* gc = app.add_subcommand("grad-check", "finite-difference gradient verification");
  add_common(gc, o);
  long long gc_seeds = 10;
  gc->add_option("--seeds", gc_seeds, "number of random seeds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) {
      gor::PipelineConfig cfg = resolve(o);
      auto res = gor::cmd_build(cfg);
      std::cout << "built " << res.built << " graph(s), skipped " << res.skipped << "\n";
    } else if (train->parsed()) {
      gor::PipelineConfig cfg = resolve(o);
      if (run_grad_check) {
        double worst = 0.0;
        for (long long s = 0; s < 10; ++s) {
          worst = std::max(worst, gor::grad_check(static_cast<std::uint64_t>(cfg.seed + s)));
        }
        std::cout << "grad-check max relative error: " << worst << "\n";
        return worst < 1e-4 ? 0 : 1;
      }
      auto res = gor::cmd_train(cfg, resume_path);
      std::cout << "checkpoint written to " << res.checkpoint_path << "\n";
    } else if (summ->parsed()) {
      gor::PipelineConfig cfg = resolve(o);
      if (checkpoint_path.empty()) {
        checkpoint_path =
            cfg.out_dir + "/epoch" + std::to_string(cfg.train.epochs) + ".ckpt";
      }
      const std::string q = global_query ? "" : query;
      auto res = gor::cmd_summarize(cfg, checkpoint_path, q);
      std::cout << "wrote " << res.records.size() << " summaries to " << res.output_path
                << "\n";
    } else if (eval->parsed()) {
      gor::PipelineConfig cfg = resolve(o);
      auto res = gor::cmd_eval(cfg, predictions_path);
      std::cout << gor::render_report(res.report) << "\n";
      std::cout << "report written to " << res.report_path << "\n";
    } else if (gc->parsed()) {
      gor::PipelineConfig cfg = resolve(o);
      double worst = 0.0;
      for (long long s = 0; s < gc_seeds; ++s) {
        const double err = gor::grad_check(static_cast<std::uint64_t>(cfg.seed + s));
        std::cout << "seed " << cfg.seed + s << ": max relative error " << err << "\n";
        worst = std::max(worst, err);
      }
      std::cout << "grad-check max relative error: " << worst << "\n";
      return worst < 1e-4 ? 0 : 1;
    }
  } catch (const gor::GorError& e) {
    nlohmann::json err{{"error", e.category()}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", "internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
