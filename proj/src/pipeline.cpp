#include "gor/pipeline.hpp"

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gor/simscore.hpp"
#include "gor/util.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace gor {

namespace {

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) {
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  }
  return out;
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

nlohmann::json train_to_json(const TrainConfig& t) {
  return {{"batch_size", t.batch_size},
          {"epochs", t.epochs},
          {"base_lr", t.base_lr},
          {"mode", t.mode == TrainMode::SelfSupervised ? "self_supervised" : "supervised"},
          {"checkpoint_interval", t.checkpoint_interval},
          {"gat",
           {{"in_dim", t.gat.in_dim},
            {"hidden_per_head", t.gat.hidden_per_head},
            {"heads", t.gat.heads},
            {"out_dim", t.gat.out_dim},
            {"leaky_slope", t.gat.leaky_slope},
            {"dropout", t.gat.dropout_p}}},
          {"loss",
           {{"tau", t.loss.tau},
            {"alpha", t.loss.alpha},
            {"max_rank_pairs", t.loss.max_rank_pairs},
            {"full_pair_threshold", t.loss.full_pair_threshold},
            {"use_in_batch_negatives", t.loss.use_in_batch_negatives},
            {"in_batch_all_nodes", t.loss.in_batch_all_nodes}}}};
}

void train_from_json(const nlohmann::json& j, TrainConfig& t) {
  t.batch_size = j.value("batch_size", t.batch_size);
  t.epochs = j.value("epochs", t.epochs);
  t.base_lr = j.value("base_lr", t.base_lr);
  const std::string mode = j.value("mode", std::string("self_supervised"));
  if (mode == "self_supervised") {
    t.mode = TrainMode::SelfSupervised;
  } else if (mode == "supervised") {
    t.mode = TrainMode::Supervised;
  } else {
    throw GorError("config", "unknown training mode: " + mode);
  }
  t.checkpoint_interval = j.value("checkpoint_interval", t.checkpoint_interval);
  if (j.contains("gat")) {
    const auto& g = j["gat"];
    t.gat.in_dim = g.value("in_dim", t.gat.in_dim);
    t.gat.hidden_per_head = g.value("hidden_per_head", t.gat.hidden_per_head);
    t.gat.heads = g.value("heads", t.gat.heads);
    t.gat.out_dim = g.value("out_dim", t.gat.out_dim);
    t.gat.leaky_slope = g.value("leaky_slope", t.gat.leaky_slope);
    t.gat.dropout_p = g.value("dropout", t.gat.dropout_p);
  }
  if (j.contains("loss")) {
    const auto& l = j["loss"];
    t.loss.tau = l.value("tau", t.loss.tau);
    t.loss.alpha = l.value("alpha", t.loss.alpha);
    t.loss.max_rank_pairs = l.value("max_rank_pairs", t.loss.max_rank_pairs);
    t.loss.full_pair_threshold = l.value("full_pair_threshold", t.loss.full_pair_threshold);
    t.loss.use_in_batch_negatives =
        l.value("use_in_batch_negatives", t.loss.use_in_batch_negatives);
    t.loss.in_batch_all_nodes = l.value("in_batch_all_nodes", t.loss.in_batch_all_nodes);
  }
}

struct LoadedGraphs {
  std::vector<GraphOfRecords> graphs;
  std::vector<std::vector<RankingList>> rankings;
  std::vector<std::string> doc_ids;
};

LoadedGraphs load_built_artifacts(const PipelineConfig& cfg) {
  const std::vector<Document> docs = load_documents(cfg.dataset_path);
  const std::string want_hash = config_hash(cfg);
  LoadedGraphs out;
  for (const auto& doc : docs) {
    const std::string base = cfg.out_dir + "/" + sanitize(doc.doc_id);
    const std::string gpath = base + ".graph.json";
    const std::string rpath = base + ".rankings.json";
    if (!fs::exists(gpath) || !fs::exists(rpath)) {
      throw GorError("pipeline", "missing built artifact for document " + doc.doc_id +
                                     " (expected " + gpath + "); run `build` first");
    }
    std::string ghash, rhash;
    GraphOfRecords g = load_graph(gpath, &ghash);
    std::vector<RankingList> r = load_rankings(g, rpath, &rhash);
    if (!cfg.force && (ghash != want_hash || rhash != want_hash)) {
      throw GorError("pipeline", "config hash mismatch for document " + doc.doc_id +
                                     "; rebuild or pass --force");
    }
    out.doc_ids.push_back(doc.doc_id);
    out.graphs.push_back(std::move(g));
    out.rankings.push_back(std::move(r));
  }
  return out;
}

}  // namespace

PipelineConfig config_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw GorError("config", std::string("config: ") + e.what());
  }
  PipelineConfig cfg;
  cfg.dataset_path = j.value("dataset", cfg.dataset_path);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  cfg.provider_mode = j.value("provider_mode", cfg.provider_mode);
  cfg.embed_dim = j.value("embed_dim", cfg.embed_dim);
  cfg.token_dim = j.value("token_dim", cfg.token_dim);
  cfg.chunk_size = j.value("chunk_size", cfg.chunk_size);
  cfg.overlap = j.value("overlap", cfg.overlap);
  cfg.n_queries = j.value("n_queries", cfg.n_queries);
  cfg.k = j.value("k", cfg.k);
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("train")) train_from_json(j["train"], cfg.train);
  cfg.train.seed = cfg.seed;
  return cfg;
}

std::string config_to_json(const PipelineConfig& cfg) {
  nlohmann::json j{{"dataset", cfg.dataset_path},
                   {"out_dir", cfg.out_dir},
                   {"provider_mode", cfg.provider_mode},
                   {"embed_dim", cfg.embed_dim},
                   {"token_dim", cfg.token_dim},
                   {"chunk_size", cfg.chunk_size},
                   {"overlap", cfg.overlap},
                   {"n_queries", cfg.n_queries},
                   {"k", cfg.k},
                   {"seed", cfg.seed},
                   {"train", train_to_json(cfg.train)}};
  return j.dump(2) + "\n";
}

PipelineConfig load_config(const std::string& path) {
  return config_from_json(read_file(path));
}

std::string config_hash(const PipelineConfig& cfg) {
  nlohmann::json j{{"provider_mode", cfg.provider_mode},
                   {"embed_dim", cfg.embed_dim},
                   {"token_dim", cfg.token_dim},
                   {"chunk_size", cfg.chunk_size},
                   {"overlap", cfg.overlap},
                   {"n_queries", cfg.n_queries},
                   {"k", cfg.k},
                   {"seed", cfg.seed},
                   {"train", train_to_json(cfg.train)}};
  return sha256_hex(j.dump()).substr(0, 16);
}

Providers make_providers(const PipelineConfig& cfg) {
  if (cfg.provider_mode == "deterministic") {
    return Providers{EmbeddingProvider::deterministic(cfg.embed_dim),
                     TokenEmbedder::deterministic(cfg.token_dim), LlmClient::canned()};
  }
  if (cfg.provider_mode == "live") {
    HttpEndpoint llm_ep;
    llm_ep.base_url = env_or("GOR_LLM_BASE_URL", "");
    llm_ep.api_key = env_or("GOR_LLM_API_KEY", "");
    llm_ep.model = env_or("GOR_LLM_MODEL", "default");
    HttpEndpoint emb_ep;
    emb_ep.base_url = env_or("GOR_EMBED_BASE_URL", "");
    emb_ep.api_key = env_or("GOR_EMBED_API_KEY", "");
    emb_ep.model = env_or("GOR_EMBED_MODEL", "default");
    if (llm_ep.base_url.empty() || emb_ep.base_url.empty()) {
      throw GorError("config",
                     "live provider mode needs GOR_LLM_BASE_URL and GOR_EMBED_BASE_URL");
    }
    // Token-level embeddings stay deterministic: greedy-matching supervision
    // is precomputed locally even against live retrieval endpoints.
    return Providers{EmbeddingProvider::live(emb_ep, emb_ep, cfg.embed_dim),
                     TokenEmbedder::deterministic(cfg.token_dim),
                     LlmClient::live(llm_ep, cfg.out_dir + "/llm_cache.jsonl")};
  }
  throw GorError("config", "unknown provider mode: " + cfg.provider_mode);
}

BuildResult cmd_build(const PipelineConfig& cfg) {
  if (cfg.dataset_path.empty() || cfg.out_dir.empty()) {
    throw GorError("config", "build needs dataset and out_dir");
  }
  fs::create_directories(cfg.out_dir);
  const std::vector<Document> docs = load_documents(cfg.dataset_path);
  const Providers prov = make_providers(cfg);
  const std::string hash = config_hash(cfg);

  BuildResult result;
  for (const auto& doc : docs) {
    const std::string base = cfg.out_dir + "/" + sanitize(doc.doc_id);
    const std::string gpath = base + ".graph.json";
    const std::string rpath = base + ".rankings.json";
    result.graph_paths.push_back(gpath);
    result.rankings_paths.push_back(rpath);

    if (fs::exists(gpath) && fs::exists(rpath)) {
      try {
        std::string ghash, rhash;
        GraphOfRecords g = load_graph(gpath, &ghash);
        load_rankings(g, rpath, &rhash);
        if (ghash == hash && rhash == hash) {
          std::cerr << "build: " << doc.doc_id << " up to date, skipping\n";
          ++result.skipped;
          continue;
        }
        if (!cfg.force) {
          throw GorError("pipeline", "existing artifacts for " + doc.doc_id +
                                         " were built with a different config; "
                                         "remove them or pass --force");
        }
      } catch (const GorError& e) {
        if (e.category() == "pipeline") throw;
        std::cerr << "build: " << doc.doc_id << " artifacts unreadable, rebuilding ("
                  << e.what() << ")\n";
      }
    }

    const std::vector<Chunk> chunks = split_chunks(doc, cfg.chunk_size, cfg.overlap);
    BuildOptions opts;
    opts.n_queries = cfg.n_queries;
    opts.k = cfg.k;
    opts.seed = cfg.seed;
    GraphOfRecords g = build_graph(chunks, opts, prov.llm, prov.emb);

    std::vector<RankingList> rankings;
    if (cfg.train.mode == TrainMode::Supervised) {
      const auto pairs = build_supervised_pairs(g, doc, cfg.n_queries);
      std::vector<std::string> labels;
      for (const auto& p : pairs) labels.push_back(p.label_text);
      rankings = precompute_rankings_for_labels(g, labels, prov.tok);
    } else {
      rankings = precompute_rankings(g, prov.tok);
    }

    save_graph(g, gpath, hash);
    save_rankings(g, rankings, rpath, hash);
    ++result.built;
  }
  return result;
}

TrainResult cmd_train(const PipelineConfig& cfg, const std::string& resume_path) {
  LoadedGraphs built = load_built_artifacts(cfg);
  const Providers prov = make_providers(cfg);

  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  tc.out_dir = cfg.out_dir;
  tc.log_path = cfg.out_dir + "/train_log.jsonl";
  tc.config_hash = config_hash(cfg);

  std::vector<std::vector<std::string>> queries(built.graphs.size());
  for (std::size_t g = 0; g < built.graphs.size(); ++g) {
    if (tc.mode == TrainMode::Supervised) {
      queries[g].assign(built.rankings[g].size(), kGlobalSummaryQuery);
    } else {
      for (const auto& p : built.graphs[g].training_pairs) queries[g].push_back(p.query);
    }
  }

  std::optional<Checkpoint> resume;
  if (!resume_path.empty()) {
    resume = load_checkpoint(resume_path);
  } else {
    std::error_code ec;
    fs::remove(tc.log_path, ec);  // fresh run, fresh log
  }

  TrainResult result;
  result.checkpoint = train(built.graphs, queries, built.rankings, tc, prov.emb,
                            resume ? &*resume : nullptr);
  result.checkpoint_path = cfg.out_dir + "/epoch" + std::to_string(result.checkpoint.epoch) +
                           ".ckpt";
  return result;
}

SummarizeResult cmd_summarize(const PipelineConfig& cfg, const std::string& checkpoint_path,
                              const std::string& query) {
  if (!fs::exists(checkpoint_path)) {
    throw GorError("pipeline", "checkpoint not found at " + checkpoint_path +
                                   "; run `train` first or pass --checkpoint");
  }
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  LoadedGraphs built = load_built_artifacts(cfg);
  if (!cfg.force && ckpt.config_hash != config_hash(cfg)) {
    throw GorError("pipeline", "checkpoint config hash mismatch; pass --force to override");
  }
  const Providers prov = make_providers(cfg);
  const std::string q = query.empty() ? kGlobalSummaryQuery : query;

  SummarizeResult result;
  result.output_path = cfg.out_dir + "/summaries.jsonl";
  std::ofstream out(result.output_path, std::ios::trunc);
  InferenceCache cache;
  for (std::size_t g = 0; g < built.graphs.size(); ++g) {
    SummaryRecord rec =
        summarize(q, built.graphs[g], ckpt.model, prov.llm, prov.emb, cfg.k, &cache);
    nlohmann::json j = nlohmann::json::parse(summary_record_to_json(rec));
    j["doc_id"] = built.doc_ids[g];
    out << j.dump() << "\n";
    result.doc_ids.push_back(built.doc_ids[g]);
    result.records.push_back(std::move(rec));
  }
  return result;
}

EvalResult cmd_eval(const PipelineConfig& cfg, const std::string& predictions_path) {
  const std::vector<Document> docs = load_documents(cfg.dataset_path);
  std::ifstream in(predictions_path);
  if (!in) throw GorError("io", "cannot open predictions: " + predictions_path);
  std::vector<std::pair<std::string, std::string>> predictions;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      predictions.emplace_back(j.at("doc_id").get<std::string>(),
                               j.at("summary").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw GorError("eval", "predictions line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (predictions.empty()) throw GorError("eval", "predictions file has no records");

  EvalResult result;
  result.report = evaluate(predictions, docs);
  result.report_path = cfg.out_dir + "/eval_report.json";
  fs::create_directories(cfg.out_dir);
  write_file(result.report_path, report_to_json(result.report));
  return result;
}

EvalResult run_pipeline(const PipelineConfig& cfg) {
  cmd_build(cfg);
  TrainResult tr = cmd_train(cfg);
  SummarizeResult sr = cmd_summarize(cfg, tr.checkpoint_path);
  return cmd_eval(cfg, sr.output_path);
}

}  // namespace gor
