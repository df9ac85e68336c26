#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gor/graph.hpp"
#include "gor/tensor.hpp"

namespace gor {

struct GatConfig {
  std::size_t in_dim = 768;
  std::size_t hidden_per_head = 192;  // heads * hidden_per_head must equal in_dim
  std::size_t heads = 4;
  std::size_t out_dim = 768;
  double leaky_slope = 0.2;
  double dropout_p = 0.0;
};

struct HeadParams {
  Mat w;      // fan_in x head_dim
  Mat a_src;  // 1 x head_dim
  Mat a_dst;  // 1 x head_dim
};

struct GatLayer {
  std::vector<HeadParams> heads;
  Mat bias;  // 1 x layer output width
};

/// Two attention layers: layer 1 concatenates heads and applies ELU, layer 2
/// averages heads with identity output so dot products with the frozen query
/// encoder stay unbounded.
struct GatModel {
  GatConfig config;
  GatLayer layer1;
  GatLayer layer2;

  static GatModel init(const GatConfig& config, std::uint64_t seed);

  /// Visits every parameter tensor in a fixed order (optimizer state and
  /// checkpoints rely on this order).
  void for_each_param(const std::function<void(Mat&)>& fn);
  void for_each_param(const std::function<void(const Mat&)>& fn) const;

  GatModel zeros_like() const;
};

/// Message-passing neighborhoods: provenance edges symmetrized, self-loops on
/// every node, duplicates removed. Neighbor lists are sorted for determinism.
struct Adjacency {
  std::size_t n = 0;
  std::vector<std::vector<std::size_t>> in_neighbors;

  static Adjacency from_graph(const GraphOfRecords& g);
  static Adjacency from_edges(std::size_t n, const std::vector<Edge>& edges);
};

struct HeadCache {
  Mat z;                              // n x head_dim
  std::vector<double> score_pre;      // per edge, before leaky rectification
  std::vector<double> alpha;          // per edge, post softmax
  std::vector<double> alpha_dropped;  // per edge, post attention dropout
};

struct LayerCache {
  Mat x_drop;                     // layer input after feature dropout
  std::vector<double> drop_mask;  // per entry scale (1/(1-p) or 0); empty if no dropout
  std::vector<HeadCache> heads;
  Mat combined_pre;  // after head combination and bias, before activation
  Mat activated;     // layer output
};

struct ForwardCache {
  const Adjacency* adj = nullptr;
  Adjacency owned_adj;                    // backing storage for the graph overload
  std::vector<std::size_t> edge_offsets;  // CSR offsets into per-edge arrays
  LayerCache l1, l2;
  bool training = false;
};

/// Final-layer node embeddings for all nodes; `cache` (optional) keeps the
/// activations needed by gat_backward. Dropout masks are a pure function of
/// `seed`, so repeated calls are bit-identical.
Mat gat_forward(const Adjacency& adj, const Mat& x0, const GatModel& model, bool training,
                std::uint64_t seed, ForwardCache* cache = nullptr);

Mat gat_forward(const GraphOfRecords& g, const GatModel& model, bool training,
                std::uint64_t seed, ForwardCache* cache = nullptr);

/// Exact gradients of the cached forward pass under its fixed dropout masks.
GatModel gat_backward(const GatModel& model, const ForwardCache& cache,
                      const Mat& upstream_grad);

Mat init_embedding_matrix(const GraphOfRecords& g);

// --- optimizer and schedule ---

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t step = 0;
};

AdamState adam_init(const GatModel& model);
void adam_step(GatModel& model, const GatModel& grads, AdamState& state, double lr,
               const AdamConfig& cfg = {});

/// Linear decay from base_lr at epoch 0 to zero at total_epochs.
double lr_at(std::size_t epoch, std::size_t total_epochs = 150, double base_lr = 1e-3);

// --- model (de)serialization ---

std::string model_to_json(const GatModel& model, const AdamState* adam = nullptr);
GatModel model_from_json(const std::string& json_text, AdamState* adam = nullptr);

}  // namespace gor
