#pragma once

#include <cstdint>

#include "gor/gat.hpp"
#include "gor/objective.hpp"

namespace gor {

struct GradCheckOptions {
  std::size_t n_nodes = 6;
  std::size_t in_dim = 8;
  std::size_t heads = 2;
  std::size_t hidden_per_head = 4;
  std::size_t out_dim = 8;
  std::size_t n_pairs = 3;
  double tau = 0.07;
  double alpha = 0.5;
  double dropout_p = 0.0;
  double fd_step = 1e-4;
};

/// Builds a random small graph, composes gat_forward with the combined loss,
/// and compares analytic parameter gradients against central finite
/// differences. Returns the max relative error over all parameters.
double grad_check(std::uint64_t seed, const GradCheckOptions& opts = {});

}  // namespace gor
