#pragma once

#include <cstdint>
#include <random>

#include "common.hpp"

namespace tearlearn {

struct GroundTruth {
  WeightMatrix w;  // strictly upper triangular, entry (i, j) = edge i -> j
  std::uint64_t seed = 0;
};

struct WeightRange {
  double low = 0.5;
  double high = 2.0;
};

/// Each upper-triangle slot is an edge with probability `edge_prob`; weights
/// have magnitude uniform in [low, high] and a random sign.
GroundTruth random_triangular_w(int d, double edge_prob, WeightRange range, std::uint64_t seed);

/// Nonlinear SEM: node j = tanh(s) + cos(s) + sin(s) + z_j with
/// s = sum_i X_i W(i, j), generated in node order. `noise_scale` multiplies the
/// standard normal z (1 in normal use; 0 gives the noiseless map).
Dataset sample_nonlinear(const GroundTruth& truth, int n, std::uint64_t noise_seed, double noise_scale = 1.0);

/// Strictly-lower triangle and diagonal Forbidden, upper triangle Unknown.
PriorSpec prior_lower_triangular(int d);

}  // namespace tearlearn
