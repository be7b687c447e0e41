#include "datagen.hpp"

#include <cmath>

namespace tearlearn {

GroundTruth random_triangular_w(int d, double edge_prob, WeightRange range, std::uint64_t seed) {
  if (d < 1) throw Error(ErrorCode::kUsage, "d must be >= 1");
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw Error(ErrorCode::kUsage, "edge_prob must lie in [0, 1]");
  if (!(range.low > 0.0 && range.high >= range.low)) {
    throw Error(ErrorCode::kUsage, "weight range must satisfy 0 < low <= high");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> magnitude(range.low, range.high);
  Matrix w = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      // always draw all three numbers so the stream layout does not depend on edge_prob
      const double u = unit(rng);
      const double mag = magnitude(rng);
      const double sgn = unit(rng) < 0.5 ? -1.0 : 1.0;
      if (u < edge_prob) w(i, j) = sgn * mag;
    }
  }
  return {WeightMatrix(std::move(w)), seed};
}

Dataset sample_nonlinear(const GroundTruth& truth, int n, std::uint64_t noise_seed, double noise_scale) {
  const Matrix& w = truth.w.values();
  const int d = truth.w.dim();
  if (n < 1) throw Error(ErrorCode::kUsage, "n must be >= 1");
  if (d < 2) throw Error(ErrorCode::kUsage, "need at least two variables");
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j <= i; ++j) {
      if (w(i, j) != 0.0) throw Error(ErrorCode::kStructure, "ground-truth W must be strictly upper triangular");
    }
  }
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, d);
  // noise drawn sample by sample so a prefix of n rows is stable across n
  for (int s = 0; s < n; ++s) {
    for (int j = 0; j < d; ++j) z(s, j) = noise_scale * normal(rng);
  }
  Matrix x = Matrix::Zero(n, d);
  for (int j = 0; j < d; ++j) {
    const Vector s = x.leftCols(j) * w.col(j).head(j);
    x.col(j) = s.array().tanh() + s.array().cos() + s.array().sin() + z.col(j).array();
  }
  return Dataset(std::move(x));
}

PriorSpec prior_lower_triangular(int d) {
  if (d < 2) throw Error(ErrorCode::kUsage, "d must be >= 2");
  PriorSpec p(d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < i; ++j) p.set(i, j, EdgePrior::kForbidden);
  }
  return p;
}

}  // namespace tearlearn
