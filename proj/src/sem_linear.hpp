#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "acyclicity.hpp"
#include "common.hpp"

namespace tearlearn {

enum class Optimizer { kGradientDescent, kAdam };

struct TrainConfig {
  double lambda = 0.0;          // L1 coefficient
  double alpha0 = 0.0;          // initial Lagrange multiplier
  double beta0 = 1.0;           // initial penalty
  double beta_max = 1e4;
  int epochs = 300;             // passes over the data per outer step
  double learning_rate = 1e-2;
  AcyclicityMode h_mode;
  double h_tolerance = 1e-8;
  std::uint64_t seed = 0;
  int max_outer = 100;          // guards the case where beta never grows
  int batch_size = 0;           // 0 = full batch
  double grad_clip = 0.0;       // max-abs gradient entry, 0 = off
  double init_scale = 0.1;      // A starts uniform in [-init_scale, init_scale]
  Optimizer optimizer = Optimizer::kGradientDescent;

  /// Throws kUsage when an invariant is violated.
  void validate() const;
};

struct OuterRecord {
  int step = 0;
  double h = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double loss = 0.0;  // reconstruction loss of the iterate at the end of the step
  double l1 = 0.0;

  friend bool operator==(const OuterRecord&, const OuterRecord&) = default;
};

struct TrainResult {
  WeightMatrix a_best;
  double loss_best = 0.0;
  /// Entry 0 describes the initial matrix; entry k the end of outer step k.
  std::vector<OuterRecord> h_trajectory;
  double final_h = 0.0;  // h of the last iterate
  double best_h = 0.0;   // h of a_best
  bool converged = false;
  WeightMatrix a_final;
  int inner_steps = 0;
};

/// Thrown when the objective becomes non-finite. Carries everything recorded
/// up to the failure.
class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& what, TrainResult partial)
      : Error(ErrorCode::kNumerical, what), partial_(std::move(partial)) {}
  const TrainResult& partial() const noexcept { return partial_; }

 private:
  TrainResult partial_;
};

double lsq_loss(const Dataset& x, const Matrix& a);
Matrix lsq_grad(const Dataset& x, const Matrix& a);

/// lsq_loss + lambda |A|_1 + alpha h + beta/2 h^2
double augmented_loss(const Dataset& x, const Matrix& a, double alpha, double beta, double lambda,
                      const AcyclicityMode& mode);

TrainResult train_linear(const Dataset& x, const TrainConfig& cfg);

/// One un-regularised gradient step under the exponential-trace penalty:
/// A - lr [ (1/n) X^T (XA - X) + 2 alpha A o exp(A o A)^T ]. No diagonal pinning.
Matrix exp_penalty_step(const Dataset& x, const Matrix& a_k, double lr, double alpha);

/// Max-abs entry of
///   A_k o A_k - { A_next o A_next + lr G o (A_next + A_k) }
/// with G the gradient used by `exp_penalty_step`. Throws kUsage if A_next is
/// not that step's output.
double step_identity_residual(const Dataset& x, const Matrix& a_k, const Matrix& a_next, double lr, double alpha);

/// Adam moment estimates over a flat parameter vector.
class AdamState {
 public:
  explicit AdamState(Eigen::Index size) : m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}
  /// Bias-corrected step direction for `grad`; advances the step counter.
  Vector direction(const Vector& grad);

 private:
  Vector m_;
  Vector v_;
  int t_ = 0;
};

/// Uniform [-scale, scale] entries, zero diagonal.
Matrix random_init(int d, double scale, std::uint64_t seed);

namespace detail {

/// Hooks the augmented-Lagrangian driver calls into.
struct InnerModel {
  /// Current adjacency iterate.
  std::function<const Matrix&()> adjacency;
  /// One gradient step on data loss + L1 + (alpha + beta h) grad h. Returns
  /// the reconstruction loss of the updated iterate.
  std::function<double(double alpha, double beta, int step_index)> step;
  /// Reconstruction loss of the current iterate (used for the initial record).
  std::function<double()> loss;
  /// Called whenever the current iterate becomes the best one.
  std::function<void()> on_best;
};

TrainResult run_augmented_lagrangian(const TrainConfig& cfg, InnerModel& model);

}  // namespace detail

}  // namespace tearlearn
