#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "common.hpp"
#include "sem_linear.hpp"

namespace tearlearn {

/// Two-layer perceptron ReLU(X W1^T + b1) W2^T + b2.
struct MlpParams {
  Matrix w1;  // hidden x in
  Vector b1;  // hidden
  Matrix w2;  // out x hidden
  Vector b2;  // out

  int in() const { return static_cast<int>(w1.cols()); }
  int hidden() const { return static_cast<int>(w1.rows()); }
  int out() const { return static_cast<int>(w2.rows()); }
  void validate() const;

  static MlpParams zeros(int in, int hidden, int out);
  /// Uniform in +-1/sqrt(fan_in) for weights and biases.
  static MlpParams random(int in, int hidden, int out, std::mt19937_64& rng);

  friend bool operator==(const MlpParams&, const MlpParams&) = default;
};

RowMatrix mlp_forward(const MlpParams& p, const RowMatrix& x);

struct GnnArch {
  int latent_dim = 1;   // m
  int hidden = 16;
  int samples = 1;      // L, Monte-Carlo draws per loss evaluation
};

/// Encoder/decoder pair coupled through (I - A^T).
///
/// Every sample contributes one row per node; matrices that carry per-node
/// values for all samples use (n*d) rows ordered node-major, row = node*n + s.
/// With that ordering an (n*d) x k row-major block is also a d x (n*k)
/// row-major matrix, which is what (I - A^T) multiplies.
struct GnnModel {
  Matrix a;
  MlpParams encoder;  // in 1, out 2*latent_dim
  MlpParams decoder;  // in latent_dim, out 2 (mean and log-std of the node value)
  int latent_dim = 1;
  int sample_count = 1;

  int d() const { return static_cast<int>(a.rows()); }
  void validate() const;
  static GnnModel init(int d, const GnnArch& arch, std::uint64_t seed, double a_scale = 0.1);

  friend bool operator==(const GnnModel&, const GnnModel&) = default;
};

/// (n*d) x 1 node-major column of the data.
RowMatrix node_major(const Dataset& x);

struct GaussianHalves {
  RowMatrix mean;     // (n*d) x k
  RowMatrix log_std;  // (n*d) x k
};

/// [M_Z | log S_Z] = (I - A^T) MLP(X).
GaussianHalves encode(const GnnModel& model, const Dataset& x);

/// [M_X | log S_X] = MLP((I - A^T)^-1 Z); Z is (n*d) x latent_dim node-major.
GaussianHalves decode(const GnnModel& model, const RowMatrix& z, int n);

/// Thrown when (I - A^T) is numerically singular.
class SingularCoupling : public Error {
 public:
  explicit SingularCoupling(double sigma_min);
  double sigma_min() const noexcept { return sigma_min_; }

 private:
  double sigma_min_;
};

inline constexpr double kStdFloor = 1e-6;
inline constexpr double kSingularThreshold = 1e-8;

/// Standard normal draws, one (n*d) x latent_dim block per Monte-Carlo sample.
std::vector<RowMatrix> draw_noise(int n, int d, int latent_dim, int samples, std::mt19937_64& rng);

struct ElboParts {
  double kl = 0.0;
  double recon = 0.0;
  double total() const { return kl + recon; }
};

/// KL = 1/2 sum (S^2 + M^2 - 2 log S - 1) over every latent entry;
/// recon = 1/L sum_l sum [ (X - M_X)^2 / (2 S_X^2) + log S_X ].
/// Standard deviations are floored at kStdFloor.
ElboParts elbo_loss(const GnnModel& model, const Dataset& x, std::span<const RowMatrix> noise);

struct GnnGradient {
  Matrix a;
  MlpParams encoder;
  MlpParams decoder;
};

struct ElboEvaluation {
  ElboParts parts;
  GnnGradient grad;  // of parts.total()
};

/// Loss and its exact gradient with respect to every parameter.
ElboEvaluation elbo_with_gradient(const GnnModel& model, const Dataset& x, std::span<const RowMatrix> noise);

struct GnnTrainResult {
  TrainResult train;
  GnnModel best_model;   // parameters at the best reconstruction loss
  GnnModel final_model;
  int rejected_steps = 0;
};

/// Augmented-Lagrangian training of the whole model. The data term is the
/// ELBO divided by n; best-iterate tracking uses the per-sample
/// reconstruction term evaluated on one fixed noise draw, so `loss_best` can
/// be recomputed from `best_model`.
GnnTrainResult train_daggnn(const Dataset& x, const TrainConfig& cfg, const GnnArch& arch);

/// Adam, mini-batches of 100, 100 epochs per outer step, polynomial
/// acyclicity with gamma = 1/d.
TrainConfig daggnn_default_config(int d);

}  // namespace tearlearn
