#include "sem_linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace tearlearn {

namespace {

void check_dims(const Dataset& x, const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() != x.d()) {
    std::ostringstream os;
    os << "dimension mismatch: data has " << x.d() << " variables, matrix is " << a.rows() << "x" << a.cols();
    throw Error(ErrorCode::kStructure, os.str());
  }
}

double sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

void TrainConfig::validate() const {
  auto bad = [](const char* what) { throw Error(ErrorCode::kUsage, std::string("invalid training config: ") + what); };
  if (!(lambda >= 0.0)) bad("lambda must be >= 0");
  if (!(beta0 > 0.0)) bad("beta0 must be > 0");
  if (!(beta_max > 0.0)) bad("beta_max must be > 0");
  if (epochs < 1) bad("epochs must be >= 1");
  if (!(learning_rate > 0.0)) bad("learning_rate must be > 0");
  if (!(h_tolerance > 0.0)) bad("h_tolerance must be > 0");
  if (h_mode.kind == AcyclicityMode::Kind::kPolynomial && !(h_mode.gamma > 0.0)) bad("gamma must be > 0");
  if (max_outer < 0) bad("max_outer must be >= 0");
  if (batch_size < 0) bad("batch_size must be >= 0");
  if (!(grad_clip >= 0.0)) bad("grad_clip must be >= 0");
  if (!(init_scale >= 0.0)) bad("init_scale must be >= 0");
  // beta0 > beta_max is allowed and means zero outer iterations
}

double lsq_loss(const Dataset& x, const Matrix& a) {
  check_dims(x, a);
  const Matrix r = x.values() - x.values() * a;
  return r.squaredNorm() / (2.0 * x.n());
}

Matrix lsq_grad(const Dataset& x, const Matrix& a) {
  check_dims(x, a);
  const Matrix& X = x.values();
  return X.transpose() * (X * a - X) / static_cast<double>(x.n());
}

double augmented_loss(const Dataset& x, const Matrix& a, double alpha, double beta, double lambda,
                      const AcyclicityMode& mode) {
  const double h = acyclicity_value(a, mode);
  return lsq_loss(x, a) + lambda * a.cwiseAbs().sum() + alpha * h + 0.5 * beta * h * h;
}

Matrix random_init(int d, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix a(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) a(i, j) = (i == j || scale == 0.0) ? 0.0 : u(rng);
  }
  return a;
}

Vector AdamState::direction(const Vector& grad) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  ++t_;
  m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
  v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(kBeta1, t_);
  const double c2 = 1.0 - std::pow(kBeta2, t_);
  return (m_ / c1).array() / ((v_ / c2).array().sqrt() + kEps);
}

namespace detail {

TrainResult run_augmented_lagrangian(const TrainConfig& cfg, InnerModel& model) {
  cfg.validate();
  TrainResult r;
  double alpha = cfg.alpha0;
  double beta = cfg.beta0;

  auto fail = [&](const std::string& why) -> void {
    r.a_final = WeightMatrix::zero_diagonal(model.adjacency().allFinite() ? model.adjacency()
                                                                           : Matrix(r.a_best.values()));
    throw TrainingDiverged(why, r);
  };

  const double loss0 = model.loss();
  r.a_best = WeightMatrix::zero_diagonal(model.adjacency());
  r.loss_best = loss0;
  model.on_best();
  const double h0 = acyclicity_value(model.adjacency(), cfg.h_mode);
  r.h_trajectory.push_back({0, h0, alpha, beta, loss0, model.adjacency().cwiseAbs().sum()});

  double h_prev = std::numeric_limits<double>::infinity();
  int outer = 0;
  while (beta <= cfg.beta_max && outer < cfg.max_outer) {
    ++outer;
    for (int e = 0; e < cfg.epochs; ++e) {
      double loss = 0.0;
      try {
        loss = model.step(alpha, beta, r.inner_steps);
      } catch (const TrainingDiverged&) {
        throw;
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kNumerical) throw;
        fail(std::string("training diverged: ") + err.what());
      }
      ++r.inner_steps;
      if (!std::isfinite(loss) || !model.adjacency().allFinite()) {
        fail("training diverged at outer step " + std::to_string(outer) + ", inner step " + std::to_string(e));
      }
      if (loss < r.loss_best) {
        r.loss_best = loss;
        r.a_best = WeightMatrix::zero_diagonal(model.adjacency());
        model.on_best();
      }
    }
    double h = 0.0;
    try {
      h = acyclicity_value(model.adjacency(), cfg.h_mode);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kNumerical) throw;
      fail(std::string("training diverged: ") + err.what());
    }
    alpha += beta * h;
    if (std::abs(h) > 0.25 * std::abs(h_prev)) beta *= 10.0;
    h_prev = h;
    r.h_trajectory.push_back({outer, h, alpha, beta, model.loss(), model.adjacency().cwiseAbs().sum()});
    if (h <= cfg.h_tolerance) break;
  }

  r.a_final = WeightMatrix::zero_diagonal(model.adjacency());
  r.final_h = acyclicity_value(r.a_final.values(), cfg.h_mode);
  r.best_h = acyclicity_value(r.a_best.values(), cfg.h_mode);
  r.converged = r.final_h <= cfg.h_tolerance;
  return r;
}

}  // namespace detail

TrainResult train_linear(const Dataset& x, const TrainConfig& cfg) {
  cfg.validate();
  const int d = x.d();
  const int n = x.n();
  const Matrix& X = x.values();
  Matrix a = random_init(d, cfg.init_scale, cfg.seed);

  const bool full_batch = cfg.batch_size == 0 || cfg.batch_size >= n;
  // full-batch loss and gradient only need the Gram matrix
  const Matrix gram = X.transpose() * X / static_cast<double>(n);
  auto full_loss = [&](const Matrix& m) {
    const Matrix r = Matrix::Identity(d, d) - m;
    return 0.5 * (r.transpose() * gram * r).trace();
  };

  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  AdamState adam(static_cast<Eigen::Index>(d) * d);

  auto update = [&](const Matrix& data_grad, double alpha, double beta) {
    const auto hv = acyclicity(a, cfg.h_mode);
    Matrix g = data_grad + (alpha + beta * hv.h) * hv.grad;
    if (cfg.lambda > 0.0) g += cfg.lambda * a.unaryExpr([](double v) { return sign(v); });
    if (cfg.grad_clip > 0.0) g = g.cwiseMax(-cfg.grad_clip).cwiseMin(cfg.grad_clip);
    if (cfg.optimizer == Optimizer::kAdam) {
      const Vector dir = adam.direction(Eigen::Map<const Vector>(g.data(), g.size()));
      a -= cfg.learning_rate * Eigen::Map<const Matrix>(dir.data(), d, d);
    } else {
      a -= cfg.learning_rate * g;
    }
    a.diagonal().setZero();
  };

  detail::InnerModel model;
  model.adjacency = [&]() -> const Matrix& { return a; };
  model.loss = [&]() { return full_loss(a); };
  model.on_best = [] {};
  model.step = [&](double alpha, double beta, int) {
    if (full_batch) {
      update(gram * a - gram, alpha, beta);
    } else {
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      Matrix xb(cfg.batch_size, d);
      for (int start = 0; start + cfg.batch_size <= n; start += cfg.batch_size) {
        for (int r = 0; r < cfg.batch_size; ++r) xb.row(r) = X.row(order[start + r]);
        update(xb.transpose() * (xb * a - xb) / static_cast<double>(cfg.batch_size), alpha, beta);
      }
    }
    return full_loss(a);
  };
  TrainResult r = detail::run_augmented_lagrangian(cfg, model);
  // report the best loss in the direct (non-Gram) form
  r.loss_best = lsq_loss(x, r.a_best.values());
  return r;
}

Matrix exp_penalty_step(const Dataset& x, const Matrix& a_k, double lr, double alpha) {
  const Matrix g = lsq_grad(x, a_k) + alpha * grad_h_exp(a_k);
  return a_k - lr * g;
}

double step_identity_residual(const Dataset& x, const Matrix& a_k, const Matrix& a_next, double lr, double alpha) {
  const Matrix g = lsq_grad(x, a_k) + alpha * grad_h_exp(a_k);
  const Matrix expected = a_k - lr * g;
  const double scale = std::max(1.0, expected.cwiseAbs().maxCoeff());
  if (a_next.rows() != a_k.rows() || a_next.cols() != a_k.cols() ||
      (a_next - expected).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw Error(ErrorCode::kUsage, "A_next is not one un-regularised gradient step from A_k");
  }
  const Matrix rhs = a_next.cwiseProduct(a_next) + lr * g.cwiseProduct(a_next + a_k);
  return (a_k.cwiseProduct(a_k) - rhs).cwiseAbs().maxCoeff();
}

}  // namespace tearlearn
