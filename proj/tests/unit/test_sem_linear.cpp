#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "sem_linear.hpp"

using namespace tearlearn;

namespace {

Dataset normal_data(int n, int d, std::mt19937_64& rng) {
  Matrix x(n, d);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = normal(rng);
  return Dataset(x);
}

Matrix swap2() {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  return a;
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.beta_max = 1e2;
  cfg.seed = 4;
  return cfg;
}

}  // namespace

TEST_SUITE("sem_linear") {
  TEST_CASE("lsq_loss examples") {
    Matrix x(1, 2);
    x << 1.0, 2.0;
    Matrix a = Matrix::Zero(2, 2);
    a(0, 1) = 1.0;
    CHECK(lsq_loss(Dataset(x), a) == 1.0);

    std::mt19937_64 rng(1);
    const Dataset data = normal_data(30, 4, rng);
    CHECK(lsq_loss(data, Matrix::Zero(4, 4)) ==
          doctest::Approx(data.values().squaredNorm() / 60.0).epsilon(1e-14));
    CHECK_THROWS_AS(lsq_loss(data, Matrix::Zero(3, 3)), Error);
    CHECK_THROWS_AS(Dataset(Matrix(0, 3)), Error);
  }

  TEST_CASE("lsq_grad examples") {
    std::mt19937_64 rng(2);
    const Dataset data = normal_data(20, 5, rng);
    const Matrix& x = data.values();
    CHECK((lsq_grad(data, Matrix::Zero(5, 5)) + x.transpose() * x / 20.0).cwiseAbs().maxCoeff() < 1e-13);
    const Dataset zero(Matrix::Zero(6, 3));
    CHECK(lsq_grad(zero, oracle::random_matrix(3, 0.7, rng)).isZero(0));
  }

  TEST_CASE("lsq_grad matches central differences") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 100; ++trial) {
      const int d = 2 + trial % 5;
      const Dataset data = normal_data(20, d, rng);
      const Matrix a = oracle::random_matrix(d, 0.6, rng, 0.1, 1.0);
      const Matrix fd = oracle::finite_difference([&](const Matrix& m) { return lsq_loss(data, m); }, a);
      CHECK(oracle::agrees(lsq_grad(data, a), fd, 1e-6, 1e-8));
    }
  }

  TEST_CASE("augmented_loss examples") {
    std::mt19937_64 rng(4);
    const Dataset data = normal_data(15, 2, rng);
    const auto exp_mode = AcyclicityMode::exp_trace();
    CHECK(augmented_loss(data, Matrix::Zero(2, 2), 3.0, 7.0, 0.5, exp_mode) == lsq_loss(data, Matrix::Zero(2, 2)));
    const Matrix a = oracle::random_matrix(2, 1.0, rng);
    CHECK(augmented_loss(data, a, 0.0, 0.0, 0.0, exp_mode) == lsq_loss(data, a));
    const double h = h_exp(swap2());
    const double extra = augmented_loss(data, swap2(), 1.0, 2.0, 0.0, exp_mode) - lsq_loss(data, swap2());
    CHECK(extra == doctest::Approx(h + h * h).epsilon(1e-13));
    CHECK(extra == doctest::Approx(2.2658).epsilon(1e-4));
    CHECK(augmented_loss(data, swap2(), 0.0, 0.0, 0.25, exp_mode) - lsq_loss(data, swap2()) ==
          doctest::Approx(0.5).epsilon(1e-14));
  }

  TEST_CASE("identity residual vanishes for genuine steps") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
      const int d = 2 + trial % 5;
      const Dataset data = normal_data(25, d, rng);
      const Matrix a = oracle::random_matrix(d, 0.5, rng, 0.05, 0.8);
      const double lr = oracle::uniform(rng, 1e-3, 0.1);
      const double alpha = oracle::uniform(rng, 0.0, 5.0);
      const Matrix next = exp_penalty_step(data, a, lr, alpha);
      CHECK(step_identity_residual(data, a, next, lr, alpha) < 1e-10);
    }
  }

  TEST_CASE("identity residual with lr = 0 is exactly zero") {
    std::mt19937_64 rng(6);
    const Dataset data = normal_data(10, 3, rng);
    const Matrix a = oracle::random_matrix(3, 0.7, rng, 0.1, 0.9);
    CHECK(step_identity_residual(data, a, a, 0.0, 1.3) == 0.0);
  }

  TEST_CASE("identity residual rejects a matrix that is not the step") {
    std::mt19937_64 rng(7);
    const Dataset data = normal_data(10, 3, rng);
    const Matrix a = oracle::random_matrix(3, 0.7, rng, 0.1, 0.9);
    Matrix next = exp_penalty_step(data, a, 0.01, 0.5);
    next(0, 1) += 1e-3;
    CHECK_THROWS_AS(step_identity_residual(data, a, next, 0.01, 0.5), Error);
  }

  TEST_CASE("single gradient steps descend on most instances") {
    std::mt19937_64 rng(8);
    int descended = 0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
      const int d = 2 + trial % 6;
      const Dataset data = normal_data(40, d, rng);
      const Matrix a = oracle::random_matrix(d, 0.5, rng, 0.05, 0.6);
      const double alpha = oracle::uniform(rng, 0.0, 2.0);
      const double beta = oracle::uniform(rng, 0.0, 10.0);
      const auto mode = AcyclicityMode::exp_trace();
      const auto hv = acyclicity(a, mode);
      Matrix next = a - 1e-3 * (lsq_grad(data, a) + (alpha + beta * hv.h) * hv.grad);
      next.diagonal().setZero();
      if (augmented_loss(data, next, alpha, beta, 0.0, mode) <= augmented_loss(data, a, alpha, beta, 0.0, mode)) {
        ++descended;
      }
    }
    CHECK(descended >= 0.95 * trials);
  }

  TEST_CASE("chain data recovers the forward coefficient") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = 1000;
    Matrix x(n, 2);
    for (int s = 0; s < n; ++s) {
      x(s, 0) = normal(rng);
      x(s, 1) = 0.8 * x(s, 0) + normal(rng);
    }
    const double ols = x.col(0).dot(x.col(1)) / x.col(0).squaredNorm();
    TrainConfig cfg;
    cfg.seed = 1;
    const TrainResult r = train_linear(Dataset(x), cfg);
    const Matrix& a = r.a_best.values();
    CHECK(std::abs(a(0, 1)) == doctest::Approx(a.cwiseAbs().maxCoeff()));
    CHECK(std::abs(a(0, 1) - ols) <= 0.1);
    CHECK(r.h_trajectory.back().h >= 0.0);
  }

  TEST_CASE("beta0 above beta_max skips training") {
    std::mt19937_64 rng(10);
    const Dataset data = normal_data(30, 4, rng);
    TrainConfig cfg;
    cfg.beta0 = 1e5;
    cfg.beta_max = 1e4;
    cfg.seed = 11;
    const TrainResult r = train_linear(data, cfg);
    CHECK(r.inner_steps == 0);
    CHECK(r.h_trajectory.size() == 1);
    CHECK(r.a_best.values() == random_init(4, cfg.init_scale, cfg.seed));
  }

  TEST_CASE("result invariants") {
    std::mt19937_64 rng(12);
    const Dataset data = normal_data(50, 4, rng);
    const TrainResult r = train_linear(data, quick_config());
    CHECK_FALSE(r.h_trajectory.empty());
    CHECK(r.loss_best == doctest::Approx(lsq_loss(data, r.a_best.values())).epsilon(1e-9));
    CHECK(r.a_best.values().diagonal().isZero(0));
    CHECK(r.a_final.values().diagonal().isZero(0));
    CHECK(r.final_h == doctest::Approx(h_exp(r.a_final.values())).epsilon(1e-14));
    CHECK(r.converged == (r.final_h <= quick_config().h_tolerance));
    for (const auto& rec : r.h_trajectory) CHECK(rec.h >= 0.0);
    CHECK(r.loss_best <= r.h_trajectory.front().loss);
  }

  TEST_CASE("training is bit-reproducible") {
    std::mt19937_64 rng(13);
    const Dataset data = normal_data(60, 5, rng);
    TrainConfig cfg = quick_config();
    cfg.lambda = 0.01;
    cfg.batch_size = 16;
    const TrainResult a = train_linear(data, cfg);
    const TrainResult b = train_linear(data, cfg);
    CHECK(a.a_best == b.a_best);
    CHECK(a.a_final == b.a_final);
    CHECK(a.h_trajectory == b.h_trajectory);
    CHECK(a.loss_best == b.loss_best);
    cfg.seed += 1;
    CHECK_FALSE(train_linear(data, cfg).a_final == a.a_final);
  }

  TEST_CASE("multiplier updates follow the schedule") {
    std::mt19937_64 rng(14);
    const Dataset data = normal_data(40, 4, rng);
    TrainConfig cfg = quick_config();
    cfg.beta_max = 1e3;
    const TrainResult r = train_linear(data, cfg);
    REQUIRE(r.h_trajectory.size() >= 2);
    for (std::size_t k = 1; k < r.h_trajectory.size(); ++k) {
      const auto& prev = r.h_trajectory[k - 1];
      const auto& cur = r.h_trajectory[k];
      CHECK(cur.alpha == doctest::Approx(prev.alpha + prev.beta * cur.h).epsilon(1e-12));
      const double h_before = k == 1 ? std::numeric_limits<double>::infinity() : prev.h;
      const bool grow = std::abs(cur.h) > 0.25 * std::abs(h_before);
      CHECK(cur.beta == (grow ? prev.beta * 10.0 : prev.beta));
    }
  }

  TEST_CASE("adam and mini-batch options train") {
    std::mt19937_64 rng(15);
    const Dataset data = normal_data(64, 3, rng);
    TrainConfig cfg = quick_config();
    cfg.optimizer = Optimizer::kAdam;
    cfg.batch_size = 16;
    cfg.learning_rate = 1e-2;
    const TrainResult r = train_linear(data, cfg);
    CHECK(r.inner_steps == cfg.epochs * (static_cast<int>(r.h_trajectory.size()) - 1));
    CHECK(r.loss_best <= r.h_trajectory.front().loss);
  }

  TEST_CASE("invalid configs are rejected") {
    std::mt19937_64 rng(16);
    const Dataset data = normal_data(10, 3, rng);
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train_linear(data, cfg), Error);
    cfg = TrainConfig{};
    cfg.learning_rate = -1.0;
    CHECK_THROWS_AS(train_linear(data, cfg), Error);
    cfg = TrainConfig{};
    cfg.h_mode = AcyclicityMode::polynomial(0.0);
    CHECK_THROWS_AS(train_linear(data, cfg), Error);
  }

  TEST_CASE("divergence carries the partial trajectory") {
    std::mt19937_64 rng(17);
    const Dataset data = normal_data(20, 3, rng);
    TrainConfig cfg;
    cfg.learning_rate = 50.0;
    cfg.epochs = 200;
    try {
      train_linear(data, cfg);
      FAIL("expected divergence");
    } catch (const TrainingDiverged& e) {
      CHECK(e.code() == ErrorCode::kNumerical);
      CHECK_FALSE(e.partial().h_trajectory.empty());
      CHECK(e.partial().a_final.values().allFinite());
    }
  }

  TEST_CASE("adam direction") {
    AdamState adam(2);
    Vector g(2);
    g << 3.0, -0.5;
    const Vector first = adam.direction(g);
    // bias correction makes the first direction sign(g) up to eps
    CHECK(first(0) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(first(1) == doctest::Approx(-1.0).epsilon(1e-7));
  }

  TEST_CASE("random_init") {
    const Matrix a = random_init(5, 0.1, 3);
    CHECK(a.diagonal().isZero(0));
    CHECK(a.cwiseAbs().maxCoeff() <= 0.1);
    CHECK(a == random_init(5, 0.1, 3));
    CHECK_FALSE(a == random_init(5, 0.1, 4));
    CHECK(random_init(4, 0.0, 1).isZero(0));
  }
}
