#include <doctest.h>

#include <cmath>
#include <random>

#include "acyclicity.hpp"
#include "graph_core.hpp"
#include "oracles.hpp"

using namespace tearlearn;

namespace {

Matrix swap2() {
  Matrix a = Matrix::Zero(2, 2);
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  return a;
}

Matrix upper(int d, std::mt19937_64& rng) {
  Matrix a = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) a(i, j) = oracle::uniform(rng, -2.0, 2.0);
  }
  return a;
}

Matrix permute(const Matrix& a, const std::vector<int>& p) {
  Matrix out(a.rows(), a.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) out(p[i], p[j]) = a(i, j);
  }
  return out;
}

}  // namespace

TEST_SUITE("acyclicity") {
  TEST_CASE("matrix exponential matches the long-double series") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const int d = 2 + trial % 7;
      const Matrix m = oracle::random_matrix(d, 0.5, rng, 0.1, 1.5).cwiseAbs2();
      const Matrix e = matrix_exp(m);
      CHECK(e.trace() - d == doctest::Approx(oracle::h_exp_series(m.cwiseSqrt(), 80)).epsilon(1e-12));
    }
  }

  TEST_CASE("h_exp examples") {
    CHECK(h_exp(Matrix::Zero(4, 4)) == 0.0);
    std::mt19937_64 rng(1);
    CHECK(std::abs(h_exp(upper(6, rng))) < 1e-12);
    CHECK(h_exp(swap2()) == doctest::Approx(2.0 * std::cosh(1.0) - 2.0).epsilon(1e-13));
    CHECK(h_exp(swap2()) == doctest::Approx(oracle::h_exp_series(swap2(), 30)).epsilon(1e-13));
    CHECK(h_exp(swap2()) == doctest::Approx(1.0861).epsilon(1e-4));
  }

  TEST_CASE("h_poly examples") {
    CHECK(h_poly(Matrix::Zero(3, 3), 0.7) == 0.0);
    std::mt19937_64 rng(2);
    CHECK(h_poly(upper(7, rng), 0.5) == 0.0);
    CHECK(h_poly(swap2(), 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  }

  TEST_CASE("h values match naive oracles on random matrices") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 200; ++trial) {
      const int d = 2 + trial % 9;
      const Matrix a = oracle::random_matrix(d, 0.4, rng, 0.1, 1.2);
      const double gamma = oracle::uniform(rng, 0.1, 1.0);
      CHECK(h_exp(a) == doctest::Approx(oracle::h_exp_series(a)).epsilon(1e-11).scale(1.0));
      CHECK(h_poly(a, gamma) == doctest::Approx(oracle::h_poly_naive(a, gamma)).epsilon(1e-11).scale(1.0));
    }
  }

  TEST_CASE("h is non-negative") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 1000; ++trial) {
      const int d = 2 + trial % 9;
      const Matrix a = oracle::random_matrix(d, 0.5, rng, 0.0, 1.5);
      CHECK(h_exp(a) >= 0.0);
      CHECK(h_poly(a, 0.5) >= 0.0);
    }
  }

  TEST_CASE("h vanishes exactly on DAG supports") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
      const int d = 2 + trial % 9;
      const Matrix dag = oracle::random_dag(d, 0.5, rng, 0.5, 2.0);
      const Matrix cyc = oracle::random_cyclic(d, 0.3, rng, 0.5, 2.0);
      REQUIRE(is_acyclic(WeightMatrix(dag)));
      REQUIRE_FALSE(is_acyclic(WeightMatrix(cyc)));
      CHECK(std::abs(h_exp(dag)) < 1e-10);
      CHECK(std::abs(h_poly(dag, 1.0 / d)) < 1e-10);
      CHECK(h_exp(cyc) > 1e-6);
      CHECK(h_poly(cyc, 1.0 / d) > 1e-6);
    }
  }

  TEST_CASE("permutation equivariance") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
      const int d = 2 + trial % 8;
      const Matrix a = oracle::random_matrix(d, 0.5, rng, 0.1, 1.0);
      const Matrix pa = permute(a, oracle::random_permutation(d, rng));
      CHECK(h_exp(pa) == doctest::Approx(h_exp(a)).epsilon(1e-9).scale(1.0));
      CHECK(h_poly(pa, 0.3) == doctest::Approx(h_poly(a, 0.3)).epsilon(1e-9).scale(1.0));
    }
  }

  TEST_CASE("gradient examples") {
    CHECK(grad_h_exp(Matrix::Zero(3, 3)).isZero(0));
    CHECK(grad_h_poly(Matrix::Zero(3, 3), 0.5).isZero(0));
    std::mt19937_64 rng(9);
    const Matrix u = upper(5, rng);
    CHECK(grad_h_exp(u).isZero(0));
    CHECK(grad_h_poly(u, 0.5).isZero(0));
  }

  TEST_CASE("gradients match central differences") {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 100; ++trial) {
      const int d = 2 + trial % 7;
      const Matrix a = oracle::random_matrix(d, 0.6, rng, 0.1, 1.0);
      const double gamma = trial % 2 ? 0.5 : 1.0 / d;
      const Matrix fd_exp = oracle::finite_difference([](const Matrix& m) { return h_exp(m); }, a);
      const Matrix fd_poly = oracle::finite_difference([&](const Matrix& m) { return h_poly(m, gamma); }, a);
      CHECK(oracle::agrees(grad_h_exp(a), fd_exp, 1e-5, 1e-8));
      CHECK(oracle::agrees(grad_h_poly(a, gamma), fd_poly, 1e-5, 1e-8));
    }
  }

  TEST_CASE("closed-form and binomial polynomial gradients agree") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
      const int d = 2 + trial % 9;
      const Matrix a = oracle::random_matrix(d, 0.5, rng, 0.1, 1.0);
      const double gamma = oracle::uniform(rng, 0.05, 1.0);
      const Matrix closed = grad_h_poly(a, gamma);
      const Matrix binomial = oracle::grad_h_poly_binomial(a, gamma);
      CHECK((closed - binomial).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, binomial.cwiseAbs().maxCoeff()));
    }
  }

  TEST_CASE("acyclicity() bundles value and gradient") {
    std::mt19937_64 rng(13);
    const Matrix a = oracle::random_matrix(5, 0.5, rng, 0.1, 1.0);
    const auto e = acyclicity(a, AcyclicityMode::exp_trace());
    CHECK(e.h == doctest::Approx(h_exp(a)).epsilon(1e-14));
    CHECK((e.grad - grad_h_exp(a)).cwiseAbs().maxCoeff() < 1e-14);
    const auto p = acyclicity(a, AcyclicityMode::polynomial(0.2));
    CHECK(p.h == doctest::Approx(h_poly(a, 0.2)).epsilon(1e-14));
    CHECK((p.grad - grad_h_poly(a, 0.2)).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("overflow reports the offending magnitude") {
    Matrix a = swap2() * 40.0;
    try {
      h_exp(a);
      FAIL("expected a numerical error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kNumerical);
      CHECK(std::string(e.what()).find("40") != std::string::npos);
    }
  }
}
