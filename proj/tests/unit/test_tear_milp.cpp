#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "tear_milp.hpp"

using namespace tearlearn;

namespace {

TearProblem make_problem(std::vector<double> weights, const std::vector<std::vector<int>>& rows,
                         std::vector<double> ub = {}) {
  TearProblem p;
  const int n = static_cast<int>(weights.size());
  for (int j = 0; j < n; ++j) p.streams.push_back({j, j, (j + 1) % n, weights[j]});
  p.u = LoopMatrix(static_cast<int>(rows.size()), p.streams);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int c : rows[r]) p.u.set(static_cast<int>(r), c);
  }
  p.weights = std::move(weights);
  p.lb.assign(n, 0.0);
  p.ub = ub.empty() ? std::vector<double>(n, 1.0) : std::move(ub);
  return p;
}

}  // namespace

TEST_SUITE("tear_milp") {
  TEST_CASE("weights_from_matrix") {
    Matrix m = Matrix::Zero(3, 3);
    m(0, 1) = -0.7;
    m(1, 2) = 0.2;
    m(2, 0) = 1.5;
    m(1, 0) = -0.1;
    m(2, 1) = 0.4;
    const WeightMatrix a(m);
    const auto streams = nonzero_streams(a);
    const auto w = weights_from_matrix(a, streams);
    REQUIRE(w.size() == 5);
    for (std::size_t j = 0; j < streams.size(); ++j) {
      CHECK(w[j] == std::abs(m(streams[j].source, streams[j].target)));
    }
    const auto sq = weights_from_matrix(a, streams, WeightMode::kSquare);
    for (std::size_t j = 0; j < streams.size(); ++j) CHECK(sq[j] == doctest::Approx(w[j] * w[j]).epsilon(1e-15));

    const Matrix flat = Matrix::Constant(3, 3, -0.6) + 0.6 * Matrix::Identity(3, 3);
    for (double v : weights_from_matrix(WeightMatrix(flat), nonzero_streams(WeightMatrix(flat)))) CHECK(v == 0.6);
  }

  TEST_CASE("apply_prior") {
    const auto streams = nonzero_streams(WeightMatrix(Matrix::Ones(3, 3) - Matrix::Identity(3, 3)));
    SUBCASE("all unknown") {
      const auto b = apply_prior(streams, PriorSpec(3));
      for (std::size_t j = 0; j < streams.size(); ++j) {
        CHECK(b.lb[j] == 0.0);
        CHECK(b.ub[j] == 1.0);
      }
    }
    SUBCASE("mixed table") {
      PriorSpec p(3);
      p.set(0, 2, EdgePrior::kObligatory);
      p.set(2, 1, EdgePrior::kObligatory);
      const auto b = apply_prior(streams, p);
      for (std::size_t j = 0; j < streams.size(); ++j) {
        const bool ob = p(streams[j].source, streams[j].target) == EdgePrior::kObligatory;
        CHECK(b.lb[j] == 0.0);
        CHECK(b.ub[j] == (ob ? 0.5 : 1.0));
      }
    }
    SUBCASE("forbidden stream violates the contract") {
      PriorSpec p(3);
      p.set(1, 0, EdgePrior::kForbidden);
      try {
        apply_prior(streams, p);
        FAIL("expected a structural error");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kStructure);
      }
    }
  }

  TEST_CASE("small worked instances") {
    SUBCASE("single 2-cycle") {
      const auto s = solve_tear(make_problem({0.3, 0.7}, {{0, 1}}));
      CHECK(s.y == std::vector<int>{1, 0});
      CHECK(s.cost == doctest::Approx(0.3));
      CHECK(s.optimal);
    }
    SUBCASE("shared stream") {
      const auto s = solve_tear(make_problem({0.5, 0.4, 0.5}, {{0, 1}, {1, 2}}));
      CHECK(s.y == std::vector<int>{0, 1, 0});
      CHECK(s.cost == doctest::Approx(0.4));
    }
    SUBCASE("shared stream obligatory") {
      const auto s = solve_tear(make_problem({0.5, 0.4, 0.5}, {{0, 1}, {1, 2}}, {1.0, 0.5, 1.0}));
      CHECK(s.y == std::vector<int>{1, 0, 1});
      CHECK(s.cost == doctest::Approx(1.0));
    }
    SUBCASE("all-obligatory loop is infeasible") {
      const auto p = make_problem({0.5, 0.4, 0.5}, {{0, 2}, {1, 2}}, {1.0, 0.5, 0.5});
      try {
        solve_tear(p);
        FAIL("expected infeasibility");
      } catch (const InfeasibleTear& e) {
        CHECK(e.code() == ErrorCode::kInfeasible);
        CHECK(e.row() == 1);
        CHECK(e.stream_ids() == std::vector<int>{1, 2});
      }
    }
  }

  TEST_CASE("validate rejects malformed problems") {
    auto p = make_problem({0.3, 0.7}, {{0, 1}});
    p.weights.pop_back();
    CHECK_THROWS_AS(solve_tear(p), Error);
    p = make_problem({0.3, -0.7}, {{0, 1}});
    CHECK_THROWS_AS(solve_tear(p), Error);
    p = make_problem({0.3, 0.7}, {{0, 1}}, {1.0, 0.0});
    CHECK_THROWS_AS(solve_tear(p), Error);
  }

  TEST_CASE("matches brute force on random instances") {
    std::mt19937_64 rng(41);
    int infeasible = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 2 + trial % 13;
      const auto p = oracle::random_tear_problem(n, 10, 0.25, rng);
      const auto brute = oracle::brute_force_tear(p);
      if (!brute.feasible) {
        ++infeasible;
        CHECK_THROWS_AS(solve_tear(p), InfeasibleTear);
        continue;
      }
      const auto s = solve_tear(p);
      CHECK(s.optimal);
      CHECK(oracle::valid_cover(p, s));
      CHECK(s.cost == doctest::Approx(brute.cost).epsilon(1e-12));
    }
    CHECK(infeasible > 0);
  }

  TEST_CASE("adding a row never lowers the optimum") {
    std::mt19937_64 rng(43);
    int checked = 0;
    while (checked < 50) {
      auto p = oracle::random_tear_problem(8, 6, 0.0, rng);
      const double before = solve_tear(p).cost;
      const auto extra = oracle::random_tear_problem(8, 1, 0.0, rng);
      LoopMatrix bigger(p.u.rows() + 1, p.streams);
      for (int r = 0; r < p.u.rows(); ++r) {
        for (int c : p.u.row_support(r)) bigger.set(r, c);
      }
      for (int c : extra.u.row_support(0)) bigger.set(p.u.rows(), c);
      p.u = bigger;
      CHECK(solve_tear(p).cost >= before - 1e-12);
      ++checked;
    }
  }

  TEST_CASE("ties resolve deterministically") {
    const auto p = make_problem({1.0, 1.0, 1.0, 1.0}, {{0, 1}, {2, 3}, {1, 2}});
    const auto a = solve_tear(p);
    const auto b = solve_tear(p);
    CHECK(a.y == b.y);
    CHECK(a.explored_nodes == b.explored_nodes);
    CHECK(a.cost == 2.0);
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 30; ++trial) {
      const auto q = oracle::random_tear_problem(10, 8, 0.1, rng);
      if (!oracle::brute_force_tear(q).feasible) continue;
      CHECK(solve_tear(q).y == solve_tear(q).y);
    }
  }

  TEST_CASE("node budget returns the incumbent") {
    std::mt19937_64 rng(53);
    const auto p = oracle::random_tear_problem(14, 10, 0.0, rng);
    const auto s = solve_tear(p, 1);
    CHECK(oracle::valid_cover(p, s));
    CHECK(s.cost >= solve_tear(p).cost - 1e-12);
  }

  TEST_CASE("dump and load round-trip") {
    std::mt19937_64 rng(59);
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = oracle::random_tear_problem(3 + trial % 10, 6, 0.3, rng);
      const std::string text = dump_tear_problem(p);
      const auto q = load_tear_problem(text);
      CHECK(q.streams == p.streams);
      CHECK(q.weights == p.weights);
      CHECK(q.lb == p.lb);
      CHECK(q.ub == p.ub);
      REQUIRE(q.u.rows() == p.u.rows());
      for (int r = 0; r < p.u.rows(); ++r) CHECK(q.u.row_support(r) == p.u.row_support(r));
      CHECK(dump_tear_problem(q) == text);
    }
    CHECK_THROWS_AS(load_tear_problem("not a problem"), Error);
    CHECK_THROWS_AS(load_tear_problem("tear-problem v1\nstreams 2\n0 0 1 0.5 0.5 0 1\n"), Error);
  }
}
