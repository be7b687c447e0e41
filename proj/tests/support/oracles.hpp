#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Everything here is deliberately naive.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "common.hpp"
#include "dag_gnn.hpp"
#include "graph_core.hpp"
#include "tear_milp.hpp"

namespace oracle {

using tearlearn::Matrix;
using tearlearn::WeightMatrix;

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double signed_magnitude(std::mt19937_64& rng, double lo, double hi) {
  const double v = uniform(rng, lo, hi);
  return std::bernoulli_distribution(0.5)(rng) ? v : -v;
}

/// Each off-diagonal entry nonzero with probability p, magnitude in [lo, hi].
inline Matrix random_matrix(int d, double p, std::mt19937_64& rng, double lo = 0.1, double hi = 2.0) {
  Matrix m = Matrix::Zero(d, d);
  std::bernoulli_distribution coin(p);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i != j && coin(rng)) m(i, j) = signed_magnitude(rng, lo, hi);
    }
  }
  return m;
}

inline std::vector<int> random_permutation(int d, std::mt19937_64& rng) {
  std::vector<int> p(d);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// Strictly upper-triangular random matrix relabelled by a random permutation.
inline Matrix random_dag(int d, double p, std::mt19937_64& rng, double lo = 0.1, double hi = 2.0) {
  Matrix tri = Matrix::Zero(d, d);
  std::bernoulli_distribution coin(p);
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      if (coin(rng)) tri(i, j) = signed_magnitude(rng, lo, hi);
    }
  }
  const auto perm = random_permutation(d, rng);
  Matrix out = Matrix::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) out(perm[i], perm[j]) = tri(i, j);
  }
  return out;
}

/// Random matrix with at least one directed cycle: a random sparse matrix plus
/// a planted cycle through 2..d random nodes.
inline Matrix random_cyclic(int d, double p, std::mt19937_64& rng, double lo = 0.1, double hi = 2.0) {
  Matrix m = random_matrix(d, p, rng, lo, hi);
  const int len = std::uniform_int_distribution<int>(2, d)(rng);
  const auto perm = random_permutation(d, rng);
  for (int k = 0; k < len; ++k) {
    const int a = perm[k];
    const int b = perm[(k + 1) % len];
    if (m(a, b) == 0.0) m(a, b) = signed_magnitude(rng, lo, hi);
  }
  return m;
}

/// True when some vertex ordering puts every edge forward (tries all d!).
inline bool acyclic_by_orderings(const Matrix& a) {
  const int d = static_cast<int>(a.rows());
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  do {
    std::vector<int> pos(d);
    for (int k = 0; k < d; ++k) pos[order[k]] = k;
    bool ok = true;
    for (int i = 0; i < d && ok; ++i) {
      for (int j = 0; j < d && ok; ++j) {
        if (i != j && a(i, j) != 0.0 && pos[i] > pos[j]) ok = false;
      }
    }
    if (ok) return true;
  } while (std::next_permutation(order.begin(), order.end()));
  return false;
}

/// All simple cycles as node sequences starting at their smallest node, by
/// testing every sequence of distinct nodes that starts with its minimum.
inline std::set<std::vector<int>> cycles_by_sequences(const Matrix& a) {
  const int d = static_cast<int>(a.rows());
  std::set<std::vector<int>> out;
  std::vector<int> seq;
  std::function<void(int)> extend = [&](int start) {
    if (seq.size() >= 2 && a(seq.back(), start) != 0.0) {
      bool closed = true;
      for (std::size_t k = 0; k + 1 < seq.size(); ++k) closed = closed && a(seq[k], seq[k + 1]) != 0.0;
      if (closed) out.insert(seq);
    }
    for (int v = start + 1; v < d; ++v) {
      if (std::find(seq.begin(), seq.end(), v) != seq.end()) continue;
      seq.push_back(v);
      extend(start);
      seq.pop_back();
    }
  };
  for (int s = 0; s < d; ++s) {
    seq = {s};
    extend(s);
  }
  return out;
}

/// Tr(exp(M)) - d by summing Tr(M^k)/k! in long double.
inline double h_exp_series(const Matrix& a, int terms = 60) {
  const int d = static_cast<int>(a.rows());
  using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const LMatrix m = a.cwiseProduct(a).cast<long double>();
  LMatrix power = LMatrix::Identity(d, d);
  long double total = 0.0L;
  long double fact = 1.0L;
  for (int k = 1; k <= terms; ++k) {
    power = power * m;
    fact *= k;
    total += power.trace() / fact;
  }
  return static_cast<double>(total);
}

/// Tr((I + gamma M)^d) - d via d explicit multiplications.
inline double h_poly_naive(const Matrix& a, double gamma) {
  const int d = static_cast<int>(a.rows());
  const Matrix base = Matrix::Identity(d, d) + gamma * a.cwiseProduct(a);
  Matrix p = Matrix::Identity(d, d);
  for (int k = 0; k < d; ++k) p = p * base;
  return p.trace() - d;
}

/// 2 gamma A o [sum_k C(d,k) k (gamma M)^(k-1)]^T, the binomial form of the
/// polynomial gradient.
inline Matrix grad_h_poly_binomial(const Matrix& a, double gamma) {
  const int d = static_cast<int>(a.rows());
  const Matrix gm = gamma * a.cwiseProduct(a);
  Matrix sum = Matrix::Zero(d, d);
  Matrix power = Matrix::Identity(d, d);  // (gamma M)^(k-1)
  double binom = 1.0;                     // C(d, k)
  for (int k = 1; k <= d; ++k) {
    binom = binom * (d - k + 1) / k;
    sum += binom * k * power;
    power = power * gm;
  }
  return 2.0 * gamma * a.cwiseProduct(sum.transpose());
}

/// Central differences of f at x for every entry.
template <class F>
Matrix finite_difference(F&& f, const Matrix& x, double step = 1e-6) {
  Matrix g(x.rows(), x.cols());
  Matrix probe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double keep = probe.data()[k];
    probe.data()[k] = keep + step;
    const double up = f(probe);
    probe.data()[k] = keep - step;
    const double down = f(probe);
    probe.data()[k] = keep;
    g.data()[k] = (up - down) / (2.0 * step);
  }
  return g;
}

/// Entrywise agreement: relative error <= rel where |want| >= floor,
/// absolute error <= abs below it.
inline bool agrees(const Matrix& got, const Matrix& want, double rel, double abs, double floor = 1e-3) {
  if (got.rows() != want.rows() || got.cols() != want.cols()) return false;
  for (Eigen::Index k = 0; k < got.size(); ++k) {
    const double w = want.data()[k];
    const double diff = std::abs(got.data()[k] - w);
    if (!(std::abs(w) >= floor ? diff <= rel * std::abs(w) : diff <= abs)) return false;
  }
  return true;
}

/// Two-layer perceptron on one input row, by explicit loops.
inline std::vector<double> mlp_scalar(const tearlearn::MlpParams& p, const std::vector<double>& in) {
  std::vector<double> hidden(p.hidden());
  for (int h = 0; h < p.hidden(); ++h) {
    double s = p.b1[h];
    for (int i = 0; i < p.in(); ++i) s += p.w1(h, i) * in[i];
    hidden[h] = s > 0.0 ? s : 0.0;
  }
  std::vector<double> out(p.out());
  for (int o = 0; o < p.out(); ++o) {
    double s = p.b2[o];
    for (int h = 0; h < p.hidden(); ++h) s += p.w2(o, h) * hidden[h];
    out[o] = s;
  }
  return out;
}

/// KL and reconstruction terms evaluated one sample, node and latent entry at
/// a time. Node j's latent rows are solved per sample with a fresh LU.
inline tearlearn::ElboParts elbo_scalar(const tearlearn::GnnModel& model, const tearlearn::Dataset& x,
                                        const std::vector<tearlearn::RowMatrix>& noise) {
  const int n = x.n();
  const int d = x.d();
  const int m = model.latent_dim;
  const double floor = std::log(tearlearn::kStdFloor);
  tearlearn::ElboParts parts;
  const Matrix b = Matrix::Identity(d, d) - model.a.transpose();
  const Eigen::FullPivLU<Matrix> lu(b);
  for (int s = 0; s < n; ++s) {
    std::vector<std::vector<double>> e(d);
    for (int j = 0; j < d; ++j) e[j] = mlp_scalar(model.encoder, {x.values()(s, j)});
    // H_j = E_j - sum_i A(i, j) E_i
    std::vector<std::vector<double>> h(d, std::vector<double>(2 * m));
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < 2 * m; ++k) {
        double v = e[j][k];
        for (int i = 0; i < d; ++i) v -= model.a(i, j) * e[i][k];
        h[j][k] = v;
      }
    }
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < m; ++k) {
        const double mu = h[j][k];
        const double ls = std::max(h[j][m + k], floor);
        parts.kl += 0.5 * (std::exp(2.0 * ls) + mu * mu - 2.0 * ls - 1.0);
      }
    }
    for (const auto& eps : noise) {
      Matrix z(d, m);
      for (int j = 0; j < d; ++j) {
        for (int k = 0; k < m; ++k) {
          const double ls = std::max(h[j][m + k], floor);
          z(j, k) = h[j][k] + std::exp(ls) * eps(static_cast<Eigen::Index>(j) * n + s, k);
        }
      }
      const Matrix v = lu.solve(z);
      for (int j = 0; j < d; ++j) {
        std::vector<double> in(m);
        for (int k = 0; k < m; ++k) in[k] = v(j, k);
        const auto out = mlp_scalar(model.decoder, in);
        const double lx = std::max(out[1], floor);
        const double r = x.values()(s, j) - out[0];
        parts.recon += (0.5 * r * r * std::exp(-2.0 * lx) + lx) / static_cast<double>(noise.size());
      }
    }
  }
  return parts;
}

/// Every trainable block of a model or gradient, as (pointer, length) pairs in
/// one fixed order.
template <class M>
std::vector<std::pair<double*, Eigen::Index>> gnn_blocks(M& a, tearlearn::MlpParams& e, tearlearn::MlpParams& dec) {
  std::vector<std::pair<double*, Eigen::Index>> out{{a.data(), a.size()}};
  for (tearlearn::MlpParams* p : {&e, &dec}) {
    out.emplace_back(p->w1.data(), p->w1.size());
    out.emplace_back(p->b1.data(), p->b1.size());
    out.emplace_back(p->w2.data(), p->w2.size());
    out.emplace_back(p->b2.data(), p->b2.size());
  }
  return out;
}

/// Worst relative disagreement between the analytic ELBO gradient and central
/// differences, over entries whose difference quotient is at least `floor`;
/// entries below it must agree to `abs_tol` or the result is +inf.
inline double gnn_gradient_mismatch(const tearlearn::GnnModel& model, const tearlearn::Dataset& x,
                                    const std::vector<tearlearn::RowMatrix>& noise, double abs_tol,
                                    double floor = 1e-3, double step = 1e-6) {
  auto ev = tearlearn::elbo_with_gradient(model, x, noise);
  tearlearn::GnnModel probe = model;
  const auto params = gnn_blocks(probe.a, probe.encoder, probe.decoder);
  const auto grads = gnn_blocks(ev.grad.a, ev.grad.encoder, ev.grad.decoder);
  double worst = 0.0;
  for (std::size_t b = 0; b < params.size(); ++b) {
    for (Eigen::Index k = 0; k < params[b].second; ++k) {
      double& v = params[b].first[k];
      const double keep = v;
      v = keep + step;
      const double up = tearlearn::elbo_loss(probe, x, noise).total();
      v = keep - step;
      const double down = tearlearn::elbo_loss(probe, x, noise).total();
      v = keep;
      const double fd = (up - down) / (2.0 * step);
      const double got = grads[b].first[k];
      if (std::abs(fd) >= floor) {
        worst = std::max(worst, std::abs(got - fd) / std::abs(fd));
      } else if (std::abs(got - fd) > abs_tol) {
        return std::numeric_limits<double>::infinity();
      }
    }
  }
  return worst;
}

/// Random loop-cover instance: `streams` columns, 1..max_rows rows of 2..5
/// members each, weights in [0.05, 2] and each stream Obligatory (ub 0.5)
/// with probability `p_obligatory`.
inline tearlearn::TearProblem random_tear_problem(int streams, int max_rows, double p_obligatory,
                                                  std::mt19937_64& rng) {
  tearlearn::TearProblem p;
  for (int j = 0; j < streams; ++j) p.streams.push_back({j, j, (j + 1) % streams, 0.0});
  const int rows = std::uniform_int_distribution<int>(1, max_rows)(rng);
  p.u = tearlearn::LoopMatrix(rows, p.streams);
  for (int r = 0; r < rows; ++r) {
    const int size = std::uniform_int_distribution<int>(2, std::min(streams, 5))(rng);
    std::vector<int> cols(streams);
    std::iota(cols.begin(), cols.end(), 0);
    std::shuffle(cols.begin(), cols.end(), rng);
    for (int k = 0; k < size; ++k) p.u.set(r, cols[k]);
  }
  std::bernoulli_distribution obligatory(p_obligatory);
  for (int j = 0; j < streams; ++j) {
    p.weights.push_back(uniform(rng, 0.05, 2.0));
    p.streams[j].weight = p.weights.back();
    p.lb.push_back(0.0);
    p.ub.push_back(obligatory(rng) ? 0.5 : 1.0);
  }
  return p;
}

/// Bounds respected, every row covered and the reported cost recomputed.
inline bool valid_cover(const tearlearn::TearProblem& p, const tearlearn::TearSolution& s) {
  if (s.y.size() != p.streams.size()) return false;
  double cost = 0.0;
  for (std::size_t j = 0; j < s.y.size(); ++j) {
    if (s.y[j] != 0 && s.y[j] != 1) return false;
    if (s.y[j] == 1 && p.ub[j] < 1.0) return false;
    cost += p.weights[j] * s.y[j];
  }
  for (int r = 0; r < p.u.rows(); ++r) {
    bool covered = false;
    for (int c : p.u.row_support(r)) covered = covered || s.y[static_cast<std::size_t>(c)] == 1;
    if (!covered) return false;
  }
  return std::abs(cost - s.cost) <= 1e-12 * std::max(1.0, cost);
}

struct Confusion {
  int tp = 0, r = 0, fp = 0, e = 0, m = 0, tee = 0, t = 0, f = 0;
};

/// Edge classification from explicit edge and skeleton sets.
inline Confusion confusion_by_sets(const Matrix& est, const Matrix& truth) {
  using Edge = std::pair<int, int>;
  const int d = static_cast<int>(truth.rows());
  std::set<Edge> e_est, e_true, s_est, s_true;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      if (est(i, j) != 0.0) {
        e_est.insert({i, j});
        s_est.insert({std::min(i, j), std::max(i, j)});
      }
      if (truth(i, j) != 0.0) {
        e_true.insert({i, j});
        s_true.insert({std::min(i, j), std::max(i, j)});
      }
    }
  }
  Confusion c;
  for (const auto& [i, j] : e_est) {
    if (e_true.count({i, j})) {
      ++c.tp;
    } else if (e_true.count({j, i})) {
      ++c.r;
    }
  }
  c.tee = static_cast<int>(e_est.size());
  c.fp = c.tee - c.tp - c.r;
  c.t = static_cast<int>(e_true.size());
  for (const auto& p : s_est) c.e += s_true.count(p) ? 0 : 1;
  for (const auto& p : s_true) c.m += s_est.count(p) ? 0 : 1;
  c.f = d * (d - 1) / 2 - static_cast<int>(s_true.size());
  return c;
}

/// log of the integral over precision w of
///   prod_i N(x_i | mu, 1/w) N(mu | mean(x), 1/(alpha_mu w)) Gamma(w | df/2, rate t/2)
/// with mu integrated in closed form and w by the trapezoid rule in log w.
inline double bge_univariate_by_quadrature(const std::vector<double>& x, double alpha_mu, double df, double t) {
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double scatter = 0.0;
  for (double v : x) scatter += (v - mean) * (v - mean);
  const double pi = 3.14159265358979323846;
  const double constant = -0.5 * n * std::log(2.0 * pi) + 0.5 * std::log(alpha_mu / (n + alpha_mu)) +
                          0.5 * df * std::log(0.5 * t) - std::lgamma(0.5 * df);
  // integrand in u = log w, including the Jacobian w
  auto log_f = [&](double u) { return 0.5 * (n + df) * u - 0.5 * (scatter + t) * std::exp(u); };
  const double lo = -30.0, hi = 15.0, h = 1e-4;
  double peak = -std::numeric_limits<double>::infinity();
  for (double u = lo; u <= hi; u += h) peak = std::max(peak, log_f(u));
  double sum = 0.0;
  for (double u = lo; u <= hi; u += h) sum += std::exp(log_f(u) - peak);
  return constant + peak + std::log(sum * h);
}

struct BruteTear {
  bool feasible = false;
  double cost = std::numeric_limits<double>::infinity();
};

/// Minimum-cost cover over all 2^n bound-respecting assignments.
inline BruteTear brute_force_tear(const tearlearn::TearProblem& p) {
  const int n = static_cast<int>(p.streams.size());
  BruteTear best;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    bool ok = true;
    double cost = 0.0;
    for (int j = 0; j < n && ok; ++j) {
      if (mask & (1u << j)) {
        if (p.ub[j] < 1.0) ok = false;
        cost += p.weights[j];
      }
    }
    for (int r = 0; r < p.u.rows() && ok; ++r) {
      bool covered = false;
      for (int j = 0; j < n && !covered; ++j) covered = p.u.at(r, j) && (mask & (1u << j));
      ok = covered;
    }
    if (ok && cost < best.cost) {
      best.feasible = true;
      best.cost = cost;
    }
  }
  return best;
}

/// Smallest total |A| over all removal subsets of the nonzero entries that
/// leave an acyclic graph (2^edges subsets).
inline double brute_force_feedback_weight(const Matrix& a) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      if (a(i, j) != 0.0) edges.emplace_back(i, j);
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << edges.size()); ++mask) {
    Matrix m = a;
    double cost = 0.0;
    for (std::size_t k = 0; k < edges.size(); ++k) {
      if (mask & (1u << k)) {
        cost += std::abs(a(edges[k].first, edges[k].second));
        m(edges[k].first, edges[k].second) = 0.0;
      }
    }
    if (cost < best && acyclic_by_orderings(m)) best = cost;
  }
  return best;
}

}  // namespace oracle
