#include "evaluation.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "graph_core.hpp"

namespace tearlearn {

namespace {

void require_acyclic(const WeightMatrix& dag) {
  if (!is_acyclic(dag)) throw Error(ErrorCode::kStructure, "scoring needs an acyclic graph");
}

double log_multigamma(int p, double a) {
  double r = 0.25 * p * (p - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= p; ++j) r += std::lgamma(a + 0.5 * (1 - j));
  return r;
}

}  // namespace

EdgeConfusion edge_confusion(const WeightMatrix& estimated, const WeightMatrix& truth) {
  if (estimated.dim() != truth.dim()) throw Error(ErrorCode::kStructure, "confusion needs matrices of the same dimension");
  const int d = truth.dim();
  EdgeConfusion c;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      if (truth.has_edge(i, j)) ++c.t;
      if (!estimated.has_edge(i, j)) continue;
      ++c.tee;
      if (truth.has_edge(i, j)) {
        ++c.tp;
      } else if (truth.has_edge(j, i)) {
        ++c.r;
      } else {
        ++c.fp;
      }
    }
  }
  int true_skeleton = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      const bool in_true = truth.has_edge(i, j) || truth.has_edge(j, i);
      const bool in_est = estimated.has_edge(i, j) || estimated.has_edge(j, i);
      true_skeleton += in_true ? 1 : 0;
      if (in_est && !in_true) ++c.e;
      if (in_true && !in_est) ++c.m;
    }
  }
  c.f = d * (d - 1) / 2 - true_skeleton;
  return c;
}

double fdr(const EdgeConfusion& c) { return c.tee > 0 ? static_cast<double>(c.r + c.fp) / c.tee : 0.0; }
double tpr(const EdgeConfusion& c) { return c.t > 0 ? static_cast<double>(c.tp) / c.t : 0.0; }
double fpr(const EdgeConfusion& c) { return c.f > 0 ? static_cast<double>(c.r + c.fp) / c.f : 0.0; }
int shd(const EdgeConfusion& c) { return c.e + c.m + c.r; }

StructureScores score_structure(const EdgeConfusion& c) {
  StructureScores s{fdr(c), tpr(c), fpr(c), shd(c), {}};
  if (c.tee == 0) s.warnings.emplace_back("FDR: no estimated edges, reported as 0");
  if (c.t == 0) s.warnings.emplace_back("TPR: no true edges, reported as 0");
  if (c.f == 0) s.warnings.emplace_back("FPR: no true non-edges, reported as 0");
  return s;
}

std::vector<int> parents_of(const WeightMatrix& dag, int node) {
  std::vector<int> p;
  for (int i = 0; i < dag.dim(); ++i) {
    if (i != node && dag.has_edge(i, node)) p.push_back(i);
  }
  return p;
}

BicResult gaussian_bic_local(const Dataset& x, int node, const std::vector<int>& parents) {
  const int n = x.n();
  const Matrix& X = x.values();
  const int k = static_cast<int>(parents.size()) + 1;
  Matrix design(n, k);
  design.col(0).setOnes();
  for (int c = 0; c < k - 1; ++c) design.col(c + 1) = X.col(parents[c]);
  const Vector y = X.col(node);

  BicResult out;
  Matrix gram = design.transpose() * design;
  Eigen::ColPivHouseholderQR<Matrix> qr(design);
  Vector coef;
  if (qr.rank() < k) {
    out.ridge_used = true;
    gram.diagonal().array() += 1e-8;
    coef = gram.ldlt().solve(design.transpose() * y);
  } else {
    coef = qr.solve(y);
  }
  const double rss = (y - design * coef).squaredNorm();
  double s2 = rss / n;
  if (!(s2 > 0.0)) {
    out.ridge_used = true;
    s2 = 1e-8;
  }
  out.score = -0.5 * n * (std::log(2.0 * std::numbers::pi * s2) + 1.0);
  return out;
}

BicResult gaussian_bic(const Dataset& x, const WeightMatrix& dag) {
  if (dag.dim() != x.d()) throw Error(ErrorCode::kStructure, "graph and data dimensions differ");
  require_acyclic(dag);
  if (x.n() <= x.d()) throw Error(ErrorCode::kData, "Gaussian BIC needs more samples than variables");
  BicResult total;
  double params = 0.0;
  for (int i = 0; i < x.d(); ++i) {
    const auto parents = parents_of(dag, i);
    const auto local = gaussian_bic_local(x, i, parents);
    total.score += local.score;
    total.ridge_used = total.ridge_used || local.ridge_used;
    params += static_cast<double>(parents.size()) + 2.0;
  }
  total.score -= 0.5 * std::log(static_cast<double>(x.n())) * params;
  return total;
}

BgeScorer::BgeScorer(const Dataset& x, const BgeHyper& hyper) : n_(x.n()), d_(x.d()), alpha_mu_(hyper.alpha_mu) {
  alpha_w_ = hyper.alpha_w.value_or(d_ + 2.0);
  if (!(alpha_mu_ > 0.0)) throw Error(ErrorCode::kUsage, "BGe alpha_mu must be > 0");
  if (!(alpha_w_ > d_ - 1.0)) throw Error(ErrorCode::kUsage, "BGe alpha_w must exceed d - 1");
  t_scale_ = hyper.t_scale.value_or(alpha_mu_ * (alpha_w_ - d_ - 1.0) / (alpha_mu_ + 1.0));
  if (!(t_scale_ > 0.0)) throw Error(ErrorCode::kUsage, "BGe t_scale must be > 0 (alpha_w > d + 1 for the default)");
  const Matrix& X = x.values();
  const Vector mean = X.colwise().mean().transpose();
  const Matrix centered = X.rowwise() - mean.transpose();
  posterior_ = centered.transpose() * centered;
  posterior_.diagonal().array() += t_scale_;
}

double BgeScorer::subset_log_marginal(const std::vector<int>& vars) const {
  const int l = static_cast<int>(vars.size());
  if (l == 0) return 0.0;
  Matrix r(l, l);
  for (int a = 0; a < l; ++a) {
    for (int b = 0; b < l; ++b) r(a, b) = posterior_(vars[a], vars[b]);
  }
  Eigen::LLT<Matrix> llt(r);
  if (llt.info() != Eigen::Success) {
    std::ostringstream os;
    os << "BGe posterior scatter matrix is not positive definite for a subset of " << l
       << " variables (smallest diagonal " << r.diagonal().minCoeff() << ")";
    throw Error(ErrorCode::kNumerical, os.str());
  }
  const double log_det_r = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double log_det_t = l * std::log(t_scale_);
  const double df = alpha_w_ - d_ + l;
  const double n = n_;
  return -0.5 * l * n * std::log(std::numbers::pi) + 0.5 * l * std::log(alpha_mu_ / (n + alpha_mu_)) +
         log_multigamma(l, 0.5 * (n + df)) - log_multigamma(l, 0.5 * df) + 0.5 * df * log_det_t -
         0.5 * (n + df) * log_det_r;
}

double BgeScorer::local(int node, const std::vector<int>& parents) const {
  std::vector<int> family = parents;
  family.push_back(node);
  return subset_log_marginal(family) - subset_log_marginal(parents);
}

double BgeScorer::score(const WeightMatrix& dag) const {
  if (dag.dim() != d_) throw Error(ErrorCode::kStructure, "graph and data dimensions differ");
  require_acyclic(dag);
  double s = 0.0;
  for (int i = 0; i < d_; ++i) s += local(i, parents_of(dag, i));
  return s;
}

double bge_score(const Dataset& x, const WeightMatrix& dag, const BgeHyper& hyper) {
  return BgeScorer(x, hyper).score(dag);
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  // largest eigenvalue of the smaller Gram matrix
  const Matrix g = m.rows() >= m.cols() ? Matrix(m.transpose() * m) : Matrix(m * m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

PerturbationBound perturbation_bound(const Dataset& x, const Matrix& a, const Matrix& delta_a) {
  if (a.rows() != x.d() || a.cols() != x.d() || delta_a.rows() != a.rows() || delta_a.cols() != a.cols()) {
    throw Error(ErrorCode::kStructure, "perturbation bound: dimension mismatch");
  }
  const Matrix& X = x.values();
  const double xa = spectral_norm(X * a);
  if (!(xa > 0.0)) throw Error(ErrorCode::kNumerical, "perturbation bound undefined: ||XA|| = 0");
  return {spectral_norm(X) * spectral_norm(delta_a) / xa, spectral_norm(X * delta_a) / xa};
}

double perturbation_bound_nonlinear(double jacobian_norm, double output_norm, double delta_a_norm) {
  if (!(output_norm > 0.0)) throw Error(ErrorCode::kNumerical, "perturbation bound undefined: zero output norm");
  return jacobian_norm / output_norm * delta_a_norm;
}

}  // namespace tearlearn
