#pragma once

#include <optional>
#include <string>
#include <vector>

#include "common.hpp"

namespace tearlearn {

/// Edge classification of an estimated graph against ground truth.
/// Pairs are ordered (i -> j) for tp/r/fp/tee/t and unordered for the
/// skeleton counts e/m and for f (unordered pairs absent from the true
/// skeleton).
struct EdgeConfusion {
  int tp = 0;
  int r = 0;
  int fp = 0;
  int e = 0;
  int m = 0;
  int tee = 0;
  int t = 0;
  int f = 0;

  friend bool operator==(const EdgeConfusion&, const EdgeConfusion&) = default;
};

EdgeConfusion edge_confusion(const WeightMatrix& estimated, const WeightMatrix& truth);

// Degenerate denominators give 0.
double fdr(const EdgeConfusion& c);
double tpr(const EdgeConfusion& c);
double fpr(const EdgeConfusion& c);
int shd(const EdgeConfusion& c);

struct StructureScores {
  double fdr = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  int shd = 0;
  std::vector<std::string> warnings;  // one per degenerate denominator
};

StructureScores score_structure(const EdgeConfusion& c);

/// Parents of `node` in the support of `dag` (rows with a nonzero in column
/// `node`), ascending.
std::vector<int> parents_of(const WeightMatrix& dag, int node);

struct BicResult {
  double score = 0.0;
  bool ridge_used = false;
};

/// -(n/2)(log(2 pi s2) + 1) for the node's regression on its parents with an
/// intercept, s2 the maximum-likelihood residual variance. Falls back to a
/// 1e-8 ridge on collinear parents.
BicResult gaussian_bic_local(const Dataset& x, int node, const std::vector<int>& parents);

/// Sum of local terms minus (log n / 2) * sum_i (|parents(i)| + 2). Higher is
/// better. Requires an acyclic support and n > d.
BicResult gaussian_bic(const Dataset& x, const WeightMatrix& dag);

struct BgeHyper {
  double alpha_mu = 1.0;
  std::optional<double> alpha_w;  // default d + 2
  std::optional<double> t_scale;  // default alpha_mu (alpha_w - d - 1) / (alpha_mu + 1)
};

/// Normal-Wishart (BGe) marginal log-likelihood scorer with the prior mean at
/// the sample mean and prior scale matrix t_scale * I.
class BgeScorer {
 public:
  BgeScorer(const Dataset& x, const BgeHyper& hyper = {});

  /// log p(data restricted to `vars`); 0 for the empty set.
  double subset_log_marginal(const std::vector<int>& vars) const;
  /// log p(node | parents) = log p(family) - log p(parents).
  double local(int node, const std::vector<int>& parents) const;
  double score(const WeightMatrix& dag) const;

  double alpha_mu() const { return alpha_mu_; }
  double alpha_w() const { return alpha_w_; }
  double t_scale() const { return t_scale_; }

 private:
  int n_ = 0;
  int d_ = 0;
  double alpha_mu_ = 1.0;
  double alpha_w_ = 0.0;
  double t_scale_ = 0.0;
  Matrix posterior_;  // T + S_n
};

double bge_score(const Dataset& x, const WeightMatrix& dag, const BgeHyper& hyper = {});

struct PerturbationBound {
  double bound = 0.0;
  double actual = 0.0;
};

/// Spectral-norm relative error of X dA against XA, and its upper bound
/// ||X|| ||dA|| / ||XA||.
PerturbationBound perturbation_bound(const Dataset& x, const Matrix& a, const Matrix& delta_a);

/// First-order relative-error bound (jacobian_norm / output_norm) * deltaA_norm.
double perturbation_bound_nonlinear(double jacobian_norm, double output_norm, double delta_a_norm);

double spectral_norm(const Matrix& m);

}  // namespace tearlearn
