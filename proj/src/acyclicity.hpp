#pragma once

#include "common.hpp"

namespace tearlearn {

/// Which smooth acyclicity function to use. `gamma` only matters for the
/// polynomial form and must be positive there.
struct AcyclicityMode {
  enum class Kind { kExpTrace, kPolynomial };
  Kind kind = Kind::kExpTrace;
  double gamma = 1.0;

  static AcyclicityMode exp_trace() { return {Kind::kExpTrace, 1.0}; }
  static AcyclicityMode polynomial(double gamma) { return {Kind::kPolynomial, gamma}; }
};

/// exp(M) by scaling and squaring a Taylor series. The scaled matrix has
/// 1-norm <= 1/2 and terms are summed until they drop below 1e-16 of the
/// partial sum, well inside the 1e-12 absolute budget.
Matrix matrix_exp(const Matrix& m);

/// Tr(exp(A o A)) - d.
double h_exp(const Matrix& a);
/// Tr((I + gamma A o A)^d) - d.
double h_poly(const Matrix& a, double gamma);

/// 2 A o exp(A o A)^T
Matrix grad_h_exp(const Matrix& a);
/// 2 gamma d A o ((I + gamma A o A)^(d-1))^T
Matrix grad_h_poly(const Matrix& a, double gamma);

struct AcyclicityValue {
  double h = 0.0;
  Matrix grad;
};

/// h and its gradient sharing one matrix function evaluation.
AcyclicityValue acyclicity(const Matrix& a, const AcyclicityMode& mode);
double acyclicity_value(const Matrix& a, const AcyclicityMode& mode);

}  // namespace tearlearn
