#include "acyclicity.hpp"

#include <cmath>
#include <sstream>

namespace tearlearn {

namespace {

// Taylor terms are dropped once they fall below this fraction of the sum.
constexpr double kSeriesTolerance = 1e-16;

[[noreturn]] void overflow(const Matrix& a, const char* what) {
  std::ostringstream os;
  os << what << " overflowed; largest |A_ij| = " << (a.size() ? a.cwiseAbs().maxCoeff() : 0.0);
  throw Error(ErrorCode::kNumerical, os.str());
}

void check_square(const Matrix& a) {
  if (a.rows() != a.cols()) throw Error(ErrorCode::kStructure, "acyclicity needs a square matrix");
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::kUsage, "polynomial acyclicity needs gamma > 0");
  }
}

Matrix matrix_power(Matrix base, int exponent) {
  Matrix result = Matrix::Identity(base.rows(), base.cols());
  while (exponent > 0) {
    if (exponent & 1) result = result * base;
    exponent >>= 1;
    if (exponent > 0) base = base * base;
  }
  return result;
}

Matrix exp_of_square(const Matrix& a) {
  check_square(a);
  if (!a.allFinite()) overflow(a, "matrix exponential input");
  Matrix e = matrix_exp(a.cwiseProduct(a));
  if (!e.allFinite()) overflow(a, "exp(A o A)");
  return e;
}

Matrix poly_power(const Matrix& a, double gamma, int exponent) {
  check_square(a);
  check_gamma(gamma);
  const auto d = a.rows();
  Matrix base = Matrix::Identity(d, d) + gamma * a.cwiseProduct(a);
  Matrix p = matrix_power(std::move(base), exponent);
  if (!p.allFinite()) overflow(a, "(I + gamma A o A)^k");
  return p;
}

}  // namespace

Matrix matrix_exp(const Matrix& m) {
  const auto d = m.rows();
  // scale so that the 1-norm is at most 1/2
  const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix scaled = m / std::ldexp(1.0, squarings);

  Matrix sum = Matrix::Identity(d, d);
  Matrix term = Matrix::Identity(d, d);
  for (int k = 1; k < 64; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
    const double t = term.cwiseAbs().maxCoeff();
    if (t <= kSeriesTolerance * std::max(1.0, sum.cwiseAbs().maxCoeff())) break;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

double h_exp(const Matrix& a) {
  const Matrix e = exp_of_square(a);
  return e.trace() - static_cast<double>(a.rows());
}

double h_poly(const Matrix& a, double gamma) {
  const Matrix p = poly_power(a, gamma, static_cast<int>(a.rows()));
  return p.trace() - static_cast<double>(a.rows());
}

Matrix grad_h_exp(const Matrix& a) {
  const Matrix e = exp_of_square(a);
  return 2.0 * a.cwiseProduct(e.transpose());
}

Matrix grad_h_poly(const Matrix& a, double gamma) {
  const auto d = static_cast<int>(a.rows());
  const Matrix p = poly_power(a, gamma, d - 1);
  return (2.0 * gamma * d) * a.cwiseProduct(p.transpose());
}

AcyclicityValue acyclicity(const Matrix& a, const AcyclicityMode& mode) {
  const auto d = static_cast<int>(a.rows());
  AcyclicityValue out;
  if (mode.kind == AcyclicityMode::Kind::kExpTrace) {
    const Matrix e = exp_of_square(a);
    out.h = e.trace() - d;
    out.grad = 2.0 * a.cwiseProduct(e.transpose());
  } else {
    const Matrix p_minus = poly_power(a, mode.gamma, d - 1);
    const Matrix base = Matrix::Identity(d, d) + mode.gamma * a.cwiseProduct(a);
    out.h = (p_minus * base).trace() - d;
    if (!std::isfinite(out.h)) overflow(a, "(I + gamma A o A)^d");
    out.grad = (2.0 * mode.gamma * d) * a.cwiseProduct(p_minus.transpose());
  }
  return out;
}

double acyclicity_value(const Matrix& a, const AcyclicityMode& mode) {
  return mode.kind == AcyclicityMode::Kind::kExpTrace ? h_exp(a) : h_poly(a, mode.gamma);
}

}  // namespace tearlearn
