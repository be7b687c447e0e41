#include "common.hpp"

#include <cmath>

namespace tearlearn {

bool all_finite(const Matrix& m) { return m.allFinite(); }

WeightMatrix::WeightMatrix(int dim) : m_(Matrix::Zero(dim, dim)) {
  if (dim < 1) throw Error(ErrorCode::kStructure, "weight matrix dimension must be >= 1");
}

WeightMatrix::WeightMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols() || m_.rows() < 1) {
    throw Error(ErrorCode::kStructure, "weight matrix must be square with dim >= 1, got " +
                                           std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()));
  }
  if (!m_.allFinite()) throw Error(ErrorCode::kStructure, "weight matrix has non-finite entries");
  for (Eigen::Index i = 0; i < m_.rows(); ++i) {
    if (m_(i, i) != 0.0) {
      throw Error(ErrorCode::kStructure, "weight matrix diagonal entry " + std::to_string(i) + " is nonzero");
    }
  }
}

WeightMatrix WeightMatrix::zero_diagonal(Matrix m) {
  if (m.rows() == m.cols()) m.diagonal().setZero();
  return WeightMatrix(std::move(m));
}

void WeightMatrix::set(int i, int j, double v) {
  if (i == j) throw Error(ErrorCode::kStructure, "cannot set diagonal entry of a weight matrix");
  if (!std::isfinite(v)) throw Error(ErrorCode::kStructure, "weight must be finite");
  m_(i, j) = v;
}

Dataset::Dataset(Matrix values, std::vector<std::string> names) : x_(std::move(values)), names_(std::move(names)) {
  if (x_.rows() < 1) throw Error(ErrorCode::kData, "dataset needs at least one sample");
  if (x_.cols() < 2) throw Error(ErrorCode::kData, "dataset needs at least two variables");
  if (!x_.allFinite()) throw Error(ErrorCode::kData, "dataset contains non-finite values");
  if (names_.empty()) {
    for (Eigen::Index j = 0; j < x_.cols(); ++j) names_.push_back("x" + std::to_string(j));
  }
  if (static_cast<Eigen::Index>(names_.size()) != x_.cols()) {
    throw Error(ErrorCode::kData, "variable name count does not match column count");
  }
}

Dataset Dataset::standardized() const {
  Matrix z = x_;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const double mean = z.col(j).mean();
    z.col(j).array() -= mean;
    const double sd = std::sqrt(z.col(j).squaredNorm() / static_cast<double>(z.rows()));
    if (sd > 0.0) z.col(j) /= sd;
  }
  return Dataset(std::move(z), names_);
}

PriorSpec::PriorSpec(int dim) : dim_(dim), entries_(static_cast<std::size_t>(dim) * dim, EdgePrior::kUnknown) {
  if (dim < 1) throw Error(ErrorCode::kStructure, "prior dimension must be >= 1");
  for (int i = 0; i < dim; ++i) entries_[index(i, i)] = EdgePrior::kForbidden;
}

void PriorSpec::set(int i, int j, EdgePrior p) {
  if (i < 0 || j < 0 || i >= dim_ || j >= dim_) throw Error(ErrorCode::kStructure, "prior index out of range");
  if (i == j && p != EdgePrior::kForbidden) {
    throw Error(ErrorCode::kStructure, "prior diagonal must stay Forbidden");
  }
  entries_[index(i, j)] = p;
}

bool PriorSpec::any_obligatory() const {
  for (auto e : entries_) {
    if (e == EdgePrior::kObligatory) return true;
  }
  return false;
}

}  // namespace tearlearn
