#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tearlearn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Failure categories. The numeric values double as CLI exit codes.
enum class ErrorCode : int {
  kUsage = 2,
  kData = 3,
  kInfeasible = 4,
  kNumerical = 5,
  kStructure = 6,
  kIo = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Dense square matrix of edge coefficients; entry (i, j) is the edge i -> j.
/// Always square, finite, with an exactly-zero diagonal.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  explicit WeightMatrix(int dim);
  /// Throws kStructure if `m` is not square, has non-finite entries, or a
  /// nonzero diagonal.
  explicit WeightMatrix(Matrix m);
  /// Same as the checked constructor but forces the diagonal to zero first.
  static WeightMatrix zero_diagonal(Matrix m);

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Matrix& values() const noexcept { return m_; }

  /// Writes an off-diagonal entry. Writing the diagonal throws.
  void set(int i, int j, double v);
  bool has_edge(int i, int j) const { return m_(i, j) != 0.0; }
  double max_abs() const { return m_.size() == 0 ? 0.0 : m_.cwiseAbs().maxCoeff(); }

  friend bool operator==(const WeightMatrix& a, const WeightMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Matrix m_;
};

/// n x d sample matrix; row = one observation.
class Dataset {
 public:
  Dataset() = default;
  Dataset(Matrix values, std::vector<std::string> names = {});

  int n() const noexcept { return static_cast<int>(x_.rows()); }
  int d() const noexcept { return static_cast<int>(x_.cols()); }
  const Matrix& values() const noexcept { return x_; }
  const std::vector<std::string>& names() const noexcept { return names_; }

  /// Per-column zero mean, unit (population) variance. Constant columns are
  /// only centred.
  Dataset standardized() const;

 private:
  Matrix x_;
  std::vector<std::string> names_;
};

enum class EdgePrior : std::uint8_t { kUnknown, kObligatory, kForbidden };

/// Tri-state prior knowledge per ordered node pair. Diagonal is Forbidden.
class PriorSpec {
 public:
  PriorSpec() = default;
  /// All off-diagonal entries Unknown.
  explicit PriorSpec(int dim);

  int dim() const noexcept { return dim_; }
  EdgePrior operator()(int i, int j) const { return entries_[index(i, j)]; }
  /// Setting a diagonal entry to anything but Forbidden throws kStructure.
  void set(int i, int j, EdgePrior p);
  bool any_obligatory() const;

  friend bool operator==(const PriorSpec&, const PriorSpec&) = default;

 private:
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * dim_ + j; }
  int dim_ = 0;
  std::vector<EdgePrior> entries_;
};

bool all_finite(const Matrix& m);

}  // namespace tearlearn
