#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"
#include "graph_core.hpp"

namespace tearlearn {

enum class WeightMode { kAbs, kSquare };

/// Loop-cover integer program: minimise sum w_j y_j subject to every loop
/// matrix row containing a torn stream (y_j = 1) and lb_j <= y_j <= ub_j.
/// An upper bound of 0.5 admits only y_j = 0 for the binary variable.
struct TearProblem {
  std::vector<Stream> streams;
  LoopMatrix u;
  std::vector<double> weights;
  std::vector<double> lb;
  std::vector<double> ub;

  /// Throws kStructure on size mismatches, negative weights or bounds outside
  /// {0} x {0.5, 1}.
  void validate() const;
};

struct TearSolution {
  std::vector<int> y;  // 1 = torn
  double cost = 0.0;
  bool optimal = false;
  std::int64_t explored_nodes = 0;
};

/// A loop made only of untearable (Obligatory) streams.
class InfeasibleTear : public Error {
 public:
  InfeasibleTear(int row, std::vector<int> stream_ids);
  InfeasibleTear(int row, std::vector<int> stream_ids, const std::string& what)
      : Error(ErrorCode::kInfeasible, what), row_(row), stream_ids_(std::move(stream_ids)) {}
  int row() const noexcept { return row_; }
  const std::vector<int>& stream_ids() const noexcept { return stream_ids_; }

 private:
  int row_;
  std::vector<int> stream_ids_;
};

/// w_j = |A| (kAbs) or A^2 (kSquare) at each stream's position.
std::vector<double> weights_from_matrix(const WeightMatrix& a, std::span<const Stream> streams,
                                        WeightMode mode = WeightMode::kAbs);

struct StreamBounds {
  std::vector<double> lb;
  std::vector<double> ub;
};

/// Selects one disjunct per stream: Unknown -> [0, 1.0], Obligatory -> [0, 0.5].
/// Forbidden streams must have been removed beforehand (kStructure otherwise).
StreamBounds apply_prior(std::span<const Stream> streams, const PriorSpec& prior);

inline constexpr std::int64_t kDefaultNodeBudget = 1'000'000;

/// Exact best-first branch-and-bound. Past `node_budget` nodes the best
/// incumbent is returned with optimal = false. Throws InfeasibleTear when a
/// row has no tearable stream.
TearSolution solve_tear(const TearProblem& problem, std::int64_t node_budget = kDefaultNodeBudget);

/// Line-oriented text dump of a problem; `load_tear_problem` reads it back.
std::string dump_tear_problem(const TearProblem& problem);
TearProblem load_tear_problem(std::string_view text);

}  // namespace tearlearn
