#include "postprocess.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace tearlearn {

WeightMatrix preprocess(const WeightMatrix& a, const PriorSpec& prior, double omega) {
  if (prior.dim() != a.dim()) throw Error(ErrorCode::kStructure, "prior dimension does not match weight matrix");
  if (!(omega >= 0.0)) throw Error(ErrorCode::kUsage, "omega must be >= 0");
  const double max_abs = a.max_abs();
  Matrix m = a.values();
  const int d = a.dim();
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      if (std::abs(m(i, j)) < omega) m(i, j) = 0.0;
      if (prior(i, j) == EdgePrior::kForbidden) m(i, j) = 0.0;
    }
  }
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j || prior(i, j) != EdgePrior::kObligatory || m(i, j) != 0.0) continue;
      if (max_abs == 0.0) {
        throw Error(ErrorCode::kNumerical, "obligatory edge " + std::to_string(i) + "->" + std::to_string(j) +
                                               " is absent and A is all zero; no weight to assign");
      }
      m(i, j) = max_abs;
    }
  }
  return WeightMatrix(std::move(m));
}

TearReport tear_until_acyclic(const WeightMatrix& a, const PriorSpec* prior, const TearConfig& cfg) {
  if (prior != nullptr && prior->dim() != a.dim()) {
    throw Error(ErrorCode::kStructure, "prior dimension does not match weight matrix");
  }
  if (cfg.max_count < 1 || cfg.max_len < 0) throw Error(ErrorCode::kUsage, "invalid cycle enumeration caps");
  const int d = a.dim();
  const PriorSpec unknown(d);
  const PriorSpec& p = prior != nullptr ? *prior : unknown;
  const int max_len = cfg.max_len == 0 ? d : std::max(2, cfg.max_len);

  TearReport report;
  Matrix current = a.values();
  for (;;) {
    const WeightMatrix wm(current);
    const auto streams = nonzero_streams(wm);
    if (is_acyclic(streams, d)) break;
    auto found = enumerate_simple_cycles(streams, d, max_len, cfg.max_count);
    // only longer cycles are left: widen the search rather than stop cyclic
    if (found.cycles.empty()) found = enumerate_simple_cycles(streams, d, d, cfg.max_count);
    TearProblem problem;
    problem.streams = streams;
    problem.u = build_loop_matrix(found.cycles, streams);
    problem.weights = weights_from_matrix(wm, streams, cfg.weight_mode);
    auto bounds = apply_prior(streams, p);
    problem.lb = std::move(bounds.lb);
    problem.ub = std::move(bounds.ub);
    TearSolution sol;
    try {
      sol = solve_tear(problem, cfg.node_budget);
    } catch (const InfeasibleTear& e) {
      std::ostringstream os;
      os << "infeasible tear: cycle";
      const auto nodes = cycle_nodes(found.cycles[static_cast<std::size_t>(e.row())], streams);
      for (std::size_t k = 0; k < nodes.size(); ++k) os << (k ? " -> " : " ") << nodes[k];
      if (!nodes.empty()) os << " -> " << nodes.front();
      os << " consists only of obligatory edges";
      throw InfeasibleTear(e.row(), e.stream_ids(), os.str());
    }

    ++report.rounds;
    RoundStats stats;
    stats.cycles = static_cast<int>(found.cycles.size());
    stats.enumeration_truncated = found.truncated;
    stats.streams = static_cast<int>(streams.size());
    stats.cost = sol.cost;
    stats.optimal = sol.optimal;
    stats.explored_nodes = sol.explored_nodes;
    for (std::size_t j = 0; j < streams.size(); ++j) {
      if (sol.y[j] != 1) continue;
      const auto& s = streams[j];
      if (p(s.source, s.target) == EdgePrior::kObligatory) {
        throw Error(ErrorCode::kNumerical, "tear solution removed an obligatory stream");
      }
      report.torn_streams.push_back({s.source, s.target, current(s.source, s.target), report.rounds});
      report.total_torn_weight += std::abs(current(s.source, s.target));
      current(s.source, s.target) = 0.0;
      ++stats.torn;
    }
    report.milp_optimal_every_round = report.milp_optimal_every_round && sol.optimal;
    report.enumeration_complete_every_round = report.enumeration_complete_every_round && !found.truncated;
    report.round_stats.push_back(stats);
    if (stats.torn == 0) throw Error(ErrorCode::kNumerical, "tear round removed nothing");
  }
  report.a_final = WeightMatrix(current);
  if (!is_acyclic(report.a_final)) throw Error(ErrorCode::kNumerical, "tear stage ended with a cyclic matrix");
  return report;
}

TearReport truncate_until_acyclic(const WeightMatrix& a) {
  TearReport report;
  const int d = a.dim();
  std::set<double> magnitudes;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i != j && a(i, j) != 0.0) magnitudes.insert(std::abs(a(i, j)));
    }
  }
  Matrix current = a.values();
  report.threshold = 0.0;
  for (auto it = magnitudes.begin(); !is_acyclic(WeightMatrix(current)) && it != magnitudes.end(); ++it) {
    const double tau = *it;
    ++report.rounds;
    report.threshold = tau;
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        if (i == j || current(i, j) == 0.0 || std::abs(current(i, j)) > tau) continue;
        report.torn_streams.push_back({i, j, current(i, j), report.rounds});
        report.total_torn_weight += std::abs(current(i, j));
        current(i, j) = 0.0;
      }
    }
  }
  report.a_final = WeightMatrix(current);
  return report;
}

}  // namespace tearlearn
