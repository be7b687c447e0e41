#pragma once

#include <cstdint>
#include <vector>

#include "common.hpp"
#include "graph_core.hpp"
#include "tear_milp.hpp"

namespace tearlearn {

struct TearConfig {
  double omega = 0.0;  // entries with |A_ij| < omega are dropped before tearing
  int max_len = 0;     // 0 = d; a round with no cycle this short searches all lengths
  int max_count = kDefaultMaxCycles;
  WeightMode weight_mode = WeightMode::kAbs;
  std::int64_t node_budget = kDefaultNodeBudget;
};

struct TornStream {
  int source = 0;
  int target = 0;
  double weight = 0.0;  // signed value before removal
  int round = 0;

  friend bool operator==(const TornStream&, const TornStream&) = default;
};

struct RoundStats {
  int cycles = 0;
  bool enumeration_truncated = false;
  int streams = 0;
  int torn = 0;
  double cost = 0.0;  // objective value in the configured weight mode
  bool optimal = false;
  std::int64_t explored_nodes = 0;

  friend bool operator==(const RoundStats&, const RoundStats&) = default;
};

struct TearReport {
  WeightMatrix a_final;
  std::vector<TornStream> torn_streams;
  int rounds = 0;
  double total_torn_weight = 0.0;  // sum of |A_ij| over removed entries
  bool milp_optimal_every_round = true;
  bool enumeration_complete_every_round = true;
  std::vector<RoundStats> round_stats;
  double threshold = 0.0;  // truncation only: final cut-off
};

/// Drops entries below omega and Forbidden entries, then sets every
/// Obligatory entry that ended up zero to +max|A| of the input.
WeightMatrix preprocess(const WeightMatrix& a, const PriorSpec& prior, double omega);

/// Repeats enumerate -> loop matrix -> MILP -> zero torn entries until the
/// graph is acyclic. `prior` may be null (all Unknown). The input must already
/// be preprocessed (no Forbidden entries).
TearReport tear_until_acyclic(const WeightMatrix& a, const PriorSpec* prior, const TearConfig& cfg);

/// Raises a threshold through the distinct magnitudes of A (ascending),
/// zeroing every |A_ij| <= threshold, until the graph is acyclic.
TearReport truncate_until_acyclic(const WeightMatrix& a);

}  // namespace tearlearn
