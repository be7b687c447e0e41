#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "common.hpp"

namespace tearlearn {

/// A directed edge source -> target ("stream") with a non-negative weight.
struct Stream {
  int id = 0;
  int source = 0;
  int target = 0;
  double weight = 0.0;

  friend bool operator==(const Stream&, const Stream&) = default;
};

/// Closed directed walk without repeated intermediate nodes, as stream ids in
/// walk order starting from the smallest node.
struct Cycle {
  std::vector<int> streams;

  friend bool operator==(const Cycle&, const Cycle&) = default;
};

struct CycleEnumeration {
  std::vector<Cycle> cycles;
  /// Set when `max_count` stopped the search early. Length-capped searches are
  /// complete for their length bound and do not set this.
  bool truncated = false;
};

/// Binary cycles x streams incidence matrix.
class LoopMatrix {
 public:
  LoopMatrix() = default;
  LoopMatrix(int rows, std::vector<Stream> streams);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return static_cast<int>(streams_.size()); }
  bool at(int row, int col) const { return cells_[static_cast<std::size_t>(row) * cols() + col] != 0; }
  void set(int row, int col) { cells_[static_cast<std::size_t>(row) * cols() + col] = 1; }
  const std::vector<Stream>& stream_index() const noexcept { return streams_; }
  /// Column indices with a 1 in `row`, ascending.
  std::vector<int> row_support(int row) const;

 private:
  int rows_ = 0;
  std::vector<Stream> streams_;
  std::vector<std::uint8_t> cells_;
};

/// One stream per nonzero off-diagonal entry in row-major order, weight |A_ij|.
/// Entries the prior marks Forbidden are skipped when a prior is given.
std::vector<Stream> nonzero_streams(const WeightMatrix& a, const PriorSpec* prior = nullptr);

bool is_acyclic(std::span<const Stream> streams, int d);
bool is_acyclic(const WeightMatrix& a);

inline constexpr int kDefaultMaxCycles = 10000;

/// Simple directed cycles of at most `max_len` edges, at most `max_count` of
/// them, ordered by smallest node then lexicographically by node sequence.
/// `max_len` >= d runs Johnson's algorithm; shorter bounds use a
/// distance-pruned depth-first search.
CycleEnumeration enumerate_simple_cycles(std::span<const Stream> streams, int d, int max_len,
                                         int max_count = kDefaultMaxCycles);

/// Node sequence of a cycle (start node first, start not repeated at the end).
std::vector<int> cycle_nodes(const Cycle& c, std::span<const Stream> streams);

LoopMatrix build_loop_matrix(std::span<const Cycle> cycles, std::span<const Stream> streams);

}  // namespace tearlearn
