#include "tear_milp.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

namespace tearlearn {

namespace {

using Word = std::uint64_t;

class Bits {
 public:
  Bits() = default;
  explicit Bits(int nbits) : w_((nbits + 63) / 64, 0) {}
  void set(int i) { w_[i >> 6] |= Word{1} << (i & 63); }
  bool test(int i) const { return (w_[i >> 6] >> (i & 63)) & 1U; }
  int count() const {
    int c = 0;
    for (Word x : w_) c += std::popcount(x);
    return c;
  }
  bool intersects(const Bits& o) const {
    for (std::size_t k = 0; k < w_.size(); ++k) {
      if (w_[k] & o.w_[k]) return true;
    }
    return false;
  }
  bool subset_of(const Bits& o) const {
    for (std::size_t k = 0; k < w_.size(); ++k) {
      if (w_[k] & ~o.w_[k]) return false;
    }
    return true;
  }
  Bits minus(const Bits& o) const {
    Bits r = *this;
    for (std::size_t k = 0; k < w_.size(); ++k) r.w_[k] &= ~o.w_[k];
    return r;
  }
  template <class F>
  void for_each(F&& f) const {
    for (std::size_t k = 0; k < w_.size(); ++k) {
      Word x = w_[k];
      while (x) {
        const int b = std::countr_zero(x);
        f(static_cast<int>(k * 64 + b));
        x &= x - 1;
      }
    }
  }
  friend bool operator==(const Bits&, const Bits&) = default;

 private:
  std::vector<Word> w_;
};

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Node {
  double bound;
  double cost;
  std::int64_t seq;
  Bits in;
  Bits out;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.seq > b.seq;
  }
};

class Solver {
 public:
  Solver(const TearProblem& p, std::int64_t budget) : p_(p), budget_(budget), ncols_(p.u.cols()) {}

  TearSolution run() {
    reduce_rows();
    TearSolution sol;
    sol.y.assign(ncols_, 0);
    if (rows_.empty()) {
      sol.optimal = true;
      return sol;
    }
    greedy_incumbent();

    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    open.push(Node{0.0, 0.0, seq_++, Bits(ncols_), Bits(ncols_)});
    bool exhausted = true;
    while (!open.empty()) {
      if (explored_ >= budget_) {
        exhausted = false;
        break;
      }
      Node node = open.top();
      open.pop();
      if (node.bound >= incumbent_cost_ - tolerance()) continue;
      ++explored_;
      expand(std::move(node), open);
    }
    for (int j = 0; j < ncols_; ++j) sol.y[j] = incumbent_.test(j) ? 1 : 0;
    sol.cost = 0.0;
    for (int j = 0; j < ncols_; ++j) sol.cost += p_.weights[j] * sol.y[j];
    sol.optimal = exhausted;
    sol.explored_nodes = explored_;
    return sol;
  }

 private:
  double tolerance() const { return 1e-12 * std::max(1.0, std::abs(incumbent_cost_)); }

  // Keeps each row's tearable support, drops duplicate and dominated rows.
  void reduce_rows() {
    Bits tearable(ncols_);
    for (int j = 0; j < ncols_; ++j) {
      if (p_.ub[j] >= 1.0) tearable.set(j);
    }
    std::vector<Bits> support;
    support.reserve(p_.u.rows());
    for (int i = 0; i < p_.u.rows(); ++i) {
      Bits row(ncols_);
      bool any = false;
      for (int j = 0; j < ncols_; ++j) {
        if (p_.u.at(i, j) && tearable.test(j)) {
          row.set(j);
          any = true;
        }
      }
      if (!any) {
        std::vector<int> ids;
        for (int j = 0; j < ncols_; ++j) {
          if (p_.u.at(i, j)) ids.push_back(p_.streams[j].id);
        }
        throw InfeasibleTear(i, std::move(ids));
      }
      support.push_back(std::move(row));
    }
    std::vector<int> order(support.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<int> sizes(support.size());
    for (std::size_t i = 0; i < support.size(); ++i) sizes[i] = support[i].count();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sizes[a] < sizes[b]; });
    for (int i : order) {
      bool dominated = false;
      for (const auto& kept : rows_) {
        if (kept.subset_of(support[i])) {
          dominated = true;
          break;
        }
      }
      if (!dominated) rows_.push_back(std::move(support[i]));
    }
  }

  void greedy_incumbent() {
    Bits chosen(ncols_);
    std::vector<bool> covered(rows_.size(), false);
    std::size_t remaining = rows_.size();
    while (remaining > 0) {
      std::vector<int> hits(ncols_, 0);
      for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (!covered[r]) rows_[r].for_each([&](int j) { ++hits[j]; });
      }
      int best = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int j = 0; j < ncols_; ++j) {
        if (hits[j] == 0) continue;
        const double ratio = p_.weights[j] / hits[j];
        if (ratio < best_ratio) {
          best_ratio = ratio;
          best = j;
        }
      }
      chosen.set(best);
      for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (!covered[r] && rows_[r].test(best)) {
          covered[r] = true;
          --remaining;
        }
      }
    }
    // drop redundant picks, heaviest first
    std::vector<int> picks;
    chosen.for_each([&](int j) { picks.push_back(j); });
    std::stable_sort(picks.begin(), picks.end(), [&](int a, int b) { return p_.weights[a] > p_.weights[b]; });
    for (int j : picks) {
      Bits without = chosen;
      without = without.minus(single(j));
      bool still = true;
      for (const auto& row : rows_) {
        if (!row.intersects(without)) {
          still = false;
          break;
        }
      }
      if (still) chosen = without;
    }
    incumbent_ = chosen;
    incumbent_cost_ = 0.0;
    chosen.for_each([&](int j) { incumbent_cost_ += p_.weights[j]; });
  }

  Bits single(int j) const {
    Bits b(ncols_);
    b.set(j);
    return b;
  }

  void expand(Node node, std::priority_queue<Node, std::vector<Node>, NodeOrder>& open) {
    // unit propagation: a row with a single remaining candidate forces it
    std::vector<int> uncovered;
    std::vector<Bits> candidates;
    for (bool changed = true; changed;) {
      changed = false;
      uncovered.clear();
      candidates.clear();
      for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (rows_[r].intersects(node.in)) continue;
        Bits cand = rows_[r].minus(node.out);
        const int c = cand.count();
        if (c == 0) return;  // infeasible subtree
        if (c == 1) {
          cand.for_each([&](int j) {
            node.in.set(j);
            node.cost += p_.weights[j];
          });
          changed = true;
          break;
        }
        uncovered.push_back(static_cast<int>(r));
        candidates.push_back(std::move(cand));
      }
    }
    if (node.cost >= incumbent_cost_ - tolerance()) return;
    if (uncovered.empty()) {
      incumbent_ = node.in;
      incumbent_cost_ = node.cost;
      return;
    }

    std::vector<int> hits(ncols_, 0);
    for (const auto& cand : candidates) cand.for_each([&](int j) { ++hits[j]; });

    // Two admissible bounds: charge each row its cheapest per-row share, and a
    // greedy packing of rows with pairwise disjoint candidate sets.
    double share = 0.0;
    for (const auto& cand : candidates) {
      double m = std::numeric_limits<double>::infinity();
      cand.for_each([&](int j) { m = std::min(m, p_.weights[j] / hits[j]); });
      share += m;
    }
    std::vector<int> by_size(candidates.size());
    std::iota(by_size.begin(), by_size.end(), 0);
    std::vector<int> cand_size(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) cand_size[k] = candidates[k].count();
    std::stable_sort(by_size.begin(), by_size.end(), [&](int a, int b) { return cand_size[a] < cand_size[b]; });
    Bits used(ncols_);
    double packing = 0.0;
    for (int k : by_size) {
      if (candidates[k].intersects(used)) continue;
      double m = std::numeric_limits<double>::infinity();
      candidates[k].for_each([&](int j) {
        m = std::min(m, p_.weights[j]);
        used.set(j);
      });
      packing += m;
    }
    const double bound = node.cost + std::max(share, packing);
    if (bound >= incumbent_cost_ - tolerance()) return;

    int branch = -1;
    for (int j = 0; j < ncols_; ++j) {
      if (hits[j] > 0 && (branch < 0 || hits[j] > hits[branch])) branch = j;
    }
    Node take{bound, node.cost + p_.weights[branch], seq_++, node.in, node.out};
    take.in.set(branch);
    take.bound = std::max(bound, take.cost);
    Node skip{bound, node.cost, seq_++, std::move(node.in), std::move(node.out)};
    skip.out.set(branch);
    open.push(std::move(take));
    open.push(std::move(skip));
  }

  const TearProblem& p_;
  std::int64_t budget_;
  int ncols_;
  std::vector<Bits> rows_;
  Bits incumbent_;
  double incumbent_cost_ = std::numeric_limits<double>::infinity();
  std::int64_t explored_ = 0;
  std::int64_t seq_ = 0;
};

}  // namespace

InfeasibleTear::InfeasibleTear(int row, std::vector<int> stream_ids)
    : Error(ErrorCode::kInfeasible,
            [&] {
              std::ostringstream os;
              os << "infeasible tear: loop " << row << " consists only of obligatory streams {";
              for (std::size_t k = 0; k < stream_ids.size(); ++k) os << (k ? ", " : "") << stream_ids[k];
              os << "}";
              return os.str();
            }()),
      row_(row),
      stream_ids_(std::move(stream_ids)) {}

void TearProblem::validate() const {
  const std::size_t k = streams.size();
  if (static_cast<std::size_t>(u.cols()) != k || weights.size() != k || lb.size() != k || ub.size() != k) {
    throw Error(ErrorCode::kStructure, "tear problem: streams, loop matrix columns, weights and bounds disagree in size");
  }
  for (std::size_t j = 0; j < k; ++j) {
    if (!(weights[j] >= 0.0) || !std::isfinite(weights[j])) {
      throw Error(ErrorCode::kStructure, "tear problem: weight " + std::to_string(j) + " must be finite and >= 0");
    }
    if (lb[j] != 0.0 || (ub[j] != 1.0 && ub[j] != 0.5)) {
      throw Error(ErrorCode::kStructure, "tear problem: bounds of stream " + std::to_string(j) + " must be [0, 1] or [0, 0.5]");
    }
  }
}

std::vector<double> weights_from_matrix(const WeightMatrix& a, std::span<const Stream> streams, WeightMode mode) {
  std::vector<double> w;
  w.reserve(streams.size());
  for (const auto& s : streams) {
    const double v = a(s.source, s.target);
    w.push_back(mode == WeightMode::kAbs ? std::abs(v) : v * v);
  }
  return w;
}

StreamBounds apply_prior(std::span<const Stream> streams, const PriorSpec& prior) {
  StreamBounds b;
  for (const auto& s : streams) {
    if (s.source >= prior.dim() || s.target >= prior.dim()) {
      throw Error(ErrorCode::kStructure, "stream outside the prior's dimension");
    }
    switch (prior(s.source, s.target)) {
      case EdgePrior::kUnknown:
        b.lb.push_back(0.0);
        b.ub.push_back(1.0);
        break;
      case EdgePrior::kObligatory:
        b.lb.push_back(0.0);
        b.ub.push_back(0.5);
        break;
      case EdgePrior::kForbidden:
        throw Error(ErrorCode::kStructure, "forbidden stream " + std::to_string(s.source) + "->" +
                                               std::to_string(s.target) + " reached the tear problem");
    }
  }
  return b;
}

TearSolution solve_tear(const TearProblem& problem, std::int64_t node_budget) {
  problem.validate();
  TearSolution sol = Solver(problem, node_budget).run();
  // post-hoc feasibility check
  for (int i = 0; i < problem.u.rows(); ++i) {
    int covered = 0;
    for (int j = 0; j < problem.u.cols(); ++j) covered += problem.u.at(i, j) ? sol.y[j] : 0;
    if (covered < 1) throw Error(ErrorCode::kNumerical, "tear solver returned a cover missing loop " + std::to_string(i));
  }
  for (std::size_t j = 0; j < sol.y.size(); ++j) {
    if (sol.y[j] > problem.ub[j]) throw Error(ErrorCode::kNumerical, "tear solver violated a stream bound");
  }
  return sol;
}

std::string dump_tear_problem(const TearProblem& problem) {
  problem.validate();
  std::ostringstream os;
  os << "tear-problem v1\n";
  os << "streams " << problem.streams.size() << "\n";
  for (std::size_t j = 0; j < problem.streams.size(); ++j) {
    const auto& s = problem.streams[j];
    os << s.id << ' ' << s.source << ' ' << s.target << ' ' << format_double(s.weight) << ' '
       << format_double(problem.weights[j]) << ' ' << format_double(problem.lb[j]) << ' '
       << format_double(problem.ub[j]) << "\n";
  }
  os << "rows " << problem.u.rows() << "\n";
  for (int i = 0; i < problem.u.rows(); ++i) {
    const auto cols = problem.u.row_support(i);
    os << cols.size();
    for (int c : cols) os << ' ' << c;
    os << "\n";
  }
  return os.str();
}

TearProblem load_tear_problem(std::string_view text) {
  std::istringstream is{std::string(text)};
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kData, "tear problem text: " + what); };
  std::string tag, version;
  if (!(is >> tag >> version) || tag != "tear-problem" || version != "v1") fail("missing 'tear-problem v1' header");
  std::size_t k = 0;
  if (!(is >> tag >> k) || tag != "streams") fail("expected 'streams <count>'");
  TearProblem p;
  for (std::size_t j = 0; j < k; ++j) {
    Stream s;
    double w, lb, ub;
    if (!(is >> s.id >> s.source >> s.target >> s.weight >> w >> lb >> ub)) fail("bad stream line " + std::to_string(j));
    p.streams.push_back(s);
    p.weights.push_back(w);
    p.lb.push_back(lb);
    p.ub.push_back(ub);
  }
  int rows = 0;
  if (!(is >> tag >> rows) || tag != "rows" || rows < 0) fail("expected 'rows <count>'");
  p.u = LoopMatrix(rows, p.streams);
  for (int i = 0; i < rows; ++i) {
    std::size_t c = 0;
    if (!(is >> c)) fail("bad row " + std::to_string(i));
    for (std::size_t t = 0; t < c; ++t) {
      int col = 0;
      if (!(is >> col) || col < 0 || static_cast<std::size_t>(col) >= k) fail("bad column in row " + std::to_string(i));
      p.u.set(i, col);
    }
  }
  p.validate();
  return p;
}

}  // namespace tearlearn
