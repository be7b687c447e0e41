#include "graph_core.hpp"

#include <algorithm>
#include <deque>
#include <string>
#include <unordered_map>

namespace tearlearn {

namespace {

struct Adjacency {
  // out[v] = (target, stream id), sorted by target
  std::vector<std::vector<std::pair<int, int>>> out;
};

Adjacency make_adjacency(std::span<const Stream> streams, int d) {
  Adjacency adj;
  adj.out.resize(d);
  for (const auto& s : streams) {
    if (s.source < 0 || s.source >= d || s.target < 0 || s.target >= d) {
      throw Error(ErrorCode::kStructure, "stream " + std::to_string(s.id) + " references a node outside [0, d)");
    }
    adj.out[s.source].emplace_back(s.target, s.id);
  }
  for (auto& o : adj.out) std::sort(o.begin(), o.end());
  return adj;
}

// Tarjan SCC restricted to nodes >= lo. Returns component id per node (-1 if
// excluded).
std::vector<int> strong_components(const Adjacency& adj, int lo) {
  const int d = static_cast<int>(adj.out.size());
  std::vector<int> index(d, -1), low(d, 0), comp(d, -1);
  std::vector<bool> on_stack(d, false);
  std::vector<int> stack;
  int counter = 0, ncomp = 0;

  // iterative Tarjan: frames of (node, next edge position)
  std::vector<std::pair<int, std::size_t>> frames;
  for (int root = lo; root < d; ++root) {
    if (index[root] != -1) continue;
    frames.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      if (pos < adj.out[v].size()) {
        const int w = adj.out[v][pos++].first;
        if (w < lo) continue;
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const int done = v;
      frames.pop_back();
      if (!frames.empty()) {
        const int parent = frames.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
      if (low[done] == index[done]) {
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp[w] = ncomp;
        } while (w != done);
        ++ncomp;
      }
    }
  }
  return comp;
}

class JohnsonSearch {
 public:
  JohnsonSearch(const Adjacency& adj, int max_count, CycleEnumeration& out)
      : adj_(adj), max_count_(max_count), out_(out) {
    const int d = static_cast<int>(adj.out.size());
    blocked_.assign(d, false);
    blocked_by_.assign(d, {});
    allowed_.assign(d, false);
  }

  void run() {
    const int d = static_cast<int>(adj_.out.size());
    for (int s = 0; s < d && !stop_; ++s) {
      const auto comp = strong_components(adj_, s);
      // the component of s must hold at least one other node or a cycle cannot pass through s
      int members = 0;
      for (int v = s; v < d; ++v) {
        allowed_[v] = comp[v] == comp[s];
        members += allowed_[v] ? 1 : 0;
      }
      for (int v = 0; v < s; ++v) allowed_[v] = false;
      if (members < 2) continue;
      for (int v = s; v < d; ++v) {
        blocked_[v] = false;
        blocked_by_[v].clear();
      }
      start_ = s;
      circuit(s);
    }
  }

 private:
  bool circuit(int v) {
    bool found = false;
    node_stack_.push_back(v);
    blocked_[v] = true;
    for (const auto& [w, sid] : adj_.out[v]) {
      if (stop_) break;
      if (!allowed_[w]) continue;
      edge_stack_.push_back(sid);
      if (w == start_) {
        out_.cycles.push_back(Cycle{edge_stack_});
        found = true;
        if (static_cast<int>(out_.cycles.size()) >= max_count_) {
          stop_ = true;
          out_.truncated = true;
        }
      } else if (!blocked_[w] && circuit(w)) {
        found = true;
      }
      edge_stack_.pop_back();
    }
    if (found) {
      unblock(v);
    } else {
      for (const auto& [w, sid] : adj_.out[v]) {
        if (!allowed_[w]) continue;
        auto& b = blocked_by_[w];
        if (std::find(b.begin(), b.end(), v) == b.end()) b.push_back(v);
      }
    }
    node_stack_.pop_back();
    return found;
  }

  void unblock(int u) {
    std::vector<int> work{u};
    while (!work.empty()) {
      const int x = work.back();
      work.pop_back();
      if (!blocked_[x]) continue;
      blocked_[x] = false;
      for (int y : blocked_by_[x]) work.push_back(y);
      blocked_by_[x].clear();
    }
  }

  const Adjacency& adj_;
  int max_count_;
  CycleEnumeration& out_;
  int start_ = 0;
  bool stop_ = false;
  std::vector<bool> blocked_;
  std::vector<std::vector<int>> blocked_by_;
  std::vector<bool> allowed_;
  std::vector<int> node_stack_;
  std::vector<int> edge_stack_;
};

class BoundedSearch {
 public:
  BoundedSearch(const Adjacency& adj, int max_len, int max_count, CycleEnumeration& out)
      : adj_(adj), max_len_(max_len), max_count_(max_count), out_(out) {
    const int d = static_cast<int>(adj.out.size());
    in_.resize(d);
    for (int v = 0; v < d; ++v) {
      for (const auto& [w, sid] : adj.out[v]) in_[w].push_back(v);
    }
    on_path_.assign(d, false);
    dist_.assign(d, kUnreached);
  }

  void run() {
    const int d = static_cast<int>(adj_.out.size());
    for (int s = 0; s < d && !stop_; ++s) {
      start_ = s;
      distances_to_start();
      if (dist_[s] == kUnreached) continue;
      dfs(s, 0);
    }
  }

 private:
  static constexpr int kUnreached = std::numeric_limits<int>::max() / 2;

  // BFS on reversed edges within nodes >= start; dist_[s] becomes the
  // shortest cycle length through s (or unreached).
  void distances_to_start() {
    std::fill(dist_.begin(), dist_.end(), kUnreached);
    std::deque<int> q;
    for (int u : in_[start_]) {
      if (u > start_ && dist_[u] == kUnreached) {
        dist_[u] = 1;
        q.push_back(u);
      }
    }
    while (!q.empty()) {
      const int v = q.front();
      q.pop_front();
      for (int u : in_[v]) {
        if (u > start_ && dist_[u] == kUnreached) {
          dist_[u] = dist_[v] + 1;
          q.push_back(u);
        }
      }
    }
    int shortest = kUnreached;
    for (const auto& [w, sid] : adj_.out[start_]) {
      if (w > start_ && dist_[w] != kUnreached) shortest = std::min(shortest, dist_[w] + 1);
    }
    dist_[start_] = shortest;
  }

  void dfs(int v, int len) {
    on_path_[v] = true;
    for (const auto& [w, sid] : adj_.out[v]) {
      if (stop_) break;
      if (w == start_) {
        if (len + 1 > max_len_ || len + 1 < 2) continue;
        edge_stack_.push_back(sid);
        out_.cycles.push_back(Cycle{edge_stack_});
        edge_stack_.pop_back();
        if (static_cast<int>(out_.cycles.size()) >= max_count_) {
          stop_ = true;
          out_.truncated = true;
        }
        continue;
      }
      if (w < start_ || on_path_[w] || dist_[w] == kUnreached) continue;
      if (len + 1 + dist_[w] > max_len_) continue;
      edge_stack_.push_back(sid);
      dfs(w, len + 1);
      edge_stack_.pop_back();
    }
    on_path_[v] = false;
  }

  const Adjacency& adj_;
  int max_len_;
  int max_count_;
  CycleEnumeration& out_;
  int start_ = 0;
  bool stop_ = false;
  std::vector<std::vector<int>> in_;
  std::vector<bool> on_path_;
  std::vector<int> dist_;
  std::vector<int> edge_stack_;
};

}  // namespace

LoopMatrix::LoopMatrix(int rows, std::vector<Stream> streams)
    : rows_(rows), streams_(std::move(streams)), cells_(static_cast<std::size_t>(rows) * streams_.size(), 0) {}

std::vector<int> LoopMatrix::row_support(int row) const {
  std::vector<int> cols_in_row;
  for (int j = 0; j < cols(); ++j) {
    if (at(row, j)) cols_in_row.push_back(j);
  }
  return cols_in_row;
}

std::vector<Stream> nonzero_streams(const WeightMatrix& a, const PriorSpec* prior) {
  if (prior != nullptr && prior->dim() != a.dim()) {
    throw Error(ErrorCode::kStructure, "prior dimension does not match weight matrix");
  }
  std::vector<Stream> streams;
  const int d = a.dim();
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j || a(i, j) == 0.0) continue;
      if (prior != nullptr && (*prior)(i, j) == EdgePrior::kForbidden) continue;
      streams.push_back(Stream{static_cast<int>(streams.size()), i, j, std::abs(a(i, j))});
    }
  }
  return streams;
}

bool is_acyclic(std::span<const Stream> streams, int d) {
  // Kahn's algorithm
  std::vector<int> indegree(d, 0);
  std::vector<std::vector<int>> out(d);
  for (const auto& s : streams) {
    out[s.source].push_back(s.target);
    ++indegree[s.target];
  }
  std::vector<int> ready;
  for (int v = 0; v < d; ++v) {
    if (indegree[v] == 0) ready.push_back(v);
  }
  int visited = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++visited;
    for (int w : out[v]) {
      if (--indegree[w] == 0) ready.push_back(w);
    }
  }
  return visited == d;
}

bool is_acyclic(const WeightMatrix& a) {
  const auto streams = nonzero_streams(a);
  return is_acyclic(streams, a.dim());
}

CycleEnumeration enumerate_simple_cycles(std::span<const Stream> streams, int d, int max_len, int max_count) {
  if (max_len < 2) throw Error(ErrorCode::kUsage, "max_len must be >= 2");
  if (max_count < 1) throw Error(ErrorCode::kUsage, "max_count must be >= 1");
  CycleEnumeration result;
  const auto adj = make_adjacency(streams, d);
  if (max_len >= d) {
    JohnsonSearch(adj, max_count, result).run();
  } else {
    BoundedSearch(adj, max_len, max_count, result).run();
  }
  return result;
}

std::vector<int> cycle_nodes(const Cycle& c, std::span<const Stream> streams) {
  std::unordered_map<int, const Stream*> by_id;
  for (const auto& s : streams) by_id.emplace(s.id, &s);
  std::vector<int> nodes;
  for (int sid : c.streams) {
    auto it = by_id.find(sid);
    if (it == by_id.end()) throw Error(ErrorCode::kStructure, "cycle references unknown stream " + std::to_string(sid));
    nodes.push_back(it->second->source);
  }
  return nodes;
}

LoopMatrix build_loop_matrix(std::span<const Cycle> cycles, std::span<const Stream> streams) {
  std::unordered_map<int, int> column;
  for (std::size_t j = 0; j < streams.size(); ++j) column.emplace(streams[j].id, static_cast<int>(j));
  LoopMatrix u(static_cast<int>(cycles.size()), std::vector<Stream>(streams.begin(), streams.end()));
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    for (int sid : cycles[i].streams) {
      auto it = column.find(sid);
      if (it == column.end()) {
        throw Error(ErrorCode::kStructure, "cycle " + std::to_string(i) + " references unknown stream id " +
                                               std::to_string(sid));
      }
      u.set(static_cast<int>(i), it->second);
    }
  }
  return u;
}

}  // namespace tearlearn
