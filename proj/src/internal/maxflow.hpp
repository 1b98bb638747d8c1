#pragma once

#include <algorithm>
#include <limits>
#include <queue>
#include <vector>

namespace gridsynth::internal {

/// Dinic max-flow on a small dense-ish graph with real capacities.
class MaxFlow {
 public:
  explicit MaxFlow(int n) : adj_(n), level_(n), next_(n) {}

  void add_edge(int u, int v, double cap_uv, double cap_vu) {
    adj_[u].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({v, cap_uv});
    adj_[v].push_back(static_cast<int>(arcs_.size()));
    arcs_.push_back({u, cap_vu});
  }

  double run(int s, int t) {
    double total = 0.0;
    while (bfs(s, t)) {
      std::fill(next_.begin(), next_.end(), 0);
      while (double pushed = dfs(s, t, std::numeric_limits<double>::infinity())) total += pushed;
    }
    return total;
  }

  /// Nodes reachable from s in the residual graph after run().
  std::vector<bool> source_side(int s) const {
    std::vector<bool> seen(adj_.size(), false);
    std::vector<int> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int a : adj_[v]) {
        if (arcs_[a].cap > kEps && !seen[arcs_[a].to]) {
          seen[arcs_[a].to] = true;
          stack.push_back(arcs_[a].to);
        }
      }
    }
    return seen;
  }

 private:
  static constexpr double kEps = 1e-12;
  struct Arc {
    int to;
    double cap;
  };

  bool bfs(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int a : adj_[v]) {
        if (arcs_[a].cap > kEps && level_[arcs_[a].to] < 0) {
          level_[arcs_[a].to] = level_[v] + 1;
          q.push(arcs_[a].to);
        }
      }
    }
    return level_[t] >= 0;
  }

  double dfs(int v, int t, double limit) {
    if (v == t) return limit;
    for (int& i = next_[v]; i < static_cast<int>(adj_[v].size()); ++i) {
      Arc& arc = arcs_[adj_[v][i]];
      if (arc.cap <= kEps || level_[arc.to] != level_[v] + 1) continue;
      const double pushed = dfs(arc.to, t, std::min(limit, arc.cap));
      if (pushed > 0.0) {
        arc.cap -= pushed;
        arcs_[adj_[v][i] ^ 1].cap += pushed;
        return pushed;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<int>> adj_;
  std::vector<Arc> arcs_;
  std::vector<int> level_, next_;
};

}  // namespace gridsynth::internal
