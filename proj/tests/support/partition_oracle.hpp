#pragma once

// Plain reference algorithms for partition checks: one O(n^2) Dijkstra per
// source and betweenness by explicit all-pairs path counting.

#include <cstdint>
#include <limits>
#include <queue>
#include <utility>
#include <vector>

namespace oracle {

struct WeightedEdge {
  int a, b;
  double w;
};

inline std::vector<double> dijkstra_dense(int n, const std::vector<WeightedEdge>& edges, int source, double offset) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(n, inf);
  std::vector<bool> done(n, false);
  d[source] = offset;
  for (int it = 0; it < n; ++it) {
    int u = -1;
    for (int v = 0; v < n; ++v) {
      if (!done[v] && d[v] < inf && (u < 0 || d[v] < d[u])) u = v;
    }
    if (u < 0) break;
    done[u] = true;
    for (const auto& e : edges) {
      if (e.a == u && d[u] + e.w < d[e.b]) d[e.b] = d[u] + e.w;
      if (e.b == u && d[u] + e.w < d[e.a]) d[e.a] = d[u] + e.w;
    }
  }
  return d;
}

/// Hop distances and shortest-path counts from every source.
struct PathCounts {
  std::vector<std::vector<int>> dist;
  std::vector<std::vector<double>> sigma;
};

inline PathCounts all_pairs_counts(int n, const std::vector<std::pair<int, int>>& edges) {
  std::vector<std::vector<int>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  PathCounts pc{std::vector<std::vector<int>>(n, std::vector<int>(n, -1)),
                std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0))};
  for (int s = 0; s < n; ++s) {
    auto& d = pc.dist[s];
    auto& sg = pc.sigma[s];
    d[s] = 0;
    sg[s] = 1;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int w : adj[v]) {
        if (d[w] < 0) {
          d[w] = d[v] + 1;
          q.push(w);
        }
        if (d[w] == d[v] + 1) sg[w] += sg[v];
      }
    }
  }
  return pc;
}

/// Sum over unordered pairs {s,t} of the fraction of s-t shortest paths
/// that use each edge.
inline std::vector<double> betweenness_by_pairs(int n, const std::vector<std::pair<int, int>>& edges) {
  const PathCounts pc = all_pairs_counts(n, edges);
  std::vector<double> eb(edges.size(), 0.0);
  for (int s = 0; s < n; ++s) {
    for (int t = s + 1; t < n; ++t) {
      const int dst = pc.dist[s][t];
      if (dst < 0) continue;
      for (std::size_t e = 0; e < edges.size(); ++e) {
        for (auto [u, v] : {edges[e], std::pair<int, int>(edges[e].second, edges[e].first)}) {
          if (pc.dist[s][u] >= 0 && pc.dist[v][t] >= 0 && pc.dist[s][u] + 1 + pc.dist[v][t] == dst) {
            eb[e] += pc.sigma[s][u] * pc.sigma[v][t] / pc.sigma[s][t];
          }
        }
      }
    }
  }
  return eb;
}

}  // namespace oracle
