#pragma once

// Test-only exhaustive search for the secondary network problem.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "support/flow_oracle.hpp"

namespace oracle {

struct SecondaryInstance {
  int n_res = 0;
  int n_tx = 0;
  std::vector<std::pair<int, int>> edges;  // residences 0..n_res-1, transformers after
  std::vector<double> weight;
  std::vector<double> demand;
  double capacity = 0.0;
};

struct SecondaryOptimum {
  double objective;
  std::uint64_t mask;
};

/// Minimum total weight over edge subsets with exactly n_res edges, residence
/// degree <= 2 and a capacity-feasible flow serving every residence.
inline std::optional<SecondaryOptimum> secondary_brute_force(const SecondaryInstance& in) {
  const std::size_t m = in.edges.size();
  std::optional<SecondaryOptimum> best;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    if (__builtin_popcountll(mask) != in.n_res) continue;
    std::vector<int> degree(in.n_res + in.n_tx, 0);
    std::vector<std::pair<int, int>> chosen;
    double w = 0.0;
    for (std::size_t e = 0; e < m; ++e) {
      if (!(mask >> e & 1)) continue;
      chosen.push_back(in.edges[e]);
      ++degree[in.edges[e].first];
      ++degree[in.edges[e].second];
      w += in.weight[e];
    }
    bool ok = true;
    for (int h = 0; h < in.n_res && ok; ++h) ok = degree[h] <= 2;
    if (!ok || (best && w >= best->objective)) continue;
    if (can_serve(in.n_res, in.n_tx, chosen, in.demand, in.capacity)) best = SecondaryOptimum{w, mask};
  }
  return best;
}

}  // namespace oracle
