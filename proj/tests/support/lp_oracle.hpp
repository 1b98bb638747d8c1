#pragma once

// Test-only LP reference: enumerate every basic point of a small bounded LP.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

/// Dense LP: min c.x s.t. rows (sense -1: <=, 0: =, +1: >=), lo <= x <= hi
/// with all bounds finite.
struct DenseLp {
  std::vector<double> c;
  std::vector<std::vector<double>> a;
  std::vector<int> sense;
  std::vector<double> b;
  std::vector<double> lo, hi;
};

namespace detail {

inline std::optional<std::vector<double>> solve_square(std::vector<std::vector<double>> m,
                                                       std::vector<double> r) {
  const std::size_t n = r.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < n; ++i) {
      if (std::abs(m[i][col]) > std::abs(m[piv][col])) piv = i;
    }
    if (std::abs(m[piv][col]) < 1e-10) return std::nullopt;
    std::swap(m[piv], m[col]);
    std::swap(r[piv], r[col]);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == col) continue;
      const double f = m[i][col] / m[col][col];
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) m[i][j] -= f * m[col][j];
      r[i] -= f * r[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = r[i] / m[i][i];
  return x;
}

}  // namespace detail

/// Best objective over all basic feasible points, or nullopt if none exists.
inline std::optional<double> enumerate_vertices(const DenseLp& lp, double tol = 1e-7) {
  const std::size_t n = lp.c.size();
  // Candidate hyperplanes: every row, then lo and hi of each variable. Equality
  // rows need not be among the n chosen planes; the feasibility check holds them.
  std::vector<std::vector<double>> planes;
  std::vector<double> rhs;
  for (std::size_t i = 0; i < lp.a.size(); ++i) {
    planes.push_back(lp.a[i]);
    rhs.push_back(lp.b[i]);
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0);
    e[j] = 1.0;
    planes.push_back(e);
    rhs.push_back(lp.lo[j]);
    planes.push_back(e);
    rhs.push_back(lp.hi[j]);
  }
  const std::size_t total = planes.size();
  std::optional<double> best;
  std::vector<std::size_t> pick(n);
  // Iterate over n-subsets in lexicographic order.
  for (std::size_t i = 0; i < n; ++i) pick[i] = i;
  while (true) {
    {
      std::vector<std::vector<double>> m;
      std::vector<double> r;
      for (std::size_t k : pick) {
        m.push_back(planes[k]);
        r.push_back(rhs[k]);
      }
      if (auto x = detail::solve_square(m, r)) {
        bool feasible = true;
        for (std::size_t j = 0; j < n && feasible; ++j) {
          feasible = (*x)[j] >= lp.lo[j] - tol && (*x)[j] <= lp.hi[j] + tol;
        }
        for (std::size_t i = 0; i < lp.a.size() && feasible; ++i) {
          double act = 0.0;
          for (std::size_t j = 0; j < n; ++j) act += lp.a[i][j] * (*x)[j];
          const double scale = tol * std::max(1.0, std::abs(lp.b[i]));
          if (lp.sense[i] < 0) feasible = act <= lp.b[i] + scale;
          if (lp.sense[i] > 0) feasible = act >= lp.b[i] - scale;
          if (lp.sense[i] == 0) feasible = std::abs(act - lp.b[i]) <= scale;
        }
        if (feasible) {
          double obj = 0.0;
          for (std::size_t j = 0; j < n; ++j) obj += lp.c[j] * (*x)[j];
          if (!best || obj < *best) best = obj;
        }
      }
    }
    // Next combination.
    std::size_t i = n;
    while (i > 0 && pick[i - 1] == total - n + (i - 1)) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t k = i; k < n; ++k) pick[k] = pick[k - 1] + 1;
  }
  return best;
}

/// Exhaustive 0/1 knapsack: maximum value with total weight <= capacity.
inline double knapsack_enumerate(const std::vector<double>& value, const std::vector<double>& weight,
                                 double capacity) {
  const std::size_t n = value.size();
  double best = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double v = 0.0, w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) {
        v += value[i];
        w += weight[i];
      }
    }
    if (w <= capacity + 1e-12) best = std::max(best, v);
  }
  return best;
}

}  // namespace oracle
