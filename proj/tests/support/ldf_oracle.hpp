#pragma once

// Test-only LDF: solve flow balance and the branch voltage equations as one
// dense linear system instead of walking the tree.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

/// Gaussian elimination with partial pivoting; A is row-major dim x dim.
inline std::vector<double> dense_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    }
    if (std::abs(A[piv][c]) < 1e-300) throw std::runtime_error("dense_solve: singular system");
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double k = A[r][c] / A[c][c];
      if (k == 0.0) continue;
      for (std::size_t j = c; j < n; ++j) A[r][j] -= k * A[c][j];
      b[r] -= k * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= A[i][j] * x[j];
    x[i] = s / A[i][i];
  }
  return x;
}

struct Branch {
  int a, b;      // positive flow runs a -> b
  double r_pu;
};

struct LdfResult {
  std::vector<double> v;  // per node
  std::vector<double> f;  // per branch, pu
};

/// Unknowns are [f; v]. Rows: inflow - outflow = p at non-slack nodes,
/// v_a - v_b - r f = 0 per branch, v = 1 at slack nodes. Square for a forest
/// with one slack per tree.
inline LdfResult ldf_linear(std::size_t n, const std::vector<Branch>& branches, const std::vector<double>& p_pu,
                            const std::vector<bool>& slack) {
  const std::size_t m = branches.size();
  const std::size_t dim = m + n;
  std::vector<std::vector<double>> A(dim, std::vector<double>(dim, 0.0));
  std::vector<double> rhs(dim, 0.0);
  std::size_t row = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (slack[i]) {
      A[row][m + i] = 1.0;
      rhs[row] = 1.0;
    } else {
      for (std::size_t e = 0; e < m; ++e) {
        if (branches[e].b == static_cast<int>(i)) A[row][e] += 1.0;
        if (branches[e].a == static_cast<int>(i)) A[row][e] -= 1.0;
      }
      rhs[row] = p_pu[i];
    }
    ++row;
  }
  for (std::size_t e = 0; e < m; ++e, ++row) {
    A[row][m + branches[e].a] = 1.0;
    A[row][m + branches[e].b] = -1.0;
    A[row][e] = -branches[e].r_pu;
  }
  if (row != dim) throw std::logic_error("ldf_linear: system is not square");
  const std::vector<double> x = dense_solve(std::move(A), std::move(rhs));
  LdfResult out;
  out.f.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m));
  out.v.assign(x.begin() + static_cast<std::ptrdiff_t>(m), x.end());
  return out;
}

}  // namespace oracle
