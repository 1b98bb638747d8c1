#pragma once

#include <cstddef>
#include <vector>

#include "gridsynth/milp.hpp"

namespace gridsynth::milp::detail {

/// Bounded-variable simplex on an explicit dense tableau B^-1 [A I].
///
/// The tableau is kept between solves so branch-and-bound can change bounds
/// or append rows and re-optimize with the dual simplex from the previous
/// basis. Every column is either basic or sits at one of its bounds (free
/// nonbasics sit at zero). A sparse LU-based revised implementation could
/// replace this class behind the same interface.
class DenseSimplex {
 public:
  enum class Result { Optimal, Infeasible, Unbounded };

  explicit DenseSimplex(const LinearModel& model);

  /// Optimizes from the current basis: dual simplex when the basis is dual
  /// feasible (after bound flips), two-phase primal otherwise.
  Result optimize();

  /// Changes the bounds of structural variable j.
  void set_bounds(int j, double lower, double upper);
  double lower(int j) const { return lb_[j]; }
  double upper(int j) const { return ub_[j]; }

  /// Appends a row; its slack enters the basis.
  void add_row(const Constraint& c);

  std::vector<double> primal() const;
  double objective() const;
  std::vector<double> duals() const;
  std::vector<double> reduced_costs() const;
  std::size_t iterations() const { return iterations_; }

 private:
  enum class At : unsigned char { Basic, Lower, Upper, Zero };

  double& tab(std::size_t i, std::size_t j) { return rows_[i][j]; }
  double tab(std::size_t i, std::size_t j) const { return rows_[i][j]; }
  std::size_t cols() const { return lb_.size(); }

  void pivot(std::size_t r, std::size_t q);
  void move_nonbasic(std::size_t j, double value);
  void place_nonbasic(std::size_t j);
  bool flip_to_dual_feasible();
  void recompute_reduced_costs();
  void refactor();
  double primal_residual() const;

  Result primal(bool phase_one);
  Result dual();
  Result run();
  void count_iteration(bool degenerate);

  // Original data (structurals then one slack per row).
  std::size_t n_ = 0;
  std::vector<std::vector<Term>> a_rows_;
  std::vector<double> b_;
  std::vector<double> cost_;

  std::vector<std::vector<double>> rows_;  // tableau rows
  std::vector<double> lb_, ub_, x_, d_;
  std::vector<std::size_t> basis_;  // basic column of each row
  std::vector<At> at_;
  std::vector<long> row_of_;  // row of a basic column, -1 otherwise

  std::size_t iterations_ = 0;
  std::size_t since_refactor_ = 0;
  std::size_t degenerate_run_ = 0;
  bool bland_ = false;
};

}  // namespace gridsynth::milp::detail
