#include "milp/dense_simplex.hpp"

#include <algorithm>
#include <cmath>

#include "gridsynth/errors.hpp"

namespace gridsynth::milp::detail {

namespace {

constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kTieTol = 1e-12;
constexpr std::size_t kRefactorInterval = 400;
constexpr std::size_t kBlandAfter = 1000;

bool finite(double v) { return std::isfinite(v); }

}  // namespace

DenseSimplex::DenseSimplex(const LinearModel& model) : n_(model.num_vars()) {
  const auto& vars = model.variables();
  const std::size_t m = model.num_constraints();
  const std::size_t total = n_ + m;
  lb_.resize(total);
  ub_.resize(total);
  cost_.assign(total, 0.0);
  x_.assign(total, 0.0);
  at_.assign(total, At::Lower);
  row_of_.assign(total, -1);
  for (std::size_t j = 0; j < n_; ++j) {
    lb_[j] = vars[j].lower;
    ub_[j] = vars[j].upper;
    cost_[j] = model.objective()[j];
  }
  rows_.assign(m, std::vector<double>(total, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    const Constraint& c = model.constraints()[i];
    a_rows_.push_back(c.terms);
    b_.push_back(c.rhs);
    for (const Term& t : c.terms) rows_[i][t.var] += t.coef;
    const std::size_t s = n_ + i;
    rows_[i][s] = 1.0;
    switch (c.sense) {
      case Sense::LessEqual: lb_[s] = 0.0; ub_[s] = kInf; break;
      case Sense::GreaterEqual: lb_[s] = -kInf; ub_[s] = 0.0; break;
      case Sense::Equal: lb_[s] = 0.0; ub_[s] = 0.0; break;
    }
    basis_.push_back(s);
    at_[s] = At::Basic;
    row_of_[s] = static_cast<long>(i);
  }
  d_ = cost_;
  for (std::size_t j = 0; j < n_; ++j) place_nonbasic(j);
  for (std::size_t i = 0; i < m; ++i) {
    double v = b_[i];
    for (const Term& t : a_rows_[i]) v -= t.coef * x_[t.var];
    x_[n_ + i] = v;
  }
}

void DenseSimplex::place_nonbasic(std::size_t j) {
  if (finite(lb_[j]) && finite(ub_[j])) {
    at_[j] = (d_[j] < 0.0 && lb_[j] < ub_[j]) ? At::Upper : At::Lower;
  } else if (finite(lb_[j])) {
    at_[j] = At::Lower;
  } else if (finite(ub_[j])) {
    at_[j] = At::Upper;
  } else {
    at_[j] = At::Zero;
  }
  const double target = at_[j] == At::Lower ? lb_[j] : at_[j] == At::Upper ? ub_[j] : 0.0;
  move_nonbasic(j, target);
}

void DenseSimplex::move_nonbasic(std::size_t j, double value) {
  const double delta = value - x_[j];
  x_[j] = value;
  if (delta == 0.0) return;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const double a = rows_[i][j];
    if (a != 0.0) x_[basis_[i]] -= a * delta;
  }
}

void DenseSimplex::set_bounds(int jj, double lower, double upper) {
  const auto j = static_cast<std::size_t>(jj);
  lb_[j] = lower;
  ub_[j] = upper;
  if (at_[j] == At::Basic) return;
  if (at_[j] == At::Lower && finite(lower)) {
    move_nonbasic(j, lower);
  } else if (at_[j] == At::Upper && finite(upper)) {
    move_nonbasic(j, upper);
  } else {
    place_nonbasic(j);
  }
}

void DenseSimplex::add_row(const Constraint& c) {
  const std::size_t old_cols = cols();
  const std::size_t s = old_cols;  // new slack column == n_ + old row count
  for (auto& row : rows_) row.push_back(0.0);
  lb_.push_back(0.0);
  ub_.push_back(0.0);
  switch (c.sense) {
    case Sense::LessEqual: ub_[s] = kInf; break;
    case Sense::GreaterEqual: lb_[s] = -kInf; break;
    case Sense::Equal: break;
  }
  cost_.push_back(0.0);
  d_.push_back(0.0);
  at_.push_back(At::Basic);
  row_of_.push_back(static_cast<long>(rows_.size()));

  std::vector<double> row(old_cols + 1, 0.0);
  double value = c.rhs;
  for (const Term& t : c.terms) {
    row[t.var] += t.coef;
    value -= t.coef * x_[t.var];
  }
  row[s] = 1.0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const double f = row[basis_[i]];
    if (f == 0.0) continue;
    const auto& src = rows_[i];
    for (std::size_t j = 0; j < old_cols; ++j) {
      if (src[j] != 0.0) row[j] -= f * src[j];
    }
    row[basis_[i]] = 0.0;
  }
  x_.push_back(value);
  rows_.push_back(std::move(row));
  a_rows_.push_back(c.terms);
  b_.push_back(c.rhs);
  basis_.push_back(s);
}

void DenseSimplex::pivot(std::size_t r, std::size_t q) {
  auto& prow = rows_[r];
  const double inv = 1.0 / prow[q];
  std::vector<std::size_t> nz;
  nz.reserve(prow.size());
  for (std::size_t j = 0; j < prow.size(); ++j) {
    if (prow[j] != 0.0) {
      prow[j] *= inv;
      nz.push_back(j);
    }
  }
  prow[q] = 1.0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (i == r) continue;
    auto& row = rows_[i];
    const double f = row[q];
    if (f == 0.0) continue;
    for (std::size_t j : nz) row[j] -= f * prow[j];
    row[q] = 0.0;
  }
  const double fd = d_[q];
  if (fd != 0.0) {
    for (std::size_t j : nz) d_[j] -= fd * prow[j];
  }
  d_[q] = 0.0;

  const std::size_t leaving = basis_[r];
  row_of_[leaving] = -1;
  basis_[r] = q;
  row_of_[q] = static_cast<long>(r);
  at_[q] = At::Basic;
}

void DenseSimplex::recompute_reduced_costs() {
  d_ = cost_;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const double cb = cost_[basis_[i]];
    if (cb == 0.0) continue;
    const auto& row = rows_[i];
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] != 0.0) d_[j] -= cb * row[j];
    }
  }
  for (std::size_t k : basis_) d_[k] = 0.0;
}

void DenseSimplex::refactor() {
  since_refactor_ = 0;
  const std::size_t m = rows_.size();
  const std::size_t total = cols();
  std::vector<std::vector<double>> mat(m, std::vector<double>(total + 1, 0.0));
  for (std::size_t i = 0; i < m; ++i) {
    for (const Term& t : a_rows_[i]) mat[i][t.var] += t.coef;
    mat[i][n_ + i] = 1.0;
    mat[i][total] = b_[i];
  }
  std::vector<std::size_t> columns = basis_;
  std::vector<bool> used(m, false);
  std::vector<std::size_t> new_basis(m, 0);
  bool singular = false;
  for (std::size_t q : columns) {
    std::size_t best = m;
    double best_abs = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (!used[i] && std::abs(mat[i][q]) > best_abs) {
        best_abs = std::abs(mat[i][q]);
        best = i;
      }
    }
    if (best == m || best_abs < 1e-11) {
      singular = true;
      break;
    }
    used[best] = true;
    new_basis[best] = q;
    auto& prow = mat[best];
    const double inv = 1.0 / prow[q];
    for (double& v : prow) v *= inv;
    prow[q] = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (i == best) continue;
      const double f = mat[i][q];
      if (f == 0.0) continue;
      auto& row = mat[i];
      for (std::size_t j = 0; j <= total; ++j) {
        if (prow[j] != 0.0) row[j] -= f * prow[j];
      }
      row[q] = 0.0;
    }
  }
  if (singular) {
    // Fall back to the all-slack basis; optimization restarts from there.
    for (std::size_t i = 0; i < m; ++i) {
      std::fill(mat[i].begin(), mat[i].end(), 0.0);
      for (const Term& t : a_rows_[i]) mat[i][t.var] += t.coef;
      mat[i][n_ + i] = 1.0;
      mat[i][total] = b_[i];
      new_basis[i] = n_ + i;
    }
    for (std::size_t k : basis_) {
      if (k < n_) at_[k] = At::Lower;  // placed below
    }
  }
  for (std::size_t j = 0; j < total; ++j) row_of_[j] = -1;
  for (std::size_t i = 0; i < m; ++i) {
    rows_[i].assign(mat[i].begin(), mat[i].begin() + static_cast<long>(total));
    basis_[i] = new_basis[i];
    row_of_[new_basis[i]] = static_cast<long>(i);
    at_[new_basis[i]] = At::Basic;
  }
  for (std::size_t j = 0; j < total; ++j) {
    if (row_of_[j] >= 0) continue;
    if (at_[j] == At::Basic) at_[j] = At::Lower;
    if (at_[j] == At::Lower && !finite(lb_[j])) at_[j] = finite(ub_[j]) ? At::Upper : At::Zero;
    if (at_[j] == At::Upper && !finite(ub_[j])) at_[j] = finite(lb_[j]) ? At::Lower : At::Zero;
    x_[j] = at_[j] == At::Lower ? lb_[j] : at_[j] == At::Upper ? ub_[j] : 0.0;
  }
  for (std::size_t i = 0; i < m; ++i) {
    double v = mat[i][total];
    const auto& row = rows_[i];
    for (std::size_t j = 0; j < total; ++j) {
      if (row_of_[j] < 0 && row[j] != 0.0) v -= row[j] * x_[j];
    }
    x_[basis_[i]] = v;
  }
  recompute_reduced_costs();
}

double DenseSimplex::primal_residual() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < a_rows_.size(); ++i) {
    double v = x_[n_ + i] - b_[i];
    for (const Term& t : a_rows_[i]) v += t.coef * x_[t.var];
    worst = std::max(worst, std::abs(v) / std::max(1.0, std::abs(b_[i])));
  }
  return worst;
}

bool DenseSimplex::flip_to_dual_feasible() {
  bool feasible = true;
  for (std::size_t j = 0; j < cols(); ++j) {
    if (at_[j] == At::Basic) continue;
    const bool fixed = lb_[j] == ub_[j];
    if (fixed) continue;
    const bool boxed = finite(lb_[j]) && finite(ub_[j]);
    if (boxed) {
      if (at_[j] == At::Lower && d_[j] < -kDualTol) {
        at_[j] = At::Upper;
        move_nonbasic(j, ub_[j]);
      } else if (at_[j] == At::Upper && d_[j] > kDualTol) {
        at_[j] = At::Lower;
        move_nonbasic(j, lb_[j]);
      }
      continue;
    }
    if (at_[j] == At::Lower && d_[j] < -kDualTol) feasible = false;
    if (at_[j] == At::Upper && d_[j] > kDualTol) feasible = false;
    if (at_[j] == At::Zero && std::abs(d_[j]) > kDualTol) feasible = false;
  }
  return feasible;
}

void DenseSimplex::count_iteration(bool degenerate) {
  ++iterations_;
  degenerate_run_ = degenerate ? degenerate_run_ + 1 : 0;
  bland_ = degenerate_run_ >= kBlandAfter;
  if (++since_refactor_ >= kRefactorInterval) refactor();
}

DenseSimplex::Result DenseSimplex::primal(bool phase_one) {
  const std::size_t m = rows_.size();
  const std::size_t total = cols();
  std::vector<double> phase_cost;
  const std::size_t cap = 200000 + 50 * (m + total);
  for (std::size_t iter = 0;; ++iter) {
    if (iter > cap) throw InvariantError("simplex: iteration limit exceeded (primal)");
    const std::vector<double>* price = &d_;
    if (phase_one) {
      std::vector<double> w(m, 0.0);
      bool any = false;
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t k = basis_[i];
        if (x_[k] < lb_[k] - kPrimalTol) {
          w[i] = -1.0;
          any = true;
        } else if (x_[k] > ub_[k] + kPrimalTol) {
          w[i] = 1.0;
          any = true;
        }
      }
      if (!any) return Result::Optimal;
      phase_cost.assign(total, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        if (w[i] == 0.0) continue;
        const auto& row = rows_[i];
        for (std::size_t j = 0; j < total; ++j) {
          if (row[j] != 0.0) phase_cost[j] -= w[i] * row[j];
        }
      }
      for (std::size_t k : basis_) phase_cost[k] = 0.0;
      price = &phase_cost;
    }
    const auto& dj = *price;

    // Pricing.
    std::size_t q = total;
    double best = 0.0;
    int dir = 0;
    for (std::size_t j = 0; j < total; ++j) {
      if (at_[j] == At::Basic || lb_[j] == ub_[j]) continue;
      int this_dir = 0;
      if (dj[j] < -kDualTol && at_[j] != At::Upper) this_dir = 1;
      if (dj[j] > kDualTol && at_[j] != At::Lower) this_dir = -1;
      if (this_dir == 0) continue;
      const double score = std::abs(dj[j]);
      if (q == total || (bland_ ? false : score > best)) {
        q = j;
        best = score;
        dir = this_dir;
      }
    }
    if (q == total) return phase_one ? Result::Infeasible : Result::Optimal;

    // Ratio test.
    double step = (finite(lb_[q]) && finite(ub_[q])) ? ub_[q] - lb_[q] : kInf;
    std::size_t leave = m;
    bool leave_to_upper = false;
    double leave_alpha = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double alpha = rows_[i][q];
      if (std::abs(alpha) <= kPivotTol) continue;
      const double rate = -dir * alpha;
      const std::size_t k = basis_[i];
      double limit = kInf;
      bool to_upper = false;
      if (rate < 0.0) {
        if (phase_one && x_[k] > ub_[k] + kPrimalTol) {
          limit = (x_[k] - ub_[k]) / -rate;
          to_upper = true;
        } else if (phase_one && x_[k] < lb_[k] - kPrimalTol) {
          continue;
        } else if (finite(lb_[k])) {
          limit = std::max(0.0, x_[k] - lb_[k]) / -rate;
        }
      } else {
        if (phase_one && x_[k] < lb_[k] - kPrimalTol) {
          limit = (lb_[k] - x_[k]) / rate;
        } else if (phase_one && x_[k] > ub_[k] + kPrimalTol) {
          continue;
        } else if (finite(ub_[k])) {
          limit = std::max(0.0, ub_[k] - x_[k]) / rate;
          to_upper = true;
        }
      }
      if (!finite(limit)) continue;
      bool take = false;
      if (leave == m) {
        take = limit < step;  // beats the bound flip (or no limit yet)
      } else if (limit < step - kTieTol) {
        take = true;
      } else if (limit <= step + kTieTol) {
        take = bland_ ? k < basis_[leave] : std::abs(alpha) > std::abs(leave_alpha);
      }
      if (take) {
        step = limit;
        leave = i;
        leave_to_upper = to_upper;
        leave_alpha = alpha;
      }
    }
    if (!finite(step)) {
      if (phase_one) throw InvariantError("simplex: unbounded phase-one direction");
      return Result::Unbounded;
    }

    x_[q] += dir * step;
    for (std::size_t i = 0; i < m; ++i) {
      const double alpha = rows_[i][q];
      if (alpha != 0.0) x_[basis_[i]] -= dir * alpha * step;
    }
    if (leave == m) {
      at_[q] = dir > 0 ? At::Upper : At::Lower;
      x_[q] = dir > 0 ? ub_[q] : lb_[q];
    } else {
      const std::size_t k = basis_[leave];
      pivot(leave, q);
      at_[k] = leave_to_upper ? At::Upper : At::Lower;
      x_[k] = leave_to_upper ? ub_[k] : lb_[k];
    }
    count_iteration(step <= kTieTol);
  }
}

DenseSimplex::Result DenseSimplex::dual() {
  const std::size_t m = rows_.size();
  const std::size_t total = cols();
  const std::size_t cap = 200000 + 50 * (m + total);
  for (std::size_t iter = 0;; ++iter) {
    if (iter > cap) throw InvariantError("simplex: iteration limit exceeded (dual)");
    std::size_t r = m;
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t k = basis_[i];
      double viol = 0.0;
      if (x_[k] < lb_[k] - kPrimalTol) viol = lb_[k] - x_[k];
      if (x_[k] > ub_[k] + kPrimalTol) viol = x_[k] - ub_[k];
      if (viol == 0.0) continue;
      if (r == m || (bland_ ? k < basis_[r] : viol > worst)) {
        r = i;
        worst = viol;
      }
    }
    if (r == m) return Result::Optimal;

    const std::size_t k = basis_[r];
    const bool below = x_[k] < lb_[k];
    const double target = below ? lb_[k] : ub_[k];
    const auto& row = rows_[r];
    std::size_t q = total;
    double best_ratio = kInf;
    double best_alpha = 0.0;
    for (std::size_t j = 0; j < total; ++j) {
      if (at_[j] == At::Basic || lb_[j] == ub_[j]) continue;
      const double alpha = row[j];
      if (std::abs(alpha) <= kPivotTol) continue;
      const bool can_up = at_[j] != At::Upper;
      const bool can_down = at_[j] != At::Lower;
      // x_k moves by -alpha * dx_j.
      const bool ok = below ? ((can_up && alpha < 0.0) || (can_down && alpha > 0.0))
                            : ((can_up && alpha > 0.0) || (can_down && alpha < 0.0));
      if (!ok) continue;
      double dual_slack = std::abs(d_[j]);
      if (at_[j] == At::Lower) dual_slack = std::max(0.0, d_[j]);
      if (at_[j] == At::Upper) dual_slack = std::max(0.0, -d_[j]);
      const double ratio = dual_slack / std::abs(alpha);
      bool take = false;
      if (q == total || ratio < best_ratio - kTieTol) {
        take = true;
      } else if (ratio <= best_ratio + kTieTol) {
        take = bland_ ? j < q : std::abs(alpha) > std::abs(best_alpha);
      }
      if (take) {
        q = j;
        best_ratio = ratio;
        best_alpha = alpha;
      }
    }
    if (q == total) return Result::Infeasible;

    const double delta = (x_[k] - target) / row[q];
    x_[q] += delta;
    for (std::size_t i = 0; i < m; ++i) {
      const double alpha = rows_[i][q];
      if (alpha != 0.0) x_[basis_[i]] -= alpha * delta;
    }
    pivot(r, q);
    at_[k] = below ? At::Lower : At::Upper;
    x_[k] = target;
    count_iteration(best_ratio <= kTieTol);
  }
}

DenseSimplex::Result DenseSimplex::run() {
  degenerate_run_ = 0;
  bland_ = false;
  if (flip_to_dual_feasible()) {
    if (dual() == Result::Infeasible) return Result::Infeasible;
    return primal(false);
  }
  if (primal(true) == Result::Infeasible) return Result::Infeasible;
  return primal(false);
}

DenseSimplex::Result DenseSimplex::optimize() {
  Result r = run();
  if (r == Result::Optimal && primal_residual() > 1e-9) {
    refactor();
    r = run();
  }
  return r;
}

std::vector<double> DenseSimplex::primal() const {
  return std::vector<double>(x_.begin(), x_.begin() + static_cast<long>(n_));
}

double DenseSimplex::objective() const {
  double v = 0.0;
  for (std::size_t j = 0; j < n_; ++j) v += cost_[j] * x_[j];
  return v;
}

std::vector<double> DenseSimplex::duals() const {
  std::vector<double> y(rows_.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = -d_[n_ + i];
  return y;
}

std::vector<double> DenseSimplex::reduced_costs() const {
  return std::vector<double>(d_.begin(), d_.begin() + static_cast<long>(n_));
}

}  // namespace gridsynth::milp::detail
