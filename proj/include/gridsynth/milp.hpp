#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace gridsynth::milp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Binary, Continuous };
enum class Sense { LessEqual, Equal, GreaterEqual };

struct Variable {
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lower = 0.0;
  double upper = kInf;
};

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Constraint {
  std::vector<Term> terms;
  Sense sense = Sense::LessEqual;
  double rhs = 0.0;
  std::string name;

  double activity(std::span<const double> x) const;
  /// Amount by which x violates the constraint (0 when satisfied).
  double violation(std::span<const double> x) const;
};

/// Minimization model: variables with bounds, linear rows, linear objective
/// plus a constant offset.
class LinearModel {
 public:
  int add_variable(std::string name, VarKind kind, double lower, double upper);
  int add_binary(std::string name) { return add_variable(std::move(name), VarKind::Binary, 0.0, 1.0); }
  int add_continuous(std::string name, double lower, double upper) {
    return add_variable(std::move(name), VarKind::Continuous, lower, upper);
  }

  void add_constraint(Constraint c);
  void add_constraint(std::vector<Term> terms, Sense sense, double rhs, std::string name = {});

  void set_objective(int var, double coef);
  void add_objective_offset(double value) { offset_ += value; }

  const std::vector<Variable>& variables() const { return vars_; }
  std::vector<Variable>& variables() { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  const std::vector<double>& objective() const { return cost_; }
  double objective_offset() const { return offset_; }
  std::size_t num_vars() const { return vars_.size(); }
  std::size_t num_constraints() const { return rows_.size(); }

  /// Throws ValidationError on out-of-range indices, non-finite coefficients,
  /// inverted bounds or binaries with bounds outside [0,1].
  void validate() const;

  double objective_value(std::span<const double> x) const;
  /// Bounds and rows satisfied within `tol`; binaries within `tol` of {0,1}.
  bool is_feasible(std::span<const double> x, double tol = 1e-6) const;

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  std::vector<double> cost_;
  double offset_ = 0.0;
};

enum class Status { Optimal, Infeasible, Unbounded, NodeLimit };

std::string to_string(Status s);

struct Solution {
  Status status = Status::Infeasible;
  std::vector<double> values;
  double objective_value = 0.0;
  /// Row duals and reduced costs of the final LP (LP solves only).
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  /// Cuts appended by the lazy oracle, in the order they were added.
  std::vector<Constraint> lazy_cuts;
  std::size_t separated_cuts = 0;
  std::size_t nodes = 0;
  std::size_t lp_iterations = 0;
  /// Lowest LP bound among open nodes when the search stopped.
  double best_bound = -kInf;
};

/// Receives an integer-feasible candidate; returns constraints it violates
/// (empty to accept). Returned cuts that the candidate satisfies are an error.
using LazyCutOracle = std::function<std::vector<Constraint>(std::span<const double>)>;

struct Tolerances {
  double integrality = 1e-6;
  double feasibility = 1e-6;
  double gap = 1e-6;  // relative
};

/// Receives a fractional LP solution; returns inequalities valid for every
/// feasible integer solution that this point violates.
using CutSeparator = std::function<std::vector<Constraint>(std::span<const double>)>;

struct MilpOptions {
  std::size_t node_limit = 1'000'000;
  Tolerances tol;
  std::size_t max_cut_rounds = 20;  // separator calls per node
  double min_cut_violation = 1e-4;
};

/// LP relaxation (binaries relaxed to their bounds) solved by simplex.
Solution solve_lp(const LinearModel& model);

/// Branch-and-bound over binaries: most-fractional branching with ties broken
/// by lowest index, best-bound node selection with diving.
Solution solve_milp(const LinearModel& model, const LazyCutOracle& oracle = {},
                    const MilpOptions& options = {});
/// As above, also separating `separator` cuts at fractional nodes.
Solution solve_milp(const LinearModel& model, const LazyCutOracle& oracle, const CutSeparator& separator,
                    const MilpOptions& options = {});

/// Writes the model in the lp_solve text grammar described in docs/lp_format.md.
void write_lp(const LinearModel& model, std::ostream& out);

}  // namespace gridsynth::milp
