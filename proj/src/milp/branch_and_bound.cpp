#include <algorithm>
#include <cmath>
#include <queue>

#include "gridsynth/errors.hpp"
#include "gridsynth/milp.hpp"
#include "milp/dense_simplex.hpp"

namespace gridsynth::milp {

using detail::DenseSimplex;

Solution solve_lp(const LinearModel& model) {
  model.validate();
  DenseSimplex lp(model);
  Solution sol;
  sol.nodes = 1;
  switch (lp.optimize()) {
    case DenseSimplex::Result::Infeasible: sol.status = Status::Infeasible; break;
    case DenseSimplex::Result::Unbounded: sol.status = Status::Unbounded; break;
    case DenseSimplex::Result::Optimal:
      sol.status = Status::Optimal;
      sol.values = lp.primal();
      sol.objective_value = lp.objective() + model.objective_offset();
      sol.best_bound = sol.objective_value;
      sol.duals = lp.duals();
      sol.reduced_costs = lp.reduced_costs();
      break;
  }
  sol.lp_iterations = lp.iterations();
  return sol;
}

namespace {

struct Node {
  long parent = -1;
  int var = -1;  // branched binary (-1 at the root)
  double value = 0.0;  // fixed value of `var`
  std::size_t depth = 0;
  double bound = -kInf;  // parent's LP objective
};

class Search {
 public:
  Search(const LinearModel& model, const LazyCutOracle& oracle, const CutSeparator& separator,
         const MilpOptions& opt)
      : model_(model), oracle_(oracle), separator_(separator), opt_(opt), lp_(model) {
    for (std::size_t j = 0; j < model.num_vars(); ++j) {
      if (model.variables()[j].kind == VarKind::Binary) binaries_.push_back(static_cast<int>(j));
    }
  }

  Solution run() {
    arena_.push_back({});
    long current = 0;
    bool hit_limit = false;
    while (true) {
      if (current < 0) {
        if (open_.empty()) break;
        current = open_.top().id;
        open_.pop();
        if (prunable(arena_[current].bound)) {
          // Best-bound order: everything left is at least as bad.
          while (!open_.empty()) open_.pop();
          break;
        }
      }
      if (nodes_ >= opt_.node_limit) {
        open_.push({arena_[current].bound, arena_[current].depth, current});
        hit_limit = true;
        break;
      }
      ++nodes_;
      apply_bounds(current);
      current = process(current);
      if (unbounded_) break;
    }
    return finish(hit_limit);
  }

 private:
  struct OpenEntry {
    double bound;
    std::size_t depth;
    long id;
  };
  struct Worse {
    // priority_queue pops the "largest"; the best node has the lowest bound,
    // then the greatest depth, then the most recent id.
    bool operator()(const OpenEntry& a, const OpenEntry& b) const {
      if (a.bound != b.bound) return a.bound > b.bound;
      if (a.depth != b.depth) return a.depth < b.depth;
      return a.id < b.id;
    }
  };

  double gap_tol() const { return opt_.tol.gap * std::max(1.0, std::abs(incumbent_obj_)); }
  bool prunable(double bound) const { return has_incumbent_ && bound >= incumbent_obj_ - gap_tol(); }

  void apply_bounds(long id) {
    for (int j : binaries_) {
      const Variable& v = model_.variables()[j];
      lp_.set_bounds(j, v.lower, v.upper);
    }
    path_.clear();
    for (long k = id; k > 0; k = arena_[k].parent) path_.push_back(k);
    for (auto it = path_.rbegin(); it != path_.rend(); ++it) {
      const Node& n = arena_[*it];
      lp_.set_bounds(n.var, n.value, n.value);
    }
  }

  // Solves node `id` (re-solving after lazy cuts) and returns the next node to
  // dive into, or -1 to pick from the open set.
  long process(long id) {
    std::size_t rounds = 0;
    while (true) {
      const DenseSimplex::Result r = lp_.optimize();
      if (r == DenseSimplex::Result::Infeasible) return -1;
      if (r == DenseSimplex::Result::Unbounded) {
        unbounded_ = true;
        return -1;
      }
      const double obj = lp_.objective() + model_.objective_offset();
      if (id == 0) root_bound_ = obj;
      if (prunable(obj)) return -1;
      std::vector<double> x = lp_.primal();

      int branch = -1;
      double best_frac = opt_.tol.integrality;
      for (int j : binaries_) {
        const double frac = std::abs(x[j] - std::round(x[j]));
        if (frac > best_frac) {
          best_frac = frac;
          branch = j;
        }
      }

      if (branch >= 0 && separator_ && rounds < opt_.max_cut_rounds) {
        ++rounds;
        bool added = false;
        for (const Constraint& c : separator_(x)) {
          if (c.violation(x) < opt_.min_cut_violation) continue;
          lp_.add_row(c);
          ++separated_;
          added = true;
        }
        if (added) continue;
      }

      if (branch < 0) {
        for (int j : binaries_) x[j] = std::round(x[j]);
        if (oracle_) {
          std::vector<Constraint> cuts = oracle_(x);
          if (!cuts.empty()) {
            for (const Constraint& c : cuts) {
              if (c.violation(x) <= opt_.tol.feasibility) {
                throw InvariantError("lazy oracle returned a cut that the candidate satisfies");
              }
              lp_.add_row(c);
              cuts_.push_back(c);
            }
            continue;
          }
        }
        if (!has_incumbent_ || obj < incumbent_obj_) {
          has_incumbent_ = true;
          incumbent_obj_ = obj;
          incumbent_ = std::move(x);
        }
        return -1;
      }

      const double up_value = x[branch] >= 0.5 ? 1.0 : 0.0;
      const std::size_t depth = arena_[id].depth + 1;
      const long preferred = static_cast<long>(arena_.size());
      arena_.push_back({id, branch, up_value, depth, obj});
      const long other = static_cast<long>(arena_.size());
      arena_.push_back({id, branch, 1.0 - up_value, depth, obj});
      open_.push({obj, depth, other});
      return preferred;
    }
  }

  // Re-solves with the binaries fixed so continuous values are consistent
  // with exactly integral binaries.
  void polish() {
    for (int j : binaries_) lp_.set_bounds(j, incumbent_[j], incumbent_[j]);
    if (lp_.optimize() != DenseSimplex::Result::Optimal) return;
    std::vector<double> x = lp_.primal();
    for (int j : binaries_) x[j] = incumbent_[j];
    incumbent_ = std::move(x);
    incumbent_obj_ = model_.objective_value(incumbent_);
  }

  Solution finish(bool hit_limit) {
    Solution sol;
    sol.nodes = nodes_;
    sol.lazy_cuts = cuts_;
    sol.separated_cuts = separated_;
    if (unbounded_) {
      sol.status = Status::Unbounded;
      sol.lp_iterations = lp_.iterations();
      return sol;
    }
    if (has_incumbent_) {
      polish();
      sol.values = incumbent_;
      sol.objective_value = incumbent_obj_;
    }
    double bound = has_incumbent_ ? incumbent_obj_ : kInf;
    if (hit_limit) {
      sol.status = Status::NodeLimit;
      if (!open_.empty()) bound = std::min(bound, open_.top().bound);
    } else {
      sol.status = has_incumbent_ ? Status::Optimal : Status::Infeasible;
    }
    sol.best_bound = bound;
    sol.lp_iterations = lp_.iterations();
    return sol;
  }

  const LinearModel& model_;
  const LazyCutOracle& oracle_;
  const CutSeparator& separator_;
  const MilpOptions& opt_;
  DenseSimplex lp_;
  std::vector<int> binaries_;

  std::vector<Node> arena_;
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, Worse> open_;
  std::vector<long> path_;
  std::vector<Constraint> cuts_;

  bool has_incumbent_ = false;
  double incumbent_obj_ = kInf;
  std::vector<double> incumbent_;
  double root_bound_ = -kInf;
  std::size_t nodes_ = 0;
  std::size_t separated_ = 0;
  bool unbounded_ = false;
};

}  // namespace

Solution solve_milp(const LinearModel& model, const LazyCutOracle& oracle, const MilpOptions& options) {
  return solve_milp(model, oracle, CutSeparator{}, options);
}

Solution solve_milp(const LinearModel& model, const LazyCutOracle& oracle, const CutSeparator& separator,
                    const MilpOptions& options) {
  model.validate();
  Search search(model, oracle, separator, options);
  return search.run();
}

}  // namespace gridsynth::milp
