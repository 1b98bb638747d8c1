#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <set>

#include "gridsynth/errors.hpp"
#include "gridsynth/milp.hpp"

namespace gridsynth::milp {

double Constraint::activity(std::span<const double> x) const {
  double v = 0.0;
  for (const Term& t : terms) v += t.coef * x[t.var];
  return v;
}

double Constraint::violation(std::span<const double> x) const {
  const double a = activity(x);
  switch (sense) {
    case Sense::LessEqual: return std::max(0.0, a - rhs);
    case Sense::GreaterEqual: return std::max(0.0, rhs - a);
    case Sense::Equal: return std::abs(a - rhs);
  }
  return 0.0;
}

int LinearModel::add_variable(std::string name, VarKind kind, double lower, double upper) {
  vars_.push_back({std::move(name), kind, lower, upper});
  cost_.push_back(0.0);
  return static_cast<int>(vars_.size() - 1);
}

void LinearModel::add_constraint(Constraint c) { rows_.push_back(std::move(c)); }

void LinearModel::add_constraint(std::vector<Term> terms, Sense sense, double rhs, std::string name) {
  rows_.push_back({std::move(terms), sense, rhs, std::move(name)});
}

void LinearModel::set_objective(int var, double coef) {
  if (var < 0 || static_cast<std::size_t>(var) >= vars_.size()) {
    throw ValidationError("objective coefficient for unknown variable " + std::to_string(var));
  }
  cost_[var] = coef;
}

void LinearModel::validate() const {
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    const Variable& v = vars_[j];
    if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper || v.lower == kInf ||
        v.upper == -kInf) {
      throw ValidationError("variable " + v.name + ": invalid bounds");
    }
    if (v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0)) {
      throw ValidationError("binary variable " + v.name + ": bounds must lie within [0,1]");
    }
    if (!std::isfinite(cost_[j])) throw ValidationError("variable " + v.name + ": non-finite cost");
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const Constraint& c = rows_[i];
    if (!std::isfinite(c.rhs)) throw ValidationError("constraint " + std::to_string(i) + ": non-finite rhs");
    for (const Term& t : c.terms) {
      if (t.var < 0 || static_cast<std::size_t>(t.var) >= vars_.size()) {
        throw ValidationError("constraint " + std::to_string(i) + ": variable index out of range");
      }
      if (!std::isfinite(t.coef)) {
        throw ValidationError("constraint " + std::to_string(i) + ": non-finite coefficient");
      }
    }
  }
  if (!std::isfinite(offset_)) throw ValidationError("non-finite objective offset");
}

double LinearModel::objective_value(std::span<const double> x) const {
  double v = offset_;
  for (std::size_t j = 0; j < cost_.size(); ++j) v += cost_[j] * x[j];
  return v;
}

bool LinearModel::is_feasible(std::span<const double> x, double tol) const {
  if (x.size() != vars_.size()) return false;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    if (x[j] < vars_[j].lower - tol || x[j] > vars_[j].upper + tol) return false;
    if (vars_[j].kind == VarKind::Binary && std::abs(x[j] - std::round(x[j])) > tol) return false;
  }
  return std::all_of(rows_.begin(), rows_.end(),
                     [&](const Constraint& c) { return c.violation(x) <= tol; });
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::NodeLimit: return "node-limit";
  }
  return "unknown";
}

// --- LP text format -------------------------------------------------------

namespace {

std::string number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool is_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

void write_terms(std::ostream& out, const std::vector<Term>& terms, const std::vector<std::string>& names) {
  if (terms.empty()) {
    out << " 0";
    return;
  }
  for (const Term& t : terms) {
    out << ' ' << (t.coef < 0.0 ? "-" : "+") << number(std::abs(t.coef)) << ' ' << names[t.var];
  }
}

}  // namespace

void write_lp(const LinearModel& model, std::ostream& out) {
  const auto& vars = model.variables();
  std::vector<std::string> names(vars.size());
  std::set<std::string> taken;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    std::string n = is_identifier(vars[j].name) ? vars[j].name : "x" + std::to_string(j);
    if (!taken.insert(n).second) n = "x" + std::to_string(j) + "_";
    taken.insert(n);
    names[j] = n;
  }

  out << "/* " << vars.size() << " variables, " << model.num_constraints() << " constraints */\n";
  out << "min:";
  std::vector<Term> objective;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if (model.objective()[j] != 0.0) objective.push_back({static_cast<int>(j), model.objective()[j]});
  }
  write_terms(out, objective, names);
  if (model.objective_offset() != 0.0) {
    out << ' ' << (model.objective_offset() < 0.0 ? "-" : "+") << number(std::abs(model.objective_offset()));
  }
  out << ";\n\n";

  for (std::size_t i = 0; i < model.num_constraints(); ++i) {
    const Constraint& c = model.constraints()[i];
    out << 'R' << (i + 1) << ':';
    write_terms(out, c.terms, names);
    out << (c.sense == Sense::LessEqual ? " <= " : c.sense == Sense::GreaterEqual ? " >= " : " = ")
        << number(c.rhs) << ";\n";
  }

  out << "\n";
  std::vector<std::string> free_vars;
  std::vector<std::string> binaries;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const Variable& v = vars[j];
    if (v.kind == VarKind::Binary) {
      binaries.push_back(names[j]);
      if (v.lower == 0.0 && v.upper == 1.0) continue;
    }
    const bool lo_inf = v.lower == -kInf;
    const bool hi_inf = v.upper == kInf;
    if (lo_inf && hi_inf) {
      free_vars.push_back(names[j]);
    } else if (lo_inf) {
      out << names[j] << " >= -1e30;\n" << names[j] << " <= " << number(v.upper) << ";\n";
    } else if (v.lower == v.upper) {
      out << names[j] << " = " << number(v.lower) << ";\n";
    } else if (hi_inf) {
      if (v.lower != 0.0) out << names[j] << " >= " << number(v.lower) << ";\n";
    } else {
      out << number(v.lower) << " <= " << names[j] << " <= " << number(v.upper) << ";\n";
    }
  }
  auto section = [&](const char* keyword, const std::vector<std::string>& list) {
    if (list.empty()) return;
    out << '\n' << keyword << ' ';
    for (std::size_t k = 0; k < list.size(); ++k) out << (k ? ", " : "") << list[k];
    out << ";\n";
  };
  section("free", free_vars);
  section("bin", binaries);
}

}  // namespace gridsynth::milp
