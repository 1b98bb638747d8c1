#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gridsynth/errors.hpp"
#include "gridsynth/milp.hpp"
#include "support/lp_oracle.hpp"

using namespace gridsynth;
using namespace gridsynth::milp;

namespace {

// Reduced costs must have the sign their variable's position allows, and
// must equal c - A'y.
void check_dual_feasible(const LinearModel& m, const Solution& s, double tol = 1e-7) {
  REQUIRE(s.reduced_costs.size() == m.num_vars());
  REQUIRE(s.duals.size() == m.num_constraints());
  std::vector<double> d = m.objective();
  for (std::size_t i = 0; i < m.num_constraints(); ++i) {
    for (const Term& t : m.constraints()[i].terms) d[t.var] -= s.duals[i] * t.coef;
    const Constraint& c = m.constraints()[i];
    if (c.sense == Sense::LessEqual) CHECK(s.duals[i] <= tol);
    if (c.sense == Sense::GreaterEqual) CHECK(s.duals[i] >= -tol);
  }
  for (std::size_t j = 0; j < m.num_vars(); ++j) {
    CHECK(std::abs(d[j] - s.reduced_costs[j]) <= tol * std::max(1.0, std::abs(d[j])));
    const Variable& v = m.variables()[j];
    const double x = s.values[j];
    const bool at_lo = std::abs(x - v.lower) <= 1e-9;
    const bool at_hi = std::abs(x - v.upper) <= 1e-9;
    if (!at_lo && !at_hi) CHECK(std::abs(s.reduced_costs[j]) <= tol);
    if (at_lo && !at_hi) CHECK(s.reduced_costs[j] >= -tol);
    if (at_hi && !at_lo) CHECK(s.reduced_costs[j] <= tol);
  }
}

LinearModel from_dense(const oracle::DenseLp& lp) {
  LinearModel m;
  for (std::size_t j = 0; j < lp.c.size(); ++j) {
    m.set_objective(m.add_continuous("x" + std::to_string(j), lp.lo[j], lp.hi[j]), lp.c[j]);
  }
  for (std::size_t i = 0; i < lp.a.size(); ++i) {
    std::vector<Term> terms;
    for (std::size_t j = 0; j < lp.c.size(); ++j) terms.push_back({static_cast<int>(j), lp.a[i][j]});
    const Sense s = lp.sense[i] < 0 ? Sense::LessEqual : lp.sense[i] > 0 ? Sense::GreaterEqual : Sense::Equal;
    m.add_constraint(terms, s, lp.b[i]);
  }
  return m;
}

oracle::DenseLp random_lp(std::mt19937_64& rng, std::size_t n, std::size_t rows) {
  std::uniform_real_distribution<double> coef(-5.0, 5.0), bound(0.5, 6.0), pt(-1.0, 1.0);
  std::uniform_int_distribution<int> sense(-1, 1);
  oracle::DenseLp lp;
  // Anchor a point inside the box so most instances are feasible.
  std::vector<double> anchor;
  for (std::size_t j = 0; j < n; ++j) {
    lp.c.push_back(coef(rng));
    lp.lo.push_back(-bound(rng));
    lp.hi.push_back(bound(rng));
    anchor.push_back(pt(rng) * 0.4);
  }
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<double> a;
    double act = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      a.push_back(coef(rng));
      act += a.back() * anchor[j];
    }
    const int s = sense(rng);
    lp.a.push_back(a);
    lp.sense.push_back(s);
    lp.b.push_back(s == 0 ? act : act - s * std::abs(coef(rng)));
  }
  return lp;
}

}  // namespace

TEST_CASE("LP: simple reference instances") {
  {
    LinearModel m;
    const int x = m.add_continuous("x", -kInf, kInf);
    m.set_objective(x, 1.0);
    m.add_constraint({{x, 1.0}}, Sense::GreaterEqual, 3.0);
    const Solution s = solve_lp(m);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.values[x] == doctest::Approx(3.0));
    CHECK(s.objective_value == doctest::Approx(3.0));
    check_dual_feasible(m, s);
  }
  {
    LinearModel m;
    const int x = m.add_continuous("x", 0, 1), y = m.add_continuous("y", 0, 1);
    m.set_objective(x, -1.0);
    m.set_objective(y, -1.0);
    m.add_constraint({{x, 1.0}, {y, 1.0}}, Sense::LessEqual, 1.0);
    const Solution s = solve_lp(m);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.objective_value == doctest::Approx(-1.0));
    check_dual_feasible(m, s);
  }
}

TEST_CASE("LP: infeasible and unbounded are statuses") {
  LinearModel inf;
  const int x = inf.add_continuous("x", 0, 1);
  inf.add_constraint({{x, 1.0}}, Sense::GreaterEqual, 2.0);
  CHECK(solve_lp(inf).status == Status::Infeasible);
  CHECK(solve_milp(inf).status == Status::Infeasible);

  LinearModel unb;
  const int y = unb.add_continuous("y", 0, kInf);
  unb.set_objective(y, -1.0);
  CHECK(solve_lp(unb).status == Status::Unbounded);
}

TEST_CASE("LP: random dense instances match vertex enumeration") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> nvars(2, 9);
  int optimal = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = nvars(rng);
    const std::size_t rows = n >= 8 ? 3 : std::uniform_int_distribution<std::size_t>(1, 5)(rng);
    const oracle::DenseLp lp = random_lp(rng, n, rows);
    const LinearModel m = from_dense(lp);
    const Solution s = solve_lp(m);
    const auto expect = oracle::enumerate_vertices(lp);
    if (!expect) {
      CHECK(s.status == Status::Infeasible);
      continue;
    }
    ++optimal;
    REQUIRE(s.status == Status::Optimal);
    CHECK(std::abs(s.objective_value - *expect) <= 1e-6 * std::max(1.0, std::abs(*expect)));
    CHECK(m.is_feasible(s.values, 1e-6));
    check_dual_feasible(m, s);
  }
  CHECK(optimal >= 15);
}

TEST_CASE("LP: degenerate and equality-heavy instances") {
  // Many constraints through the same vertex.
  LinearModel m;
  const int x = m.add_continuous("x", 0, kInf), y = m.add_continuous("y", 0, kInf);
  m.set_objective(x, -1.0);
  m.set_objective(y, -1.0);
  for (int k = 1; k <= 30; ++k) {
    m.add_constraint({{x, static_cast<double>(k)}, {y, 1.0}}, Sense::LessEqual, k + 1.0);
  }
  m.add_constraint({{x, 1.0}, {y, -1.0}}, Sense::Equal, 0.0);
  const Solution s = solve_lp(m);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.values[x] == doctest::Approx(1.0));
  CHECK(s.values[y] == doctest::Approx(1.0));
  check_dual_feasible(m, s);
}

TEST_CASE("MILP: empty constraint set with positive weights") {
  LinearModel m;
  for (int i = 0; i < 10; ++i) m.set_objective(m.add_binary("b" + std::to_string(i)), 1.0 + i);
  const Solution s = solve_milp(m);
  REQUIRE(s.status == Status::Optimal);
  for (double v : s.values) CHECK(v == 0.0);
  CHECK(s.objective_value == 0.0);
}

TEST_CASE("MILP: 0/1 knapsack equals exhaustive enumeration") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> val(1.0, 20.0), wt(1.0, 10.0);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> v(8), w(8);
    for (int i = 0; i < 8; ++i) {
      v[i] = val(rng);
      w[i] = wt(rng);
    }
    const double cap = std::accumulate(w.begin(), w.end(), 0.0) * 0.45;
    LinearModel m;
    std::vector<Term> weight;
    for (int i = 0; i < 8; ++i) {
      const int b = m.add_binary("item" + std::to_string(i));
      m.set_objective(b, -v[i]);
      weight.push_back({b, w[i]});
    }
    m.add_constraint(weight, Sense::LessEqual, cap);
    const Solution s = solve_milp(m);
    REQUIRE(s.status == Status::Optimal);
    CHECK(-s.objective_value == doctest::Approx(oracle::knapsack_enumerate(v, w, cap)).epsilon(1e-9));
    CHECK(m.is_feasible(s.values, 1e-6));
    for (double x : s.values) CHECK((x == 0.0 || x == 1.0));
    // LP bound never exceeds the integer optimum.
    CHECK(solve_lp(m).objective_value <= s.objective_value + 1e-9);
    // Deterministic.
    const Solution again = solve_milp(m);
    CHECK(again.values == s.values);
    CHECK(again.nodes == s.nodes);
  }
}

TEST_CASE("MILP: mixed binaries and continuous (facility location)") {
  // Open facilities (fixed cost) and serve demand with continuous flows;
  // compare with enumeration over the open set.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> cost(1.0, 10.0);
  const int nf = 4, nc = 5;
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<double> fixed(nf);
    std::vector<std::vector<double>> c(nf, std::vector<double>(nc));
    for (auto& f : fixed) f = cost(rng) * 3;
    for (auto& row : c) for (auto& v : row) v = cost(rng);
    LinearModel m;
    std::vector<int> open(nf);
    std::vector<std::vector<int>> serve(nf, std::vector<int>(nc));
    for (int f = 0; f < nf; ++f) {
      open[f] = m.add_binary("open" + std::to_string(f));
      m.set_objective(open[f], fixed[f]);
      for (int k = 0; k < nc; ++k) {
        serve[f][k] = m.add_continuous("s", 0, 1);
        m.set_objective(serve[f][k], c[f][k]);
        m.add_constraint({{serve[f][k], 1.0}, {open[f], -1.0}}, Sense::LessEqual, 0.0);
      }
    }
    for (int k = 0; k < nc; ++k) {
      std::vector<Term> t;
      for (int f = 0; f < nf; ++f) t.push_back({serve[f][k], 1.0});
      m.add_constraint(t, Sense::Equal, 1.0);
    }
    double best = 1e18;
    for (int mask = 1; mask < (1 << nf); ++mask) {
      double total = 0;
      for (int f = 0; f < nf; ++f) if (mask >> f & 1) total += fixed[f];
      for (int k = 0; k < nc; ++k) {
        double cheapest = 1e18;
        for (int f = 0; f < nf; ++f) if (mask >> f & 1) cheapest = std::min(cheapest, c[f][k]);
        total += cheapest;
      }
      best = std::min(best, total);
    }
    const Solution s = solve_milp(m);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.objective_value == doctest::Approx(best).epsilon(1e-9));
    CHECK(m.is_feasible(s.values, 1e-6));
  }
}

namespace {

struct Graph {
  int n;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> w;
};

// Cycle among selected edges (as edge indices) or empty.
std::vector<int> find_cycle(const Graph& g, std::span<const double> x) {
  std::vector<std::vector<std::pair<int, int>>> adj(g.n);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (x[e] < 0.5) continue;
    auto [u, v] = g.edges[e];
    // Path u..v in the forest built so far closes a cycle with e.
    std::vector<int> via(g.n, -2), prev(g.n, -1);
    std::vector<int> stack{u};
    via[u] = -1;
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      for (auto [b, id] : adj[a]) {
        if (via[b] != -2) continue;
        via[b] = id;
        prev[b] = a;
        stack.push_back(b);
      }
    }
    if (via[v] != -2) {
      std::vector<int> cyc{static_cast<int>(e)};
      for (int k = v; k != u; k = prev[k]) cyc.push_back(via[k]);
      return cyc;
    }
    adj[u].push_back({v, static_cast<int>(e)});
    adj[v].push_back({u, static_cast<int>(e)});
  }
  return {};
}

double kruskal(const Graph& g) {
  std::vector<int> order(g.edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return g.w[a] < g.w[b]; });
  std::vector<int> parent(g.n);
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  double total = 0;
  for (int e : order) {
    const int a = root(g.edges[e].first), b = root(g.edges[e].second);
    if (a == b) continue;
    parent[a] = b;
    total += g.w[e];
  }
  return total;
}

}  // namespace

TEST_CASE("MILP: lazy subtour cuts give a minimum spanning tree") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> wt(1.0, 10.0);
  for (int trial = 0; trial < 10; ++trial) {
    Graph g{7, {}, {}};
    for (int a = 0; a < g.n; ++a) {
      for (int b = a + 1; b < g.n; ++b) {
        if (b == a + 1 || std::uniform_real_distribution<double>(0, 1)(rng) < 0.5) {
          g.edges.push_back({a, b});
          g.w.push_back(wt(rng));
        }
      }
    }
    LinearModel m;
    std::vector<Term> count;
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
      const int x = m.add_binary("e" + std::to_string(e));
      m.set_objective(x, g.w[e]);
      count.push_back({x, 1.0});
    }
    m.add_constraint(count, Sense::Equal, g.n - 1.0);
    int calls = 0;
    const LazyCutOracle oracle = [&](std::span<const double> x) {
      ++calls;
      std::vector<Constraint> cuts;
      const auto cyc = find_cycle(g, x);
      if (!cyc.empty()) {
        Constraint c;
        for (int e : cyc) c.terms.push_back({e, 1.0});
        c.sense = Sense::LessEqual;
        c.rhs = static_cast<double>(cyc.size()) - 1.0;
        cuts.push_back(c);
      }
      return cuts;
    };
    const Solution s = solve_milp(m, oracle);
    REQUIRE(s.status == Status::Optimal);
    CHECK(calls > 0);
    CHECK(s.objective_value == doctest::Approx(kruskal(g)).epsilon(1e-9));
    CHECK(find_cycle(g, s.values).empty());

    // Pre-adding every lazy cut reproduces the optimum.
    LinearModel full = m;
    for (const Constraint& c : s.lazy_cuts) full.add_constraint(c);
    const Solution again = solve_milp(full, oracle);
    CHECK(std::abs(again.objective_value - s.objective_value) <= 1e-9);
  }
}

TEST_CASE("MILP: a cut the candidate satisfies is an invariant error") {
  LinearModel m;
  const int x = m.add_binary("x");
  m.set_objective(x, 1.0);
  const LazyCutOracle bad = [&](std::span<const double>) {
    return std::vector<Constraint>{{{{x, 1.0}}, Sense::LessEqual, 1.0, "slack"}};
  };
  CHECK_THROWS_AS(solve_milp(m, bad), InvariantError);
}

TEST_CASE("MILP: node limit") {
  // 2 * sum(b) = 7 has fractional LP solutions but no integer one.
  LinearModel m;
  std::vector<Term> t;
  for (int i = 0; i < 12; ++i) {
    const int b = m.add_binary("b" + std::to_string(i));
    m.set_objective(b, 1.0);
    t.push_back({b, 2.0});
  }
  m.add_constraint(t, Sense::Equal, 7.0);
  MilpOptions small;
  small.node_limit = 5;
  const Solution s = solve_milp(m, {}, small);
  CHECK(s.status == Status::NodeLimit);
  CHECK(s.nodes == 5);
  MilpOptions big;
  CHECK(solve_milp(m, {}, big).status == Status::Infeasible);
}

TEST_CASE("model validation") {
  LinearModel m;
  const int b = m.add_binary("b");
  CHECK_THROWS_AS(m.set_objective(5, 1.0), ValidationError);
  m.add_constraint({{b + 3, 1.0}}, Sense::LessEqual, 1.0);
  CHECK_THROWS_AS(m.validate(), ValidationError);
  CHECK_THROWS_AS(solve_lp(m), ValidationError);

  LinearModel nonfinite;
  const int x = nonfinite.add_continuous("x", 0, 1);
  nonfinite.add_constraint({{x, std::nan("")}}, Sense::LessEqual, 1.0);
  CHECK_THROWS_AS(nonfinite.validate(), ValidationError);

  LinearModel badbin;
  badbin.add_variable("z", VarKind::Binary, -1.0, 1.0);
  CHECK_THROWS_AS(badbin.validate(), ValidationError);
}

TEST_CASE("LP text format") {
  LinearModel m;
  const int x = m.add_binary("x");
  const int y = m.add_continuous("y", -kInf, kInf);
  const int z = m.add_continuous("flow[3]", -2.5, 4.0);
  m.set_objective(x, 3.0);
  m.set_objective(y, -1.0);
  m.add_objective_offset(2.0);
  m.add_constraint({{x, 1.0}, {y, 2.0}}, Sense::GreaterEqual, 1.0);
  m.add_constraint({{z, 1.0}, {y, -1.0}}, Sense::Equal, 0.0);
  std::ostringstream os;
  write_lp(m, os);
  const std::string text = os.str();
  CHECK(text.find("min: +3 x -1 y +2;") != std::string::npos);
  CHECK(text.find("R1: +1 x +2 y >= 1;") != std::string::npos);
  CHECK(text.find("R2: +1 x2 -1 y = 0;") != std::string::npos);
  CHECK(text.find("-2.5 <= x2 <= 4;") != std::string::npos);
  CHECK(text.find("free y;") != std::string::npos);
  CHECK(text.find("bin x;") != std::string::npos);
}
