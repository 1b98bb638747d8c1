#include "gridsynth/primary_net.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "gridsynth/errors.hpp"
#include "internal/maxflow.hpp"

namespace gridsynth {

using milp::Constraint;
using milp::Sense;
using milp::Term;

void PrimaryOptions::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(what) + " must be positive and finite");
  };
  positive(line_capacity_kw, "line capacity");
  positive(feeder_capacity_kw, "feeder capacity");
  positive(electrical.s_base_kva, "power base");
  positive(electrical.primary_kv, "primary voltage base");
  positive(electrical.secondary_kv, "secondary voltage base");
  positive(electrical.primary_ohm_per_km, "primary resistance");
  positive(electrical.secondary_ohm_per_km, "secondary resistance");
  if (!(v_min > 0.0 && v_min < 1.0 && 1.0 <= v_max)) {
    throw ValidationError("voltage band must satisfy 0 < v_min < 1 <= v_max");
  }
}

std::size_t PrimaryProblem::num_roads() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(),
                                                [](const PrimaryNode& n) { return n.kind == GraphNodeKind::Road; }));
}

void PrimaryProblem::validate() const {
  options.validate();
  const std::size_t n_road = num_roads();
  const std::string where = "community " + std::to_string(community);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if ((i < n_road) != (nodes[i].kind == GraphNodeKind::Road)) {
      throw ValidationError(where + ": road nodes must precede transformers");
    }
    if (nodes[i].kind == GraphNodeKind::Transformer) {
      if (!(nodes[i].demand_kw > 0.0)) {
        throw ValidationError(where + ": transformer " + std::to_string(nodes[i].id) + " has no demand");
      }
      if (nodes[i].demand_kw > options.feeder_capacity_kw) {
        std::ostringstream os;
        os << where << ": transformer " << nodes[i].id << " demand " << nodes[i].demand_kw
           << " kW exceeds the feeder capacity " << options.feeder_capacity_kw << " kW";
        throw InfeasibleError(os.str());
      }
    }
  }
  if (n_road == 0 && !nodes.empty()) throw ValidationError(where + ": no road node to host a root");
  std::vector<std::vector<int>> adj(nodes.size());
  for (const auto& e : edges) {
    if (e.a < 0 || e.b < 0 || static_cast<std::size_t>(std::max(e.a, e.b)) >= nodes.size() || e.a == e.b) {
      throw ValidationError(where + ": malformed edge");
    }
    if (!(e.length_m >= 0.0) || !(e.resistance_ohm >= 0.0)) throw ValidationError(where + ": negative edge length");
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  if (nodes.empty()) return;
  std::vector<bool> seen(nodes.size(), false);
  std::vector<int> stack{0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  if (count != nodes.size()) throw ValidationError(where + ": subgraph is not connected");
}

std::vector<PrimaryProblem> build_primary_problems(const AugmentedRoadGraph& graph, const PartitionMap& map,
                                                   std::span<const Substation> substations,
                                                   const PrimaryOptions& options) {
  std::map<Id, geo::GeoPoint> where;
  for (const auto& s : substations) where[s.id] = s.location;
  std::vector<int> local(graph.nodes().size(), -1);
  std::vector<PrimaryProblem> out;
  for (std::size_t c = 0; c < map.num_communities(); ++c) {
    PrimaryProblem p;
    p.community = static_cast<int>(c);
    p.substation = map.substation_ids[map.community_cell[c]];
    auto it = where.find(p.substation);
    if (it == where.end()) throw ValidationError("unknown substation " + std::to_string(p.substation));
    p.substation_location = it->second;
    p.options = options;
    // Graph order already puts road nodes before transformers.
    for (int g : map.members(static_cast<int>(c))) {
      const GraphNode& n = graph.nodes()[g];
      local[g] = static_cast<int>(p.nodes.size());
      const double d = n.kind == GraphNodeKind::Road ? geo::geodesic_distance(p.substation_location, n.location) : 0.0;
      p.nodes.push_back({n.kind, n.id, n.location, n.demand_kw, d});
    }
    for (const GraphEdge& e : graph.edges()) {
      if (map.community[e.a] != static_cast<int>(c) || map.community[e.b] != static_cast<int>(c)) continue;
      p.edges.push_back({local[e.a], local[e.b], e.length_m,
                         options.electrical.primary_ohm_per_km * e.length_m / 1000.0, e.link});
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<std::vector<int>> find_cycles(std::size_t n_nodes, const std::vector<std::pair<int, int>>& edges) {
  std::vector<int> parent(n_nodes);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::vector<std::vector<std::pair<int, int>>> forest(n_nodes);
  std::vector<std::vector<int>> cycles;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [a, b] = edges[e];
    const int ra = find(a), rb = find(b);
    if (ra != rb) {
      parent[ra] = rb;
      forest[a].emplace_back(b, static_cast<int>(e));
      forest[b].emplace_back(a, static_cast<int>(e));
      continue;
    }
    // Tree path from a to b closes the cycle.
    std::vector<std::pair<int, int>> via(n_nodes, {-1, -1});
    std::queue<int> q;
    q.push(a);
    via[a] = {a, -1};
    while (!q.empty() && via[b].first < 0) {
      const int v = q.front();
      q.pop();
      for (auto [w, f] : forest[v]) {
        if (via[w].first < 0) {
          via[w] = {v, f};
          q.push(w);
        }
      }
    }
    std::vector<int> cycle{static_cast<int>(e)};
    for (int v = b; v != a; v = via[v].first) cycle.push_back(via[v].second);
    cycles.push_back(std::move(cycle));
  }
  return cycles;
}

namespace {

void add_strengthening(const PrimaryProblem& problem, PrimaryModel& pm, double total_pu, double feeder_cap) {
  milp::LinearModel& lm = pm.model;
  const auto n = problem.nodes.size();
  const std::size_t n_road = problem.num_roads();
  if (n == n_road) return;
  for (std::size_t e = 0; e < problem.edges.size(); ++e) {
    for (int end : {problem.edges[e].a, problem.edges[e].b}) {
      if (static_cast<std::size_t>(end) < n_road) {
        lm.add_constraint({{pm.x[e], 1.0}, {pm.y[end], -1.0}}, Sense::LessEqual, 0.0, "link_" + std::to_string(e));
      }
    }
    // A tree edge carries at most the community's demand.
    if (total_pu < problem.options.electrical.to_pu(problem.options.line_capacity_kw)) {
      lm.add_constraint({{pm.f[e], 1.0}, {pm.x[e], -total_pu}}, Sense::LessEqual, 0.0, "demand_hi_" + std::to_string(e));
      lm.add_constraint({{pm.f[e], 1.0}, {pm.x[e], total_pu}}, Sense::GreaterEqual, 0.0, "demand_lo_" + std::to_string(e));
    }
  }
  std::vector<Term> roots;
  for (std::size_t r = 0; r < n_road; ++r) roots.push_back({pm.z[r], 1.0});
  const double needed = std::ceil(total_pu / feeder_cap - 1e-9);
  lm.add_constraint(std::move(roots), Sense::LessEqual, static_cast<double>(n_road) - needed, "root_count");

  // Every transformer reaches a root: for a node set S holding a transformer,
  // selected edges leaving S plus roots inside S is at least one.
  std::vector<std::pair<int, int>> ends;
  for (const auto& e : problem.edges) ends.emplace_back(e.a, e.b);
  pm.root_cuts = [ends, n, n_road, xs = pm.x, zs = pm.z](std::span<const double> sol) {
    std::vector<Constraint> cuts;
    std::set<std::vector<bool>> seen;
    const int source = static_cast<int>(n);
    for (std::size_t t = n_road; t < n; ++t) {
      internal::MaxFlow mf(static_cast<int>(n) + 1);
      for (std::size_t e = 0; e < ends.size(); ++e) {
        const double c = std::max(0.0, sol[xs[e]]);
        if (c > 0.0) mf.add_edge(ends[e].first, ends[e].second, c, c);
      }
      for (std::size_t r = 0; r < n_road; ++r) {
        const double c = std::max(0.0, 1.0 - sol[zs[r]]);
        if (c > 0.0) mf.add_edge(source, static_cast<int>(r), c, 0.0);
      }
      if (mf.run(source, static_cast<int>(t)) >= 1.0 - 1e-6) continue;
      const std::vector<bool> reach = mf.source_side(source);
      std::vector<bool> in_s(n);
      for (std::size_t v = 0; v < n; ++v) in_s[v] = !reach[v];
      if (!seen.insert(in_s).second) continue;
      Constraint c;
      c.sense = Sense::GreaterEqual;
      c.name = "reach";
      double rhs = 1.0;
      for (std::size_t e = 0; e < ends.size(); ++e) {
        if (in_s[ends[e].first] != in_s[ends[e].second]) c.terms.push_back({xs[e], 1.0});
      }
      for (std::size_t r = 0; r < n_road; ++r) {
        if (!in_s[r]) continue;
        c.terms.push_back({zs[r], -1.0});
        rhs -= 1.0;
      }
      c.rhs = rhs;
      cuts.push_back(std::move(c));
    }
    return cuts;
  };
}

}  // namespace

PrimaryModel build_primary_model(const PrimaryProblem& problem, const Relaxation& relax) {
  problem.validate();
  const PrimaryOptions& o = problem.options;
  const Electrical& el = o.electrical;
  const auto n = problem.nodes.size();
  const std::size_t n_road = problem.num_roads();
  const auto m = problem.edges.size();

  double total_pu = 0.0;
  for (const auto& node : problem.nodes) total_pu += el.to_pu(node.demand_kw);
  double line_cap = el.to_pu(o.line_capacity_kw);
  double feeder_cap = el.to_pu(o.feeder_capacity_kw);
  if (relax.line_capacity) line_cap = std::max(line_cap, total_pu);
  if (relax.feeder_capacity) feeder_cap = std::max(feeder_cap, total_pu);
  double v_lo = o.v_min;
  double v_hi = o.v_max;
  if (relax.voltage) {
    double worst_drop = 0.0;
    for (const auto& e : problem.edges) worst_drop += problem.resistance_pu(e) * line_cap;
    v_lo = std::min(v_lo, 1.0 - worst_drop - 1.0);
  }
  const double big_m = v_hi - v_lo;

  PrimaryModel pm;
  milp::LinearModel& lm = pm.model;
  for (std::size_t e = 0; e < m; ++e) pm.x.push_back(lm.add_binary("x" + std::to_string(e)));
  for (std::size_t e = 0; e < m; ++e) pm.f.push_back(lm.add_continuous("f" + std::to_string(e), -line_cap, line_cap));
  for (std::size_t r = 0; r < n_road; ++r) pm.y.push_back(lm.add_binary("y" + std::to_string(r)));
  for (std::size_t r = 0; r < n_road; ++r) pm.z.push_back(lm.add_binary("z" + std::to_string(r)));
  for (std::size_t i = 0; i < n; ++i) pm.v.push_back(lm.add_continuous("v" + std::to_string(i), v_lo, v_hi));

  std::vector<std::vector<int>> incident(n);
  for (std::size_t e = 0; e < m; ++e) {
    incident[problem.edges[e].a].push_back(static_cast<int>(e));
    incident[problem.edges[e].b].push_back(static_cast<int>(e));
  }
  auto degree = [&](std::size_t node) {
    std::vector<Term> t;
    for (int e : incident[node]) t.push_back({pm.x[e], 1.0});
    return t;
  };
  // Inflow minus outflow; positive flow runs from a to b.
  auto net_inflow = [&](std::size_t node) {
    std::vector<Term> t;
    for (int e : incident[node]) t.push_back({pm.f[e], problem.edges[e].b == static_cast<int>(node) ? 1.0 : -1.0});
    return t;
  };

  for (std::size_t r = 0; r < n_road; ++r) {
    const std::string s = std::to_string(r);
    auto deg = degree(r);
    auto with = [](std::vector<Term> t, std::initializer_list<Term> extra) {
      t.insert(t.end(), extra);
      return t;
    };
    lm.add_constraint(with(deg, {{pm.y[r], -static_cast<double>(m)}}), Sense::LessEqual, 0.0, "unchosen_" + s);
    lm.add_constraint(with(deg, {{pm.y[r], -1.0}}), Sense::GreaterEqual, 0.0, "chosen_" + s);
    lm.add_constraint({{pm.y[r], 1.0}, {pm.z[r], 1.0}}, Sense::GreaterEqual, 1.0, "nonroot_" + s);
    lm.add_constraint(with(deg, {{pm.y[r], -2.0}, {pm.z[r], -2.0}}), Sense::GreaterEqual, -2.0, "transfer_" + s);
  }

  {
    std::vector<Term> t;
    for (int x : pm.x) t.push_back({x, 1.0});
    for (int y : pm.y) t.push_back({y, -1.0});
    for (int z : pm.z) t.push_back({z, -1.0});
    lm.add_constraint(std::move(t), Sense::Equal,
                      static_cast<double>(n - n_road) - static_cast<double>(n_road), "radial");
  }

  for (std::size_t i = n_road; i < n; ++i) {
    lm.add_constraint(net_inflow(i), Sense::Equal, el.to_pu(problem.nodes[i].demand_kw),
                      "balance_" + std::to_string(i));
  }
  for (std::size_t r = 0; r < n_road; ++r) {
    auto lo = net_inflow(r);
    lo.push_back({pm.z[r], -feeder_cap});
    lm.add_constraint(std::move(lo), Sense::GreaterEqual, -feeder_cap, "feeder_lo_" + std::to_string(r));
    auto hi = net_inflow(r);
    hi.push_back({pm.z[r], feeder_cap});
    lm.add_constraint(std::move(hi), Sense::LessEqual, feeder_cap, "feeder_hi_" + std::to_string(r));
  }
  for (std::size_t e = 0; e < m; ++e) {
    const std::string s = std::to_string(e);
    lm.add_constraint({{pm.f[e], 1.0}, {pm.x[e], -line_cap}}, Sense::LessEqual, 0.0, "cap_hi_" + s);
    lm.add_constraint({{pm.f[e], 1.0}, {pm.x[e], line_cap}}, Sense::GreaterEqual, 0.0, "cap_lo_" + s);
  }

  for (std::size_t r = 0; r < n_road; ++r) {
    // Roots (z = 0) sit at exactly 1 pu.
    lm.add_constraint({{pm.v[r], 1.0}, {pm.z[r], 1.0}}, Sense::GreaterEqual, 1.0, "root_lo_" + std::to_string(r));
    lm.add_constraint({{pm.v[r], 1.0}, {pm.z[r], -1.0}}, Sense::LessEqual, 1.0, "root_hi_" + std::to_string(r));
  }
  for (std::size_t e = 0; e < m; ++e) {
    const PrimaryEdge& pe = problem.edges[e];
    const double r = problem.resistance_pu(pe);
    const std::string s = std::to_string(e);
    lm.add_constraint({{pm.v[pe.a], 1.0}, {pm.v[pe.b], -1.0}, {pm.f[e], -r}, {pm.x[e], big_m}}, Sense::LessEqual,
                      big_m, "ldf_hi_" + s);
    lm.add_constraint({{pm.v[pe.a], 1.0}, {pm.v[pe.b], -1.0}, {pm.f[e], -r}, {pm.x[e], -big_m}},
                      Sense::GreaterEqual, -big_m, "ldf_lo_" + s);
  }

  if (o.strengthen) add_strengthening(problem, pm, total_pu, feeder_cap);

  double offset = 0.0;
  for (std::size_t e = 0; e < m; ++e) lm.set_objective(pm.x[e], problem.edges[e].length_m);
  for (std::size_t r = 0; r < n_road; ++r) {
    lm.set_objective(pm.z[r], -problem.nodes[r].substation_distance_m);
    offset += problem.nodes[r].substation_distance_m;
  }
  lm.add_objective_offset(offset);

  std::vector<std::pair<int, int>> ends;
  for (const auto& e : problem.edges) ends.emplace_back(e.a, e.b);
  pm.cycle_cuts = [ends, xs = pm.x, n](std::span<const double> sol) {
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int v) {
      while (parent[v] != v) v = parent[v] = parent[parent[v]];
      return v;
    };
    std::vector<bool> cyclic(n, false);
    for (std::size_t e = 0; e < ends.size(); ++e) {
      if (sol[xs[e]] < 0.5) continue;
      const int ra = find(ends[e].first), rb = find(ends[e].second);
      if (ra == rb) cyclic[ra] = true;
      else parent[ra] = rb;
    }
    std::map<int, std::vector<int>> members;
    for (std::size_t v = 0; v < n; ++v) {
      if (cyclic[find(static_cast<int>(v))]) members[find(static_cast<int>(v))].push_back(static_cast<int>(v));
    }
    std::vector<Constraint> cuts;
    std::vector<int> comp(n, -1);
    for (const auto& [root, nodes] : members) {
      for (int v : nodes) comp[v] = root;
      Constraint c;
      c.sense = Sense::LessEqual;
      c.rhs = static_cast<double>(nodes.size()) - 1.0;
      c.name = "subtour";
      for (std::size_t e = 0; e < ends.size(); ++e) {
        if (comp[ends[e].first] == root && comp[ends[e].second] == root) c.terms.push_back({xs[e], 1.0});
      }
      cuts.push_back(std::move(c));
    }
    return cuts;
  };
  return pm;
}

namespace {

PrimarySolution extract(const PrimaryProblem& problem, const PrimaryModel& pm, const milp::Solution& sol) {
  const Electrical& el = problem.options.electrical;
  const auto n = problem.nodes.size();
  const std::size_t n_road = problem.num_roads();
  PrimarySolution out;
  out.problem = problem;
  out.objective = sol.objective_value;
  out.lazy_cuts = sol.lazy_cuts.size();
  out.nodes_explored = sol.nodes;
  out.proven_optimal = sol.status == milp::Status::Optimal;
  out.selected.resize(n_road);
  out.root.resize(n_road);
  for (std::size_t r = 0; r < n_road; ++r) {
    out.selected[r] = sol.values[pm.y[r]] > 0.5;
    out.root[r] = sol.values[pm.z[r]] < 0.5;
  }
  out.voltage.assign(n, std::numeric_limits<double>::quiet_NaN());

  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (std::size_t e = 0; e < problem.edges.size(); ++e) {
    if (sol.values[pm.x[e]] < 0.5) continue;
    adj[problem.edges[e].a].emplace_back(problem.edges[e].b, static_cast<int>(e));
    adj[problem.edges[e].b].emplace_back(problem.edges[e].a, static_cast<int>(e));
  }
  std::vector<bool> seen(n, false);
  for (std::size_t r = 0; r < n_road; ++r) {
    if (!out.root[r]) continue;
    std::queue<int> q;
    q.push(static_cast<int>(r));
    seen[r] = true;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (auto [w, e] : adj[v]) {
        if (seen[w]) continue;
        seen[w] = true;
        const double f = sol.values[pm.f[e]];
        out.lines.push_back({v, w, e, el.to_kw(problem.edges[e].a == v ? f : -f)});
        q.push(w);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[i]) out.voltage[i] = sol.values[pm.v[i]];
  }
  return out;
}

}  // namespace

PrimarySolution solve_primary(const PrimaryProblem& problem, const milp::MilpOptions& options) {
  const PrimaryModel pm = build_primary_model(problem);
  const std::string where =
      "community " + std::to_string(problem.community) + " (substation " + std::to_string(problem.substation) + ")";
  const milp::Solution sol = milp::solve_milp(pm.model, pm.cycle_cuts, pm.root_cuts, options);
  if (sol.status == milp::Status::Optimal || (sol.status == milp::Status::NodeLimit && !sol.values.empty())) {
    PrimarySolution out = extract(problem, pm, sol);
    if (const auto bad = primary_violations(out); !bad.empty()) {
      throw InvariantError(where + ": primary solution violates " + bad.front());
    }
    return out;
  }
  if (sol.status == milp::Status::NodeLimit) {
    throw InfeasibleError(where + ": node limit reached before any feasible primary network was found");
  }

  const std::pair<Relaxation, const char*> steps[] = {
      {{true, false, false}, "voltage limits"},
      {{true, true, false}, "voltage limits and line capacity"},
      {{true, true, true}, "voltage limits, line capacity and feeder capacity"},
  };
  for (const auto& [relax, what] : steps) {
    const PrimaryModel relaxed = build_primary_model(problem, relax);
    const milp::Solution r = milp::solve_milp(relaxed.model, relaxed.cycle_cuts, relaxed.root_cuts, options);
    if (!r.values.empty()) {
      throw InfeasibleError(where + ": primary model is infeasible; it becomes feasible once " + std::string(what) +
                            " are relaxed");
    }
  }
  throw InfeasibleError(where + ": primary model is infeasible even without voltage and capacity limits");
}

std::vector<std::string> primary_violations(const PrimarySolution& s) {
  const PrimaryProblem& p = s.problem;
  const PrimaryOptions& o = p.options;
  const auto n = p.nodes.size();
  const std::size_t n_road = p.num_roads();
  std::vector<std::string> out;
  auto label = [&](int i) {
    return (p.nodes[i].kind == GraphNodeKind::Road ? "road:" : "tx:") + std::to_string(p.nodes[i].id);
  };

  std::vector<int> degree(n, 0);
  std::vector<double> net_pu(n, 0.0);
  std::vector<std::pair<int, int>> ends;
  for (const PrimaryLine& l : s.lines) {
    ++degree[l.from];
    ++degree[l.to];
    const double f = o.electrical.to_pu(l.flow_kw);
    net_pu[l.from] -= f;
    net_pu[l.to] += f;
    ends.emplace_back(l.from, l.to);
  }
  std::size_t n_selected = 0, n_roots = 0;
  for (std::size_t r = 0; r < n_road; ++r) {
    n_selected += s.selected[r];
    n_roots += s.root[r];
  }
  if (s.lines.size() != (n - n_road) + n_selected - n_roots) {
    out.push_back("radiality count: " + std::to_string(s.lines.size()) + " edges for " +
                  std::to_string(n - n_road) + " transformers, " + std::to_string(n_selected) + " road nodes and " +
                  std::to_string(n_roots) + " roots");
  }
  if (!find_cycles(n, ends).empty()) out.push_back("selected edges contain a cycle");

  for (std::size_t i = 0; i < n; ++i) {
    const bool is_road = i < n_road;
    if (is_road && s.selected[i] != (degree[i] > 0)) out.push_back(label(i) + ": selection disagrees with degree");
    if (is_road && s.root[i] && !s.selected[i]) out.push_back(label(i) + ": root is not selected");
    if (is_road && s.selected[i] && !s.root[i] && degree[i] < 2) out.push_back(label(i) + ": road leaf");
    if (!is_road && degree[i] == 0) out.push_back(label(i) + ": transformer not covered");
    if (degree[i] == 0) continue;
    const double v = s.voltage[i];
    if (!(v >= o.v_min - 1e-9 && v <= o.v_max + 1e-9)) out.push_back(label(i) + ": voltage outside the band");
    if (is_road && s.root[i]) {
      if (std::abs(v - 1.0) > 1e-9) out.push_back(label(i) + ": root voltage is not 1 pu");
      if (-net_pu[i] > o.electrical.to_pu(o.feeder_capacity_kw) + 1e-9) out.push_back(label(i) + ": feeder overload");
    } else {
      const double want = o.electrical.to_pu(p.nodes[i].demand_kw);
      if (std::abs(net_pu[i] - want) > 1e-9) out.push_back(label(i) + ": flow is not conserved");
    }
  }
  for (const PrimaryLine& l : s.lines) {
    const PrimaryEdge& e = p.edges[l.edge];
    const double f = o.electrical.to_pu(l.flow_kw);
    if (std::abs(l.flow_kw) > o.line_capacity_kw * (1 + 1e-9)) out.push_back("line " + std::to_string(l.edge) + " overloaded");
    if (std::abs(s.voltage[l.from] - s.voltage[l.to] - p.resistance_pu(e) * f) > 1e-6) {
      out.push_back("line " + std::to_string(l.edge) + ": LDF residual above 1e-6");
    }
  }
  return out;
}

// --- Complete network -----------------------------------------------------

std::string to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Substation: return "substation";
    case NodeKind::Root: return "root";
    case NodeKind::Transfer: return "road-transfer";
    case NodeKind::Transformer: return "transformer";
    case NodeKind::Residence: return "residence";
  }
  return "?";
}

std::string to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Feeder: return "feeder-HV";
    case EdgeKind::Primary: return "primary";
    case EdgeKind::Secondary: return "secondary";
  }
  return "?";
}

NodeKind parse_node_kind(const std::string& s) {
  for (NodeKind k : {NodeKind::Substation, NodeKind::Root, NodeKind::Transfer, NodeKind::Transformer, NodeKind::Residence}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown node kind '" + s + "'");
}

EdgeKind parse_edge_kind(const std::string& s) {
  for (EdgeKind k : {EdgeKind::Feeder, EdgeKind::Primary, EdgeKind::Secondary}) {
    if (to_string(k) == s) return k;
  }
  throw ValidationError("unknown edge kind '" + s + "'");
}

std::string NetNode::label() const {
  switch (kind) {
    case NodeKind::Substation: return "sub:" + std::to_string(id);
    case NodeKind::Root:
    case NodeKind::Transfer: return "road:" + std::to_string(id);
    case NodeKind::Transformer: return "tx:" + std::to_string(id);
    case NodeKind::Residence: return "res:" + std::to_string(id);
  }
  return "?";
}

int DistributionNetwork::find(const std::string& label) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].label() == label) return static_cast<int>(i);
  }
  return -1;
}

double DistributionNetwork::resistance_pu(const NetEdge& e) const {
  const double z = e.kind == EdgeKind::Secondary ? electrical.secondary_z_base() : electrical.primary_z_base();
  return e.resistance_ohm / z;
}

DistributionNetwork stitch(const Scenario& scenario, std::span<const PrimarySolution> primary,
                           const SecondaryLayer& secondary, const StitchCapacities& capacities,
                           const Electrical& electrical) {
  DistributionNetwork net;
  net.electrical = electrical;
  std::map<std::string, int> index;
  auto add = [&](NetNode node) {
    const std::string key = node.label();
    if (!index.emplace(key, static_cast<int>(net.nodes.size())).second) {
      throw InvariantError("stitch: node " + key + " appears twice");
    }
    net.nodes.push_back(node);
  };

  std::vector<Substation> subs(scenario.substations.begin(), scenario.substations.end());
  std::sort(subs.begin(), subs.end(), [](const Substation& a, const Substation& b) { return a.id < b.id; });
  for (const auto& s : subs) add({NodeKind::Substation, s.id, s.location, 0.0, 1.0});

  struct Placed {
    NodeKind kind;
    Id id;
    geo::GeoPoint location;
  };
  std::vector<Placed> roads, transformers;
  for (const PrimarySolution& sol : primary) {
    const std::size_t n_road = sol.problem.num_roads();
    for (std::size_t i = 0; i < sol.problem.nodes.size(); ++i) {
      const PrimaryNode& pn = sol.problem.nodes[i];
      if (i < n_road) {
        if (sol.selected[i]) roads.push_back({sol.root[i] ? NodeKind::Root : NodeKind::Transfer, pn.id, pn.location});
      } else {
        transformers.push_back({NodeKind::Transformer, pn.id, pn.location});
      }
    }
  }
  auto by_id = [](const Placed& a, const Placed& b) { return a.id < b.id; };
  std::sort(roads.begin(), roads.end(), by_id);
  std::sort(transformers.begin(), transformers.end(), by_id);
  for (const auto& r : roads) add({r.kind, r.id, r.location, 0.0, 1.0});
  for (const auto& t : transformers) add({t.kind, t.id, t.location, 0.0, 1.0});

  std::map<Id, const Residence*> residences;
  for (const auto& r : scenario.residences) residences[r.id] = &r;
  std::set<Id> served;
  for (const auto& l : secondary.lines) served.insert(l.to);
  for (Id id : served) {
    auto it = residences.find(id);
    if (it == residences.end()) throw ValidationError("secondary line serves unknown residence " + std::to_string(id));
    add({NodeKind::Residence, id, it->second->location, it->second->avg_demand, 1.0});
  }

  for (const PrimarySolution& sol : primary) {
    const int sub = index.at("sub:" + std::to_string(sol.problem.substation));
    for (std::size_t r = 0; r < sol.problem.num_roads(); ++r) {
      if (!sol.root[r]) continue;
      const PrimaryNode& pn = sol.problem.nodes[r];
      const int to = index.at("road:" + std::to_string(pn.id));
      double injected = 0.0;
      for (const PrimaryLine& l : sol.lines) {
        if (l.from == static_cast<int>(r)) injected += l.flow_kw;
      }
      net.edges.push_back({EdgeKind::Feeder, sub, to, pn.substation_distance_m, 0.0, capacities.feeder_kw, injected});
    }
  }
  for (const PrimarySolution& sol : primary) {
    auto key = [&](int i) {
      const PrimaryNode& pn = sol.problem.nodes[i];
      return (pn.kind == GraphNodeKind::Road ? "road:" : "tx:") + std::to_string(pn.id);
    };
    for (const PrimaryLine& l : sol.lines) {
      const PrimaryEdge& e = sol.problem.edges[l.edge];
      net.edges.push_back({EdgeKind::Primary, index.at(key(l.from)), index.at(key(l.to)), e.length_m,
                           e.resistance_ohm, capacities.primary_kw, l.flow_kw});
    }
  }
  std::set<Id> fed;
  for (const auto& l : secondary.lines) {
    const std::string from = (l.from_transformer ? "tx:" : "res:") + std::to_string(l.from);
    auto it = index.find(from);
    if (it == index.end()) {
      throw InvariantError("stitch: secondary network of " + from + " is not fed by any primary tree");
    }
    if (l.from_transformer) fed.insert(l.from);
    net.edges.push_back({EdgeKind::Secondary, it->second, index.at("res:" + std::to_string(l.to)), l.length_m,
                         electrical.secondary_ohm_per_km * l.length_m / 1000.0, capacities.secondary_kw, l.flow_kw});
  }
  for (const auto& t : secondary.transformers) {
    if (!index.contains("tx:" + std::to_string(t.id))) {
      throw InvariantError("stitch: transformer " + std::to_string(t.id) + " is not in any primary tree");
    }
  }
  for (const auto& t : transformers) {
    if (!fed.contains(t.id)) throw InvariantError("stitch: transformer " + std::to_string(t.id) + " serves no residence");
  }
  return net;
}

std::vector<std::string> network_violations(const DistributionNetwork& net) {
  std::vector<std::string> out;
  const auto n = net.nodes.size();
  std::vector<int> parents(n, 0);
  std::vector<std::vector<int>> children(n);
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const NetEdge& edge = net.edges[e];
    if (edge.from < 0 || edge.to < 0 || static_cast<std::size_t>(std::max(edge.from, edge.to)) >= n) {
      out.push_back("edge " + std::to_string(e) + " has an unknown endpoint");
      continue;
    }
    ++parents[edge.to];
    children[edge.from].push_back(edge.to);
    const NodeKind a = net.nodes[edge.from].kind, b = net.nodes[edge.to].kind;
    const bool ok = edge.kind == EdgeKind::Feeder    ? a == NodeKind::Substation && b == NodeKind::Root
                    : edge.kind == EdgeKind::Primary ? a != NodeKind::Substation && a != NodeKind::Residence &&
                                                           (b == NodeKind::Transfer || b == NodeKind::Transformer)
                                                     : (a == NodeKind::Transformer || a == NodeKind::Residence) &&
                                                           b == NodeKind::Residence;
    if (!ok) out.push_back("edge " + std::to_string(e) + ": " + to_string(edge.kind) + " joins " + to_string(a) + " to " + to_string(b));
  }
  std::vector<bool> reached(n, false);
  std::vector<int> stack;
  for (std::size_t i = 0; i < n; ++i) {
    const bool is_sub = net.nodes[i].kind == NodeKind::Substation;
    if (is_sub && parents[i] != 0) out.push_back(net.nodes[i].label() + " has a parent");
    if (!is_sub && parents[i] != 1) {
      out.push_back(net.nodes[i].label() + " has " + std::to_string(parents[i]) + " parents");
    }
    if (is_sub) {
      reached[i] = true;
      stack.push_back(static_cast<int>(i));
    }
    const bool road = net.nodes[i].kind == NodeKind::Root || net.nodes[i].kind == NodeKind::Transfer;
    if (road && children[i].empty()) out.push_back(net.nodes[i].label() + " is a road leaf");
  }
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : children[v]) {
      if (!reached[w]) {
        reached[w] = true;
        stack.push_back(w);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!reached[i]) out.push_back(net.nodes[i].label() + " is not reached from a substation");
  }
  return out;
}

}  // namespace gridsynth
