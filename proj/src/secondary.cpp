#include "gridsynth/secondary.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "gridsynth/errors.hpp"

namespace gridsynth {

namespace {

constexpr double kMinLengthM = 1e-6;
constexpr double kBalanceTolKw = 1e-9;

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
  std::vector<std::size_t> parent;
};

}  // namespace

geo::GeoPoint SecondaryProblem::location(int node) const {
  const auto n_res = static_cast<int>(residences.size());
  return node < n_res ? residences[node].location : candidates[node - n_res].location;
}

std::vector<SecondaryProblem> build_secondary_problems(const Scenario& scenario,
                                                       const LinkAssignment& assignment,
                                                       const TransformerCandidates& candidates,
                                                       const SecondaryOptions& options) {
  std::map<Id, const Residence*> by_id;
  for (const Residence& r : scenario.residences) by_id[r.id] = &r;
  std::vector<SecondaryProblem> out;
  for (const auto& [link, residents] : assignment.residents) {
    SecondaryProblem p{link, scenario.roads.segment(link), {}, {}, options};
    for (Id id : residents) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw ValidationError("assignment names unknown residence " + std::to_string(id));
      p.residences.push_back({id, it->second->location, it->second->avg_demand});
    }
    auto c = candidates.by_link.find(link);
    if (c == candidates.by_link.end() || c->second.empty()) {
      throw ValidationError("link " + std::to_string(link) + " has residents but no candidate transformers");
    }
    p.candidates = c->second;
    out.push_back(std::move(p));
  }
  return out;
}

int crossing_count(const SecondaryProblem& problem, int a, int b) {
  if (problem.is_candidate(a) || problem.is_candidate(b)) return 1;
  const geo::Side sa = geo::side_of(problem.location(a), problem.link);
  const geo::Side sb = geo::side_of(problem.location(b), problem.link);
  if (sa == geo::Side::On || sb == geo::Side::On) return 1;
  return sa == sb ? 0 : 2;
}

std::vector<CandidateEdge> build_candidate_edges(const SecondaryProblem& problem) {
  std::vector<geo::GeoPoint> pts;
  for (int i = 0; i < static_cast<int>(problem.num_nodes()); ++i) pts.push_back(problem.location(i));
  if (pts.size() < 2) return {};
  const DelaunayResult dt = delaunay(pts);
  std::set<std::pair<int, int>> pairs(dt.edges.begin(), dt.edges.end());

  if (dt.collinear) {
    // No triangulation: also offer every residence-candidate pair within
    // twice the median spacing of consecutive points.
    std::vector<double> gaps;
    for (const auto& [a, b] : dt.edges) gaps.push_back(geo::geodesic_distance(pts[a], pts[b]));
    std::sort(gaps.begin(), gaps.end());
    const double median = gaps.empty() ? 0.0 : gaps[gaps.size() / 2];
    for (int h = 0; h < static_cast<int>(problem.residences.size()); ++h) {
      for (int c = static_cast<int>(problem.residences.size()); c < static_cast<int>(pts.size()); ++c) {
        if (geo::geodesic_distance(pts[h], pts[c]) <= 2.0 * median) pairs.emplace(h, c);
      }
    }
  }

  std::vector<CandidateEdge> out;
  for (auto [a, b] : pairs) {
    const bool ca = problem.is_candidate(a), cb = problem.is_candidate(b);
    if (ca && cb) continue;
    if (cb) std::swap(a, b);
    CandidateEdge e;
    e.u = a;
    e.v = b;
    e.length_m = std::max(kMinLengthM, geo::geodesic_distance(pts[a], pts[b]));
    e.crossing = crossing_count(problem, a, b);
    e.weight = e.length_m + problem.options.lambda_m * e.crossing;
    out.push_back(e);
  }
  return out;
}

SecondaryModel build_secondary_model(const SecondaryProblem& problem, std::vector<CandidateEdge> edges) {
  using milp::Sense;
  using milp::Term;
  SecondaryModel sm;
  sm.edges = std::move(edges);
  const double cap = problem.options.capacity_kw;
  if (!(cap > 0.0)) throw ValidationError("secondary capacity must be positive");
  auto& m = sm.model;
  for (std::size_t e = 0; e < sm.edges.size(); ++e) {
    const auto& ce = sm.edges[e];
    const std::string tag = std::to_string(ce.u) + "_" + std::to_string(ce.v);
    sm.x.push_back(m.add_binary("x_" + tag));
    sm.f.push_back(m.add_continuous("f_" + tag, -cap, cap));
    m.set_objective(sm.x.back(), ce.weight);
  }
  const std::size_t n_res = problem.residences.size();
  std::vector<std::vector<Term>> degree(n_res), balance(n_res);
  for (std::size_t e = 0; e < sm.edges.size(); ++e) {
    const auto& ce = sm.edges[e];
    for (int end : {ce.u, ce.v}) {
      if (!problem.is_candidate(end)) degree[end].push_back({sm.x[e], 1.0});
    }
    if (!problem.is_candidate(ce.u)) balance[ce.u].push_back({sm.f[e], -1.0});
    if (!problem.is_candidate(ce.v)) balance[ce.v].push_back({sm.f[e], 1.0});
    m.add_constraint({{sm.f[e], 1.0}, {sm.x[e], -cap}}, Sense::LessEqual, 0.0, "cap_hi");
    m.add_constraint({{sm.f[e], -1.0}, {sm.x[e], -cap}}, Sense::LessEqual, 0.0, "cap_lo");
  }
  for (std::size_t h = 0; h < n_res; ++h) {
    m.add_constraint(degree[h], Sense::LessEqual, 2.0, "degree_" + std::to_string(h));
    m.add_constraint(balance[h], Sense::Equal, problem.residences[h].demand_kw, "balance_" + std::to_string(h));
  }
  std::vector<Term> count;
  for (int x : sm.x) count.push_back({x, 1.0});
  m.add_constraint(count, Sense::Equal, static_cast<double>(n_res), "edge_count");
  return sm;
}

double SecondaryNetwork::transformer_demand(int t) const {
  double total = 0.0;
  for (std::size_t h = 0; h < root_of.size(); ++h) {
    if (root_of[h] == t) total += problem.residences[h].demand_kw;
  }
  return total;
}

SecondaryNetwork solve_secondary(const SecondaryProblem& problem, const milp::MilpOptions& milp_options) {
  SecondaryNetwork net{problem, {}, {}, {}, 0.0, {}};
  const std::size_t n_res = problem.residences.size();
  if (n_res == 0) return net;
  for (const auto& r : problem.residences) {
    if (!(r.demand_kw > 0.0)) {
      throw ValidationError("residence " + std::to_string(r.id) + ": demand must be strictly positive");
    }
  }

  const SecondaryModel sm = build_secondary_model(problem, build_candidate_edges(problem));
  const milp::Solution sol = milp::solve_milp(sm.model, {}, milp_options);
  if (sol.status != milp::Status::Optimal) {
    std::ostringstream os;
    os << "secondary network for link " << problem.link_id << " (" << n_res << " residences, "
       << problem.candidates.size() << " candidates): " << milp::to_string(sol.status)
       << "; try a larger secondary capacity (now " << problem.options.capacity_kw
       << " kW) or more candidate transformers";
    throw InfeasibleError(os.str());
  }

  // Orient the selected edges away from the transformers and recompute flows
  // as subtree demands, which are exact on a forest.
  const std::size_t n = problem.num_nodes();
  std::vector<std::vector<std::size_t>> adj(n);
  std::vector<std::size_t> chosen;
  for (std::size_t e = 0; e < sm.edges.size(); ++e) {
    if (sol.values[sm.x[e]] < 0.5) continue;
    chosen.push_back(e);
    adj[sm.edges[e].u].push_back(e);
    adj[sm.edges[e].v].push_back(e);
  }
  net.root_of.assign(n_res, -1);
  std::vector<int> parent_edge(n, -1);
  std::vector<int> order;
  std::vector<bool> seen(n, false);
  for (int t = static_cast<int>(n_res); t < static_cast<int>(n); ++t) {
    if (adj[t].empty()) continue;
    net.used_candidates.push_back(t);
    seen[t] = true;
    std::vector<int> stack{t};
    while (!stack.empty()) {
      const int a = stack.back();
      stack.pop_back();
      order.push_back(a);
      for (std::size_t e : adj[a]) {
        const int b = sm.edges[e].u == a ? sm.edges[e].v : sm.edges[e].u;
        if (seen[b]) {
          if (static_cast<int>(e) != parent_edge[a]) throw InvariantError("secondary solution contains a cycle");
          continue;
        }
        if (problem.is_candidate(b)) throw InvariantError("secondary solution joins two transformers");
        seen[b] = true;
        parent_edge[b] = static_cast<int>(e);
        net.root_of[b] = t;
        stack.push_back(b);
      }
    }
  }
  std::vector<double> subtree(n, 0.0);
  for (std::size_t h = 0; h < n_res; ++h) subtree[h] = problem.residences[h].demand_kw;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (parent_edge[*it] < 0) continue;
    const auto& ce = sm.edges[parent_edge[*it]];
    const int up = ce.u == *it ? ce.v : ce.u;
    subtree[up] += subtree[*it];
  }
  for (std::size_t e : chosen) {
    const auto& ce = sm.edges[e];
    const bool v_is_child = parent_edge[ce.v] == static_cast<int>(e);
    const int child = v_is_child ? ce.v : ce.u;
    const int parent = v_is_child ? ce.u : ce.v;
    const double flow = subtree[child];
    // The solver's signed flow must agree with the tree flow.
    const double solver_flow = v_is_child ? sol.values[sm.f[e]] : -sol.values[sm.f[e]];
    if (std::abs(solver_flow - flow) > 1e-6 * std::max(1.0, flow)) {
      throw InvariantError("secondary flows disagree with the tree demands on link " +
                           std::to_string(problem.link_id));
    }
    net.edges.push_back({parent, child, ce.length_m, ce.weight, flow});
    net.objective += ce.weight;
  }
  std::sort(net.edges.begin(), net.edges.end(),
            [](const SecondaryEdge& a, const SecondaryEdge& b) { return std::pair(a.from, a.to) < std::pair(b.from, b.to); });

  const auto problems = secondary_violations(net);
  if (!problems.empty()) {
    throw InvariantError("secondary network for link " + std::to_string(problem.link_id) + ": " + problems.front());
  }
  return net;
}

std::size_t used_transformer_count(const SecondaryTopology& g) {
  std::set<int> used;
  const auto n_res = static_cast<int>(g.n_residences);
  for (const auto& [a, b] : g.edges) {
    if (a >= n_res) used.insert(a);
    if (b >= n_res) used.insert(b);
  }
  return used.size();
}

std::size_t used_component_count(const SecondaryTopology& g) {
  const std::size_t n = g.n_residences + g.n_transformers;
  UnionFind uf(n);
  std::vector<bool> present(n, false);
  for (std::size_t h = 0; h < g.n_residences; ++h) present[h] = true;
  for (const auto& [a, b] : g.edges) {
    present[a] = present[b] = true;
    uf.unite(a, b);
  }
  std::set<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (present[i]) roots.insert(uf.find(i));
  }
  return roots.size();
}

bool check_components(const SecondaryTopology& g, std::span<const double> flows, std::span<const double> demands) {
  if (flows.size() != g.edges.size() || demands.size() != g.n_residences) {
    throw ValidationError("check_components: flow or demand vector has the wrong length");
  }
  if (used_component_count(g) != used_transformer_count(g)) return false;
  std::vector<double> net_in(g.n_residences, 0.0);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto [a, b] = g.edges[e];
    if (static_cast<std::size_t>(a) < g.n_residences) net_in[a] -= flows[e];
    if (static_cast<std::size_t>(b) < g.n_residences) net_in[b] += flows[e];
  }
  for (std::size_t h = 0; h < g.n_residences; ++h) {
    if (std::abs(net_in[h] - demands[h]) > kBalanceTolKw) return false;
  }
  return true;
}

std::vector<std::string> secondary_violations(const SecondaryNetwork& net) {
  std::vector<std::string> out;
  const SecondaryProblem& p = net.problem;
  const std::size_t n_res = p.residences.size();
  const std::size_t n = p.num_nodes();
  if (net.edges.size() != n_res) {
    out.push_back("edge count " + std::to_string(net.edges.size()) + " differs from residence count " +
                  std::to_string(n_res));
  }
  std::vector<int> degree(n, 0);
  std::vector<double> net_in(n, 0.0);
  UnionFind uf(n);
  bool cyclic = false;
  for (const auto& e : net.edges) {
    ++degree[e.from];
    ++degree[e.to];
    net_in[e.to] += e.flow_kw;
    net_in[e.from] -= e.flow_kw;
    if (p.is_candidate(e.from) && p.is_candidate(e.to)) out.push_back("transformer-transformer edge");
    if (!uf.unite(e.from, e.to)) cyclic = true;
  }
  if (cyclic) out.push_back("selected edges contain a cycle");
  for (std::size_t h = 0; h < n_res; ++h) {
    if (degree[h] < 1 || degree[h] > 2) {
      out.push_back("residence " + std::to_string(p.residences[h].id) + " has degree " + std::to_string(degree[h]));
    }
    if (std::abs(net_in[h] - p.residences[h].demand_kw) > kBalanceTolKw) {
      out.push_back("residence " + std::to_string(p.residences[h].id) + " is not balanced");
    }
  }
  std::map<std::size_t, int> transformers_in;
  for (std::size_t t = n_res; t < n; ++t) {
    if (degree[t] > 0) ++transformers_in[uf.find(t)];
  }
  for (std::size_t h = 0; h < n_res; ++h) {
    auto it = transformers_in.find(uf.find(h));
    if (it == transformers_in.end() || it->second != 1) {
      out.push_back("residence " + std::to_string(p.residences[h].id) + " is not in a component with exactly one transformer");
      break;
    }
  }
  return out;
}

}  // namespace gridsynth
