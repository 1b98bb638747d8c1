#include "gridsynth/partition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>

#include "gridsynth/errors.hpp"
#include "internal/csv.hpp"

namespace gridsynth {

AugmentedRoadGraph::AugmentedRoadGraph(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), adj_(nodes_.size()) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    auto& pos = nodes_[i].kind == GraphNodeKind::Road ? road_pos_ : tx_pos_;
    if (!pos.emplace(nodes_[i].id, static_cast<int>(i)).second) {
      throw InvariantError("augmented graph: duplicate node " + node_label(nodes_[i]));
    }
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    adj_[edges_[e].a].emplace_back(edges_[e].b, static_cast<int>(e));
    adj_[edges_[e].b].emplace_back(edges_[e].a, static_cast<int>(e));
  }
}

int AugmentedRoadGraph::road_index(Id road_id) const {
  auto it = road_pos_.find(road_id);
  return it == road_pos_.end() ? -1 : it->second;
}

int AugmentedRoadGraph::transformer_index(Id tx_id) const {
  auto it = tx_pos_.find(tx_id);
  return it == tx_pos_.end() ? -1 : it->second;
}

double AugmentedRoadGraph::total_demand() const {
  double total = 0.0;
  for (const auto& n : nodes_) total += n.demand_kw;
  return total;
}

std::string node_label(const GraphNode& n) {
  return (n.kind == GraphNodeKind::Road ? "road:" : "tx:") + std::to_string(n.id);
}

AugmentedRoadGraph augment(const RoadNetwork& roads, std::span<const SecondaryNetwork> secondary) {
  return augment(roads, flatten(secondary).transformers);
}

AugmentedRoadGraph augment(const RoadNetwork& roads, std::span<const UsedTransformer> used) {
  std::vector<GraphNode> nodes;
  for (const auto& [id, p] : roads.nodes()) nodes.push_back({GraphNodeKind::Road, id, p, 0.0, 0});

  std::vector<GraphNode> transformers;
  for (const UsedTransformer& t : used) {
    transformers.push_back({GraphNodeKind::Transformer, t.id, t.location, t.demand_kw, t.link});
  }
  std::sort(transformers.begin(), transformers.end(), [](const GraphNode& a, const GraphNode& b) { return a.id < b.id; });
  std::map<Id, std::vector<int>> on_link;
  for (const auto& t : transformers) {
    roads.link(t.link);  // throws for an unknown link
    on_link[t.link].push_back(static_cast<int>(nodes.size()));
    nodes.push_back(t);
  }

  auto road_pos = [&](Id id) {
    return static_cast<int>(std::distance(roads.nodes().begin(), roads.nodes().find(id)));
  };
  std::vector<GraphEdge> edges;
  for (const RoadLink& l : roads.links()) {
    const geo::GeoPoint u = roads.node(l.u);
    const double length = geo::segment_length(roads.segment(l));
    auto it = on_link.find(l.id);
    if (it == on_link.end()) {
      edges.push_back({road_pos(l.u), road_pos(l.v), length, l.id});
      continue;
    }
    std::vector<std::pair<double, int>> stops;
    for (int t : it->second) {
      const geo::GeoPoint p = nodes[t].location;
      if (geo::point_segment_distance(p, roads.segment(l)) > 1e-3) {
        throw InvariantError("transformer " + std::to_string(nodes[t].id) + " is not on link " + std::to_string(l.id));
      }
      stops.emplace_back(geo::geodesic_distance(u, p), t);
    }
    std::sort(stops.begin(), stops.end());
    int prev = road_pos(l.u);
    double prev_d = 0.0;
    for (const auto& [d, t] : stops) {
      edges.push_back({prev, t, d - prev_d, l.id});
      prev = t;
      prev_d = d;
    }
    edges.push_back({prev, road_pos(l.v), length - prev_d, l.id});
  }
  return AugmentedRoadGraph(std::move(nodes), std::move(edges));
}

std::vector<SubstationSeed> seed_substations(const AugmentedRoadGraph& graph, const RoadNetwork& roads,
                                             std::span<const Substation> substations,
                                             const MappingOptions& options) {
  const geo::SpatialIndex idx = index_roads(roads, options.padding_m);
  std::vector<SubstationSeed> seeds;
  for (const Substation& s : substations) {
    NearestLink n;
    try {
      n = nearest_link(s.location, idx, roads, options);
    } catch (const ValidationError& e) {
      throw ValidationError("substation " + std::to_string(s.id) + ": " + e.what());
    }
    const RoadLink& l = roads.link(n.link);
    const double du = geo::geodesic_distance(s.location, roads.node(l.u));
    const double dv = geo::geodesic_distance(s.location, roads.node(l.v));
    const bool take_u = du < dv || (du == dv && l.u < l.v);
    const Id road = take_u ? l.u : l.v;
    seeds.push_back({s.id, graph.road_index(road), take_u ? du : dv});
  }
  return seeds;
}

std::vector<int> PartitionMap::members(int community_id) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < community.size(); ++i) {
    if (community[i] == community_id) out.push_back(static_cast<int>(i));
  }
  return out;
}

PartitionMap voronoi_assign(const AugmentedRoadGraph& graph, std::span<const SubstationSeed> seeds) {
  if (seeds.empty()) throw ValidationError("voronoi_assign: no substations");
  const std::size_t n = graph.nodes().size();
  PartitionMap map;
  map.seeds.assign(seeds.begin(), seeds.end());
  for (const auto& s : seeds) map.substation_ids.push_back(s.substation);
  map.cell.assign(n, -1);
  map.network_distance_m.assign(n, std::numeric_limits<double>::infinity());
  map.community.assign(n, -1);

  // (distance, substation id, substation position, node); min-heap.
  using Label = std::tuple<double, Id, int, int>;
  std::priority_queue<Label, std::vector<Label>, std::greater<>> heap;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    if (seeds[k].node < 0 || static_cast<std::size_t>(seeds[k].node) >= n) {
      throw ValidationError("substation " + std::to_string(seeds[k].substation) + " has no seed node");
    }
    heap.emplace(seeds[k].offset_m, seeds[k].substation, static_cast<int>(k), seeds[k].node);
  }
  std::vector<bool> settled(n, false);
  while (!heap.empty()) {
    const auto [d, sid, pos, v] = heap.top();
    heap.pop();
    if (settled[v]) continue;
    settled[v] = true;
    map.cell[v] = pos;
    map.network_distance_m[v] = d;
    for (const auto& [w, e] : graph.neighbours(v)) {
      if (!settled[w]) heap.emplace(d + graph.edges()[e].length_m, sid, pos, w);
    }
  }

  std::vector<std::string> lost;
  for (std::size_t i = 0; i < n; ++i) {
    if (map.cell[i] < 0 && graph.nodes()[i].kind == GraphNodeKind::Transformer) lost.push_back(node_label(graph.nodes()[i]));
  }
  if (!lost.empty()) {
    std::ostringstream os;
    os << "transformers unreachable from every substation along roads:";
    for (const auto& s : lost) os << ' ' << s;
    throw ValidationError(os.str());
  }

  std::vector<int> community_of_cell(seeds.size(), -1);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = map.cell[i];
    if (c < 0) continue;
    if (community_of_cell[c] < 0) {
      community_of_cell[c] = static_cast<int>(map.community_cell.size());
      map.community_cell.push_back(c);
    }
  }
  // Renumber so communities follow substation order.
  std::vector<int> sorted_cells = map.community_cell;
  std::sort(sorted_cells.begin(), sorted_cells.end());
  for (std::size_t k = 0; k < sorted_cells.size(); ++k) community_of_cell[sorted_cells[k]] = static_cast<int>(k);
  map.community_cell = sorted_cells;
  for (std::size_t i = 0; i < n; ++i) {
    if (map.cell[i] >= 0) map.community[i] = community_of_cell[map.cell[i]];
  }
  return map;
}

std::vector<double> edge_betweenness(const SimpleGraph& g) {
  std::vector<std::vector<std::pair<int, int>>> adj(g.n);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    adj[g.edges[e].first].emplace_back(g.edges[e].second, static_cast<int>(e));
    adj[g.edges[e].second].emplace_back(g.edges[e].first, static_cast<int>(e));
  }
  std::vector<double> eb(g.edges.size(), 0.0);
  std::vector<double> sigma(g.n), delta(g.n);
  std::vector<int> dist(g.n);
  std::vector<std::vector<std::pair<int, int>>> preds(g.n);
  std::vector<int> order;
  for (int s = 0; s < g.n; ++s) {
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    std::fill(dist.begin(), dist.end(), -1);
    for (auto& p : preds) p.clear();
    order.clear();
    sigma[s] = 1.0;
    dist[s] = 0;
    std::queue<int> q;
    q.push(s);
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      order.push_back(v);
      for (const auto& [w, e] : adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          q.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].emplace_back(v, e);
        }
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const int w = *it;
      for (const auto& [v, e] : preds[w]) {
        const double c = sigma[v] / sigma[w] * (1.0 + delta[w]);
        eb[e] += c;
        delta[v] += c;
      }
    }
  }
  for (double& b : eb) b /= 2.0;
  return eb;
}

namespace {

// Component labels over active edges, numbered by smallest member.
std::vector<int> components(int n, const std::vector<std::pair<int, int>>& edges, const std::vector<bool>& active) {
  std::vector<std::vector<int>> adj(n);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    if (!active[e]) continue;
    adj[edges[e].first].push_back(edges[e].second);
    adj[edges[e].second].push_back(edges[e].first);
  }
  std::vector<int> label(n, -1);
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    label[s] = next;
    std::vector<int> stack{s};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : adj[v]) {
        if (label[w] < 0) {
          label[w] = next;
          stack.push_back(w);
        }
      }
    }
    ++next;
  }
  return label;
}

}  // namespace

GirvanNewmanResult girvan_newman(const SimpleGraph& g, const CommunityStop& stop) {
  if (stop.max_nodes == 0) throw ValidationError("community size limit must be at least 1");
  auto load_of = [&](int v) { return g.load.empty() ? 0.0 : g.load[v]; };
  for (int v = 0; v < g.n; ++v) {
    if (load_of(v) > stop.max_load_kw) {
      std::ostringstream os;
      os << "node " << v << " alone carries " << load_of(v) << " kW, above the community limit of "
         << stop.max_load_kw << " kW";
      throw ValidationError(os.str());
    }
  }
  // Canonical edge orientation so ties do not depend on input order.
  std::vector<std::pair<int, int>> edges = g.edges;
  for (auto& [a, b] : edges) {
    if (a > b) std::swap(a, b);
  }
  std::vector<bool> active(edges.size(), true);
  GirvanNewmanResult out;
  while (true) {
    out.label = components(g.n, edges, active);
    const int k = out.label.empty() ? 0 : *std::max_element(out.label.begin(), out.label.end()) + 1;
    std::vector<std::size_t> size(k, 0);
    std::vector<double> load(k, 0.0);
    for (int v = 0; v < g.n; ++v) {
      ++size[out.label[v]];
      load[out.label[v]] += load_of(v);
    }
    std::vector<bool> oversized(k);
    bool any = false;
    for (int c = 0; c < k; ++c) {
      oversized[c] = size[c] > stop.max_nodes || load[c] > stop.max_load_kw;
      any = any || oversized[c];
    }
    if (!any) return out;

    SimpleGraph live{g.n, {}, {}};
    std::vector<std::size_t> live_id;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (active[e] && oversized[out.label[edges[e].first]]) {
        live.edges.push_back(edges[e]);
        live_id.push_back(e);
      }
    }
    const std::vector<double> eb = edge_betweenness(live);
    double top = 0.0;
    for (double b : eb) top = std::max(top, b);
    std::size_t pick = live_id.size();
    for (std::size_t i = 0; i < live_id.size(); ++i) {
      if (eb[i] < top * (1.0 - 1e-9)) continue;
      if (pick == live_id.size() || edges[live_id[i]] < edges[live_id[pick]]) pick = i;
    }
    if (pick == live_id.size()) throw InvariantError("girvan_newman: oversized component without edges");
    active[live_id[pick]] = false;
    out.removed.push_back(edges[live_id[pick]]);
  }
}

void split_communities(const AugmentedRoadGraph& graph, PartitionMap& map, const CommunityStop& stop) {
  const std::size_t n = graph.nodes().size();
  std::fill(map.community.begin(), map.community.end(), -1);
  map.community_cell.clear();
  for (std::size_t cell = 0; cell < map.seeds.size(); ++cell) {
    std::vector<int> members;
    std::vector<int> local(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      if (map.cell[i] == static_cast<int>(cell)) {
        local[i] = static_cast<int>(members.size());
        members.push_back(static_cast<int>(i));
      }
    }
    if (members.empty()) continue;
    SimpleGraph sub{static_cast<int>(members.size()), {}, {}};
    for (int v : members) sub.load.push_back(graph.nodes()[v].demand_kw);
    for (const GraphEdge& e : graph.edges()) {
      if (local[e.a] >= 0 && local[e.b] >= 0) sub.edges.emplace_back(local[e.a], local[e.b]);
    }
    std::vector<int> label = girvan_newman(sub, stop).label;

    // A community of transformers alone has no road node to host a root, so
    // it joins the lowest-labelled neighbouring community.
    while (true) {
      std::set<int> has_road;
      for (std::size_t j = 0; j < members.size(); ++j) {
        if (graph.nodes()[members[j]].kind == GraphNodeKind::Road) has_road.insert(label[j]);
      }
      int orphan = -1, into = -1;
      for (const auto& [a, b] : sub.edges) {
        for (auto [s, t] : {std::pair(a, b), std::pair(b, a)}) {
          if (label[s] == label[t] || has_road.contains(label[s])) continue;
          if (orphan < 0 || label[s] < orphan || (label[s] == orphan && label[t] < into)) {
            orphan = label[s];
            into = label[t];
          }
        }
      }
      if (orphan < 0) break;
      for (int& l : label) {
        if (l == orphan) l = into;
      }
    }
    std::map<int, int> renumber;
    for (int l : label) renumber.emplace(l, static_cast<int>(renumber.size()));
    const int base = static_cast<int>(map.community_cell.size());
    for (std::size_t c = 0; c < renumber.size(); ++c) map.community_cell.push_back(static_cast<int>(cell));
    for (std::size_t j = 0; j < members.size(); ++j) map.community[members[j]] = base + renumber.at(label[j]);
  }
}

std::vector<std::string> partition_violations(const AugmentedRoadGraph& graph, const PartitionMap& map) {
  std::vector<std::string> out;
  const auto n = static_cast<int>(graph.nodes().size());
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : graph.edges()) edges.emplace_back(e.a, e.b);
  auto check = [&](const std::vector<int>& group, const char* what) {
    std::vector<bool> active(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      active[e] = group[edges[e].first] >= 0 && group[edges[e].first] == group[edges[e].second];
    }
    const auto label = components(n, edges, active);
    std::map<int, int> first_label;
    for (int v = 0; v < n; ++v) {
      if (group[v] < 0) continue;
      auto [it, fresh] = first_label.emplace(group[v], label[v]);
      if (!fresh && it->second != label[v]) {
        out.push_back(std::string(what) + " " + std::to_string(group[v]) + " is disconnected");
        return;
      }
    }
  };
  check(map.cell, "cell");
  check(map.community, "community");
  for (int v = 0; v < n; ++v) {
    if (graph.nodes()[v].kind == GraphNodeKind::Transformer && map.cell[v] < 0) {
      out.push_back(node_label(graph.nodes()[v]) + " is unassigned");
    }
  }
  return out;
}

void write_partition_csv(const AugmentedRoadGraph& graph, const PartitionMap& map, const std::filesystem::path& path) {
  std::ofstream out = internal::open_for_write(path);
  out << "node_id,substation_id,community_id\n";
  for (std::size_t i = 0; i < graph.nodes().size(); ++i) {
    if (map.cell[i] < 0) continue;
    out << node_label(graph.nodes()[i]) << ',' << map.substation_ids[map.cell[i]] << ',' << map.community[i] << '\n';
  }
}

PartitionMap read_partition_csv(const AugmentedRoadGraph& graph, std::span<const SubstationSeed> seeds,
                                const std::filesystem::path& path) {
  PartitionMap map = voronoi_assign(graph, seeds);
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < graph.nodes().size(); ++i) index[node_label(graph.nodes()[i])] = static_cast<int>(i);

  const auto t = internal::CsvTable::read(path, {"node_id", "substation_id", "community_id"});
  std::vector<int> community(graph.nodes().size(), -1);
  int max_label = -1;
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto it = index.find(t.field(r, "node_id"));
    if (it == index.end()) throw ValidationError(t.where(r) + ": unknown node " + t.field(r, "node_id"));
    const int v = it->second;
    if (community[v] >= 0) throw ValidationError(t.where(r) + ": node listed twice");
    if (map.cell[v] < 0 || map.substation_ids[map.cell[v]] != internal::parse_int(t, r, "substation_id")) {
      throw ValidationError(t.where(r) + ": substation does not match the node's Voronoi cell");
    }
    const auto c = internal::parse_int(t, r, "community_id");
    if (c < 0 || c >= static_cast<std::int64_t>(graph.nodes().size())) {
      throw ValidationError(t.where(r) + ": community id out of range");
    }
    community[v] = static_cast<int>(c);
    max_label = std::max(max_label, static_cast<int>(c));
  }
  std::vector<int> cell_of(static_cast<std::size_t>(max_label + 1), -1);
  for (std::size_t v = 0; v < community.size(); ++v) {
    if (map.cell[v] < 0) continue;
    if (community[v] < 0) throw ValidationError(path.filename().string() + ": no row for " + node_label(graph.nodes()[v]));
    int& c = cell_of[community[v]];
    if (c >= 0 && c != map.cell[v]) {
      throw ValidationError(path.filename().string() + ": community " + std::to_string(community[v]) +
                            " spans two cells");
    }
    c = map.cell[v];
  }
  for (std::size_t k = 0; k < cell_of.size(); ++k) {
    if (cell_of[k] < 0) throw ValidationError(path.filename().string() + ": community " + std::to_string(k) + " is empty");
  }
  map.community = std::move(community);
  map.community_cell = std::move(cell_of);
  const auto bad = partition_violations(graph, map);
  if (!bad.empty()) throw ValidationError(path.filename().string() + ": " + bad.front());
  return map;
}

}  // namespace gridsynth
