#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "gridsynth/errors.hpp"
#include "gridsynth/partition.hpp"
#include "support/partition_oracle.hpp"
#include "support/secondary_fixtures.hpp"
#include "support/temp_dir.hpp"

using namespace gridsynth;
using fixtures::at;

namespace {

std::vector<GraphNode> road_nodes(int n) {
  std::vector<GraphNode> nodes;
  for (int i = 0; i < n; ++i) nodes.push_back({GraphNodeKind::Road, i + 1, at(10.0 * i, 0), 0.0, 0});
  return nodes;
}

// Random connected weighted graph: a spanning tree plus extra edges.
AugmentedRoadGraph random_graph(std::mt19937_64& rng, int n, int extra) {
  std::uniform_real_distribution<double> w(1.0, 100.0);
  std::vector<GraphEdge> edges;
  for (int v = 1; v < n; ++v) {
    std::uniform_int_distribution<int> pick(0, v - 1);
    edges.push_back({pick(rng), v, std::round(w(rng)), 0});
  }
  std::uniform_int_distribution<int> any(0, n - 1);
  for (int k = 0; k < extra; ++k) {
    int a = any(rng), b = any(rng);
    if (a != b) edges.push_back({a, b, std::round(w(rng)), 0});
  }
  return AugmentedRoadGraph(road_nodes(n), edges);
}

SimpleGraph two_cliques(int k) {
  SimpleGraph g{2 * k, {}, {}};
  for (int side = 0; side < 2; ++side) {
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) g.edges.emplace_back(side * k + i, side * k + j);
    }
  }
  g.edges.emplace_back(k - 1, k);
  return g;
}

}  // namespace

TEST_CASE("voronoi cells match per-substation Dijkstra") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 8 + trial % 25;
    const AugmentedRoadGraph g = random_graph(rng, n, n / 2);
    std::uniform_int_distribution<int> any(0, n - 1);
    std::uniform_real_distribution<double> off(0.0, 30.0);
    std::vector<SubstationSeed> seeds;
    const int n_sub = 1 + trial % 4;
    for (int s = 0; s < n_sub; ++s) seeds.push_back({static_cast<Id>(10 * (n_sub - s)), any(rng), std::round(off(rng))});

    const PartitionMap map = voronoi_assign(g, seeds);
    std::vector<oracle::WeightedEdge> we;
    for (const auto& e : g.edges()) we.push_back({e.a, e.b, e.length_m});
    std::vector<std::vector<double>> d;
    for (const auto& s : seeds) d.push_back(oracle::dijkstra_dense(n, we, s.node, s.offset_m));
    for (int v = 0; v < n; ++v) {
      int best = 0;
      for (int s = 1; s < n_sub; ++s) {
        if (d[s][v] < d[best][v] || (d[s][v] == d[best][v] && seeds[s].substation < seeds[best].substation)) best = s;
      }
      CHECK(map.cell[v] == best);
      CHECK(map.network_distance_m[v] == doctest::Approx(d[best][v]).epsilon(1e-12));
    }
    CHECK(partition_violations(g, map).empty());
  }
}

TEST_CASE("equidistant node goes to the lower substation id") {
  const AugmentedRoadGraph g(road_nodes(3), {{0, 1, 5.0, 0}, {1, 2, 5.0, 0}});
  const std::vector<SubstationSeed> seeds{{9, 2, 0.0}, {4, 0, 0.0}};
  const PartitionMap map = voronoi_assign(g, seeds);
  CHECK(map.cell == std::vector<int>{1, 1, 0});
  CHECK(map.substation_ids[map.cell[1]] == 4);
}

TEST_CASE("unreachable nodes") {
  auto nodes = road_nodes(3);
  nodes.push_back({GraphNodeKind::Transformer, 5, at(0, 5), 2.0, 1});
  SUBCASE("road node stays unassigned") {
    const AugmentedRoadGraph g(nodes, {{0, 1, 5.0, 0}, {1, 3, 5.0, 0}});
    const PartitionMap map = voronoi_assign(g, std::vector<SubstationSeed>{{1, 0, 0.0}});
    CHECK(map.cell[2] == -1);
    CHECK(map.community[2] == -1);
    CHECK(partition_violations(g, map).empty());
  }
  SUBCASE("transformer is an error") {
    const AugmentedRoadGraph g(nodes, {{0, 1, 5.0, 0}, {1, 2, 5.0, 0}});
    CHECK_THROWS_AS(voronoi_assign(g, std::vector<SubstationSeed>{{1, 0, 0.0}}), ValidationError);
  }
}

TEST_CASE("edge betweenness matches all-pairs path counting") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4 + trial % 15;
    SimpleGraph g{n, {}, {}};
    std::uniform_int_distribution<int> any(0, n - 1);
    for (int k = 0; k < 2 * n; ++k) {
      int a = any(rng), b = any(rng);
      if (a != b) g.edges.emplace_back(a, b);
    }
    const auto got = edge_betweenness(g);
    const auto want = oracle::betweenness_by_pairs(n, g.edges);
    REQUIRE(got.size() == want.size());
    for (std::size_t e = 0; e < got.size(); ++e) CHECK(got[e] == doctest::Approx(want[e]).epsilon(1e-9));
  }
}

TEST_CASE("girvan-newman cuts the bridge between two cliques") {
  const SimpleGraph g = two_cliques(10);
  const auto eb = edge_betweenness(g);
  CHECK(eb.back() == doctest::Approx(100.0));
  const auto gn = girvan_newman(g, {10, std::numeric_limits<double>::infinity()});
  REQUIRE(gn.removed.size() == 1);
  CHECK(gn.removed[0] == std::pair<int, int>(9, 10));
  for (int v = 0; v < 20; ++v) CHECK(gn.label[v] == (v < 10 ? 0 : 1));

  SUBCASE("a component within limits is left alone") {
    CHECK(girvan_newman(g, {20, std::numeric_limits<double>::infinity()}).removed.empty());
  }
  SUBCASE("load limit also splits") {
    SimpleGraph loaded = g;
    loaded.load.assign(20, 1.0);
    const auto by_load = girvan_newman(loaded, {700, 10.0});
    CHECK(by_load.removed.size() == 1);
  }
  SUBCASE("single node above the load limit") {
    SimpleGraph loaded = g;
    loaded.load.assign(20, 1.0);
    loaded.load[3] = 50.0;
    CHECK_THROWS_AS(girvan_newman(loaded, {700, 10.0}), ValidationError);
  }
}

TEST_CASE("girvan-newman ties break on the smallest edge") {
  // A 6-cycle: every edge has equal betweenness.
  SimpleGraph g{6, {{5, 0}, {4, 5}, {3, 4}, {2, 3}, {1, 2}, {0, 1}}, {}};
  const auto gn = girvan_newman(g, {3, std::numeric_limits<double>::infinity()});
  REQUIRE(gn.removed.size() >= 2);
  CHECK(gn.removed[0] == std::pair<int, int>(0, 1));
  std::set<int> labels(gn.label.begin(), gn.label.end());
  CHECK(labels.size() == 2);
  for (int c : labels) CHECK(std::count(gn.label.begin(), gn.label.end(), c) <= 3);
}

TEST_CASE("girvan-newman meets the stop condition on random graphs") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 20 + trial;
    SimpleGraph g{n, {}, {}};
    std::uniform_int_distribution<int> any(0, n - 1);
    for (int v = 1; v < n; ++v) g.edges.emplace_back(std::uniform_int_distribution<int>(0, v - 1)(rng), v);
    for (int k = 0; k < n; ++k) {
      int a = any(rng), b = any(rng);
      if (a != b) g.edges.emplace_back(a, b);
    }
    const std::size_t cap = 4 + trial % 7;
    const auto gn = girvan_newman(g, {cap, std::numeric_limits<double>::infinity()});
    std::map<int, std::size_t> size;
    for (int v = 0; v < n; ++v) ++size[gn.label[v]];
    for (auto [c, s] : size) CHECK(s <= cap);
    // Labels follow the smallest member.
    int next = 0;
    for (int v = 0; v < n; ++v) {
      if (gn.label[v] == next) ++next;
      CHECK(gn.label[v] < next);
    }
  }
}

TEST_CASE("pipeline through partition on a generated scenario") {
  GeneratorOptions gen;
  gen.seed = 3;
  gen.n_res = 80;
  gen.n_sub = 2;
  gen.extent_km = 0.8;
  const Scenario sc = generate_scenario(gen);
  const LinkAssignment asg = build_assignment(sc);
  const TransformerCandidates cand = place_all_candidates(sc.roads, asg);
  std::vector<SecondaryNetwork> nets;
  for (const auto& p : build_secondary_problems(sc, asg, cand, {})) nets.push_back(solve_secondary(p));

  const AugmentedRoadGraph g = augment(sc.roads, nets);
  double total = 0.0;
  for (const auto& r : sc.residences) total += r.avg_demand;
  CHECK(g.total_demand() == doctest::Approx(total).epsilon(1e-9));

  std::size_t used = 0;
  for (const auto& net : nets) used += net.used_candidates.size();
  CHECK(g.nodes().size() == sc.roads.nodes().size() + used);
  CHECK(g.edges().size() == sc.roads.links().size() + used);

  // Sub-links telescope to the link length.
  std::map<Id, double> per_link;
  for (const auto& e : g.edges()) per_link[e.link] += e.length_m;
  for (const auto& l : sc.roads.links()) {
    CHECK(per_link[l.id] == doctest::Approx(geo::segment_length(sc.roads.segment(l))).epsilon(1e-12));
  }
  for (const auto& e : g.edges()) CHECK(e.length_m >= 0.0);

  const auto seeds = seed_substations(g, sc.roads, sc.substations);
  REQUIRE(seeds.size() == 2);
  PartitionMap map = voronoi_assign(g, seeds);
  split_communities(g, map, {25, std::numeric_limits<double>::infinity()});
  CHECK(partition_violations(g, map).empty());
  for (std::size_t c = 0; c < map.num_communities(); ++c) CHECK(map.members(static_cast<int>(c)).size() <= 25);
  for (std::size_t v = 0; v < g.nodes().size(); ++v) {
    if (map.cell[v] >= 0) CHECK(map.community_cell[map.community[v]] == map.cell[v]);
  }

  testing_support::TempDir dir("partition");
  write_partition_csv(g, map, dir.path() / "partition.csv");
  std::ifstream in(dir.path() / "partition.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "node_id,substation_id,community_id");
}

TEST_CASE("one transformer mid-link splits it in half") {
  const RoadNetwork roads({{1, at(0, 0)}, {2, at(100, 0)}, {3, at(100, 80)}}, {{10, 1, 2}, {11, 2, 3}});
  const geo::GeoPoint mid = geo::interpolate_along(roads.segment(10), 1)[0];
  const std::vector<UsedTransformer> used{{5, 10, mid, 3.5}};
  const AugmentedRoadGraph g = augment(roads, used);
  REQUIRE(g.nodes().size() == 4);
  REQUIRE(g.edges().size() == 3);
  const double half = geo::segment_length(roads.segment(10)) / 2;
  CHECK(g.edges()[0].length_m == doctest::Approx(half).epsilon(1e-9));
  CHECK(g.edges()[1].length_m == doctest::Approx(half).epsilon(1e-9));
  CHECK(g.nodes()[g.transformer_index(5)].demand_kw == 3.5);
  CHECK(g.total_demand() == 3.5);

  SUBCASE("a transformer off its link is an invariant failure") {
    const std::vector<UsedTransformer> off{{5, 10, at(50, 30), 1.0}};
    CHECK_THROWS_AS(augment(roads, off), InvariantError);
  }
}

TEST_CASE("secondary layer round trip") {
  auto p = fixtures::link_problem(120, 2);
  fixtures::add_residence(p, 20, 15, 1.5);
  fixtures::add_residence(p, 40, 15, 2.0);
  fixtures::add_residence(p, 95, -20, 0.7);
  const std::vector<SecondaryNetwork> nets{solve_secondary(p)};
  const SecondaryLayer layer = flatten(nets);
  CHECK(layer.lines.size() == 3);
  double served = 0.0;
  for (const auto& t : layer.transformers) served += t.demand_kw;
  CHECK(served == doctest::Approx(4.2).epsilon(1e-12));

  testing_support::TempDir dir("layer");
  write_secondary_layer(layer, dir.path() / "tx.csv", dir.path() / "lines.csv");
  const SecondaryLayer back = read_secondary_layer(dir.path() / "tx.csv", dir.path() / "lines.csv");
  REQUIRE(back.transformers.size() == layer.transformers.size());
  REQUIRE(back.lines.size() == layer.lines.size());
  for (std::size_t i = 0; i < layer.lines.size(); ++i) {
    CHECK(back.lines[i].from == layer.lines[i].from);
    CHECK(back.lines[i].from_transformer == layer.lines[i].from_transformer);
    CHECK(back.lines[i].flow_kw == layer.lines[i].flow_kw);
  }
  CHECK(back.transformers[0].location.lon == layer.transformers[0].location.lon);
}
