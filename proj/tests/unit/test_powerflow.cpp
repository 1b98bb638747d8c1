#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "gridsynth/errors.hpp"
#include "gridsynth/powerflow.hpp"
#include "support/ldf_oracle.hpp"
#include "support/primary_fixtures.hpp"
#include "support/temp_dir.hpp"

using namespace gridsynth;

namespace {

// 12.47 kV and 0.24 kV on a 1 MVA base.
constexpr double kPrimaryZBase = 12.47 * 12.47;
constexpr double kSecondaryZBase = 0.0576;

DistributionNetwork random_forest(std::mt19937_64& rng, int n, int n_sub, double demand_scale = 1.0) {
  DistributionNetwork net;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = 0; s < n_sub; ++s) net.nodes.push_back({NodeKind::Substation, s + 1, fixtures::at(s * 1000.0, 0), 0.0, 1.0});
  for (int i = n_sub; i < n; ++i) {
    const int parent = std::uniform_int_distribution<int>(0, i - 1)(rng);
    const bool under_sub = net.nodes[parent].kind == NodeKind::Substation;
    const NodeKind kind = under_sub ? NodeKind::Root
                                    : std::array{NodeKind::Transfer, NodeKind::Transformer, NodeKind::Residence}[i % 3];
    const double demand = kind == NodeKind::Residence || kind == NodeKind::Transformer ? 20.0 * u(rng) * demand_scale : 0.0;
    net.nodes.push_back({kind, i + 1, fixtures::at(u(rng) * 500, u(rng) * 500), demand, 1.0});
    NetEdge e;
    e.kind = under_sub ? EdgeKind::Feeder : (u(rng) < 0.5 ? EdgeKind::Primary : EdgeKind::Secondary);
    e.resistance_ohm = e.kind == EdgeKind::Feeder ? 0.0 : e.kind == EdgeKind::Primary ? 2.0 * u(rng) : 0.01 * u(rng);
    e.length_m = 100.0 * u(rng);
    e.capacity_kw = 1000.0;
    const bool flip = u(rng) < 0.4;
    e.from = flip ? i : parent;
    e.to = flip ? parent : i;
    net.edges.push_back(e);
  }
  return net;
}

oracle::LdfResult oracle_of(const DistributionNetwork& net) {
  std::vector<oracle::Branch> br;
  for (const NetEdge& e : net.edges) {
    const double zb = e.kind == EdgeKind::Secondary ? kSecondaryZBase : kPrimaryZBase;
    br.push_back({e.from, e.to, e.resistance_ohm / zb});
  }
  std::vector<double> p;
  std::vector<bool> slack;
  for (const NetNode& v : net.nodes) {
    p.push_back(v.demand_kw / 1000.0);
    slack.push_back(v.kind == NodeKind::Substation);
  }
  return oracle::ldf_linear(net.nodes.size(), br, p, slack);
}

bool mentions(const std::vector<std::string>& msgs, const std::string& needle) {
  return std::any_of(msgs.begin(), msgs.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST_CASE("LDF matches the dense linear-system solution on random forests") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const DistributionNetwork net = random_forest(rng, 5 + trial % 36, 1 + trial % 3);
    const FlowSolution got = run_ldf(net);
    const oracle::LdfResult want = oracle_of(net);
    CAPTURE(trial);
    for (std::size_t i = 0; i < net.nodes.size(); ++i) CHECK(got.voltage_pu[i] == doctest::Approx(want.v[i]).epsilon(1e-9));
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
      CHECK(got.flow_kw[e] / 1000.0 == doctest::Approx(want.f[e]).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("hand-computed chain") {
  DistributionNetwork net;
  net.nodes.push_back({NodeKind::Substation, 1, fixtures::at(0, 0), 0.0, 1.0});
  net.nodes.push_back({NodeKind::Root, 2, fixtures::at(100, 0), 0.0, 1.0});
  net.nodes.push_back({NodeKind::Transformer, 3, fixtures::at(200, 0), 0.0, 1.0});
  net.nodes.push_back({NodeKind::Residence, 4, fixtures::at(210, 0), 10.0, 1.0});
  net.edges.push_back({EdgeKind::Feeder, 0, 1, 100.0, 0.0, 1000.0, 0.0});
  net.edges.push_back({EdgeKind::Primary, 1, 2, 100.0, 1.5550090, 400.0, 0.0});
  net.edges.push_back({EdgeKind::Secondary, 2, 3, 10.0, 0.0052, 100.0, 0.0});
  const FlowSolution s = run_ldf(net);
  CHECK(s.voltage_pu[1] == 1.0);
  // 1.555009 / 155.5009 = 0.01 pu at 0.01 pu flow.
  CHECK(s.voltage_pu[2] == doctest::Approx(1.0 - 1e-4).epsilon(1e-12));
  CHECK(s.voltage_pu[3] == doctest::Approx(1.0 - 1e-4 - 0.0052 / 0.0576 * 0.01).epsilon(1e-12));
  for (double f : s.flow_kw) CHECK(f == doctest::Approx(10.0));
  CHECK(s.loading[2] == doctest::Approx(0.1));
  const OperationalReport rep = check_operational(net, s, 0.95, 1.05);
  CHECK(rep.violations.empty());
  CHECK(rep.max_leaf_secondary_loading == doctest::Approx(0.1));
  CHECK(rep.max_feeder_loading == doctest::Approx(0.01));
}

TEST_CASE("scaled demand drives voltages out of band") {
  std::mt19937_64 rng(5);
  DistributionNetwork net = random_forest(rng, 30, 1);
  const FlowSolution base = run_ldf(net);
  for (NetNode& v : net.nodes) v.demand_kw *= 100.0;
  const FlowSolution heavy = run_ldf(net);
  const OperationalReport rep = check_operational(net, heavy, 0.95, 1.05);
  CHECK(rep.min_voltage < 0.95);
  CHECK(mentions(rep.violations, "outside [0.95, 1.05]"));
  // Drops scale linearly with demand.
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    CHECK(1.0 - heavy.voltage_pu[i] == doctest::Approx(100.0 * (1.0 - base.voltage_pu[i])).epsilon(1e-9).scale(1e-12));
  }
}

TEST_CASE("voltages never rise away from the substation") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const DistributionNetwork net = random_forest(rng, 40, 2);
    const FlowSolution s = run_ldf(net);
    CHECK_FALSE(mentions(check_operational(net, s, 0.0, 2.0).violations, "rises"));
  }
}

TEST_CASE("LDF rejects cycles and unreachable nodes") {
  std::mt19937_64 rng(3);
  DistributionNetwork net = random_forest(rng, 8, 1);
  SUBCASE("cycle") {
    net.edges.push_back({EdgeKind::Primary, 3, 5, 10.0, 0.1, 400.0, 0.0});
    CHECK_THROWS_WITH_AS(run_ldf(net), doctest::Contains("cycle"), ValidationError);
  }
  SUBCASE("island") {
    net.nodes.push_back({NodeKind::Residence, 99, fixtures::at(0, 0), 1.0, 1.0});
    CHECK_THROWS_WITH_AS(run_ldf(net), doctest::Contains("res:99"), ValidationError);
  }
}

TEST_CASE("LDF on a stitched network reproduces the MILP voltages") {
  Scenario sc;
  sc.substations.push_back({1, fixtures::at(-300, 0)});
  std::mt19937_64 rng(41);
  PrimaryProblem p = fixtures::random_community(rng, 4, 3, 1, 0.2);
  p.substation = 1;
  SecondaryLayer layer;
  Id next_res = 1;
  for (const PrimaryNode& n : p.nodes) {
    if (n.kind != GraphNodeKind::Transformer) continue;
    layer.transformers.push_back({n.id, 0, n.location, n.demand_kw});
    Residence r;
    r.id = next_res++;
    r.location = n.location;
    r.avg_demand = n.demand_kw;
    r.demand = std::vector<double>(24, n.demand_kw);
    sc.residences.push_back(r);
    layer.lines.push_back({0, true, n.id, r.id, 15.0, n.demand_kw});
  }
  const std::vector<PrimarySolution> prim{solve_primary(p)};
  const DistributionNetwork net = stitch(sc, prim, layer, {}, {});
  const FlowSolution s = run_ldf(net);
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    if (std::isnan(prim[0].voltage[i])) continue;
    const std::string label = (p.nodes[i].kind == GraphNodeKind::Road ? "road:" : "tx:") + std::to_string(p.nodes[i].id);
    const int k = net.find(label);
    REQUIRE(k >= 0);
    CHECK(s.voltage_pu[k] == doctest::Approx(prim[0].voltage[i]).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("compare is zero on identical networks and local under a perturbation") {
  std::mt19937_64 rng(12);
  const DistributionNetwork a = random_forest(rng, 40, 2);
  const ComparisonReport same = compare(a, a);
  CHECK(same.max_abs_deviation == 0.0);
  CHECK(same.fraction_within_1pct == 1.0);
  CHECK(same.length_a_m == same.length_b_m);

  // Raise the resistance of one non-feeder edge and find the nodes below it.
  DistributionNetwork b = a;
  const FlowSolution fa = run_ldf(a);
  std::size_t target = 0;
  double best = -1.0;
  for (std::size_t e = 0; e < a.edges.size(); ++e) {
    if (a.edges[e].kind != EdgeKind::Feeder && std::abs(fa.flow_kw[e]) > best) {
      best = std::abs(fa.flow_kw[e]);
      target = e;
    }
  }
  REQUIRE(a.edges[target].kind != EdgeKind::Feeder);
  b.edges[target].resistance_ohm += 0.5;
  std::vector<bool> below(a.nodes.size(), false);
  {
    std::vector<std::vector<int>> kids(a.nodes.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
      const int e = fa.parent_edge[i];
      if (e >= 0) kids[a.edges[e].from == static_cast<int>(i) ? a.edges[e].to : a.edges[e].from].push_back(static_cast<int>(i));
    }
    std::vector<int> stack{fa.flow_kw[target] >= 0 ? a.edges[target].to : a.edges[target].from};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      below[v] = true;
      for (int c : kids[v]) stack.push_back(c);
    }
  }
  const ComparisonReport rep = compare(a, b);
  std::size_t k = 0, moved = 0;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    if (a.nodes[i].kind != NodeKind::Residence) continue;
    REQUIRE(rep.residences[k] == a.nodes[i].id);
    if (below[i]) {
      CHECK(rep.deviation_pu[k] > 0.0);
      ++moved;
    } else {
      CHECK(rep.deviation_pu[k] == 0.0);
    }
    ++k;
  }
  CHECK(moved >= 2);
  CHECK(moved < rep.residences.size());

  DistributionNetwork c = a;
  c.nodes.push_back({NodeKind::Residence, 999, fixtures::at(0, 0), 1.0, 1.0});
  c.edges.push_back({EdgeKind::Secondary, 0, static_cast<int>(c.nodes.size() - 1), 5.0, 0.001, 100.0, 0.0});
  CHECK_THROWS_AS(compare(a, c), ValidationError);
}

TEST_CASE("log histogram bins") {
  const std::vector<double> values{0.0, 0.5, 1.0, 2.0, 9.9, 10.0, 50.0, 1e9};
  const Histogram h = log_histogram(values, 1.0, 100.0, 1);
  REQUIRE(h.edges.size() == 3);
  CHECK(h.edges[1] == doctest::Approx(10.0));
  // [.., 10] holds 0, 0.5, 1, 2, 9.9, 10; (10, ..] holds 50 and 1e9.
  CHECK(h.counts == std::vector<std::size_t>{6, 2});
  CHECK_THROWS_AS(log_histogram(values, 0.0, 1.0, 4), ValidationError);
}

TEST_CASE("power-flow artifacts") {
  std::mt19937_64 rng(2);
  const DistributionNetwork net = random_forest(rng, 12, 1);
  const FlowSolution s = run_ldf(net);
  testing_support::TempDir dir("powerflow");
  write_voltage_csv(net, s, dir / "voltages.csv");
  write_flow_csv(net, s, dir / "flows.csv");
  write_histogram_json(net, s, dir / "hist.json");
  std::ifstream v(dir / "voltages.csv"), f(dir / "flows.csv"), h(dir / "hist.json");
  std::string line;
  std::getline(v, line);
  CHECK(line == "node_id,kind,voltage_pu");
  std::getline(v, line);
  CHECK(line.rfind("sub:1,substation,1", 0) == 0);
  std::getline(f, line);
  CHECK(line == "edge_id,kind,flow_kw,loading");
  const auto j = nlohmann::json::parse(h);
  std::size_t total = 0;
  for (auto c : j["flow_kw"]["counts"]) total += c.get<std::size_t>();
  CHECK(total == net.edges.size());
  total = 0;
  for (auto c : j["voltage_pu"]["counts"]) total += c.get<std::size_t>();
  CHECK(total == net.nodes.size());
}
