#pragma once

#include <span>
#include <string>
#include <vector>

#include "gridsynth/ingest.hpp"
#include "gridsynth/milp.hpp"
#include "gridsynth/partition.hpp"
#include "gridsynth/secondary.hpp"

namespace gridsynth {

/// Conductor resistances and per-unit bases.
struct Electrical {
  double s_base_kva = 1000.0;
  double primary_kv = 12.47;
  double secondary_kv = 0.24;
  double primary_ohm_per_km = 0.33;
  double secondary_ohm_per_km = 0.52;

  double primary_z_base() const { return primary_kv * primary_kv * 1000.0 / s_base_kva; }
  double secondary_z_base() const { return secondary_kv * secondary_kv * 1000.0 / s_base_kva; }
  double to_pu(double kw) const { return kw / s_base_kva; }
  double to_kw(double pu) const { return pu * s_base_kva; }
};

struct PrimaryOptions {
  double line_capacity_kw = 400.0;     // f-bar
  double feeder_capacity_kw = 1000.0;  // s-bar
  double v_min = 0.95;
  double v_max = 1.05;
  Electrical electrical;
  /// Adds inequalities that every feasible forest satisfies (edge-to-node
  /// links, a root count, flow bounds by total demand, root-connectivity
  /// cuts). They tighten the relaxation without changing the optimum.
  bool strengthen = true;

  void validate() const;
};

struct PrimaryNode {
  GraphNodeKind kind = GraphNodeKind::Road;
  Id id = 0;
  geo::GeoPoint location;
  double demand_kw = 0.0;
  double substation_distance_m = 0.0;  // d_r for road nodes
};

struct PrimaryEdge {
  int a = 0;  // tail: positive flow runs a -> b
  int b = 0;
  double length_m = 0.0;
  double resistance_ohm = 0.0;
  Id link = 0;
};

/// One community: its road and transformer nodes (roads first, then
/// transformers) and the road (sub-)links among them.
struct PrimaryProblem {
  int community = 0;
  Id substation = 0;
  geo::GeoPoint substation_location;
  std::vector<PrimaryNode> nodes;
  std::vector<PrimaryEdge> edges;
  PrimaryOptions options;

  std::size_t num_roads() const;
  double resistance_pu(const PrimaryEdge& e) const { return e.resistance_ohm / options.electrical.primary_z_base(); }
  /// Connected, positive transformer demands, at least one road node.
  void validate() const;
};

/// One problem per community, in community order. w_e is the (sub-)link
/// length and d_r the geodesic distance from the cell's substation.
std::vector<PrimaryProblem> build_primary_problems(const AugmentedRoadGraph& graph, const PartitionMap& map,
                                                   std::span<const Substation> substations,
                                                   const PrimaryOptions& options);

/// Constraint families that can be lifted for infeasibility triage.
struct Relaxation {
  bool voltage = false;        // v bounds
  bool line_capacity = false;  // f-bar
  bool feeder_capacity = false;  // s-bar
};

struct PrimaryModel {
  milp::LinearModel model;
  milp::LazyCutOracle cycle_cuts;
  milp::CutSeparator root_cuts;  // empty unless options.strengthen
  std::vector<int> x, f;  // per edge; f in pu
  std::vector<int> y, z;  // per road node
  std::vector<int> v;     // per node, pu
};

/// Connectivity, radiality count, flow balance and LDF voltage rows with the
/// big-M coupling M = v_max - v_min. The oracle returns a subtour cut for
/// every component of the candidate that contains a cycle.
PrimaryModel build_primary_model(const PrimaryProblem& problem, const Relaxation& relax = {});

/// Selected edge, oriented away from the root.
struct PrimaryLine {
  int from = 0;
  int to = 0;
  int edge = 0;  // index into problem.edges
  double flow_kw = 0.0;
};

struct PrimarySolution {
  PrimaryProblem problem;
  std::vector<PrimaryLine> lines;
  std::vector<bool> selected;  // per road node (y)
  std::vector<bool> root;      // per road node (1 - z)
  std::vector<double> voltage; // per node; NaN for unselected road nodes
  double objective = 0.0;
  std::size_t lazy_cuts = 0;
  std::size_t nodes_explored = 0;
  bool proven_optimal = true;  // false when the node limit stopped the search
};

/// Optimal forest covering every transformer. On infeasibility, re-solves
/// with voltage, then line capacity, then feeder capacity relaxed and names
/// the first family whose removal restores feasibility.
PrimarySolution solve_primary(const PrimaryProblem& problem, const milp::MilpOptions& milp = {});

/// Every cycle of the selected edges as a list of edge indices.
std::vector<std::vector<int>> find_cycles(std::size_t n_nodes, const std::vector<std::pair<int, int>>& edges);

/// Radiality count, leaf kinds, voltage band, LDF residuals, conservation
/// and cycle freedom; empty when all hold.
std::vector<std::string> primary_violations(const PrimarySolution& s);

// --- Complete network -----------------------------------------------------

enum class NodeKind { Substation, Root, Transfer, Transformer, Residence };
enum class EdgeKind { Feeder, Primary, Secondary };

std::string to_string(NodeKind k);
std::string to_string(EdgeKind k);
NodeKind parse_node_kind(const std::string& s);
EdgeKind parse_edge_kind(const std::string& s);

struct NetNode {
  NodeKind kind = NodeKind::Substation;
  Id id = 0;
  geo::GeoPoint location;
  double demand_kw = 0.0;
  double voltage_pu = 1.0;

  /// `sub:N`, `road:N`, `tx:N` or `res:N`.
  std::string label() const;
};

struct NetEdge {
  EdgeKind kind = EdgeKind::Primary;
  int from = 0;  // parent side
  int to = 0;
  double length_m = 0.0;
  double resistance_ohm = 0.0;
  double capacity_kw = 0.0;
  double flow_kw = 0.0;
};

struct DistributionNetwork {
  std::vector<NetNode> nodes;
  std::vector<NetEdge> edges;
  Electrical electrical;

  /// Index of the node with this label, or -1.
  int find(const std::string& label) const;
  /// Resistance in pu on the base of the edge's voltage level.
  double resistance_pu(const NetEdge& e) const;
};

struct StitchCapacities {
  double feeder_kw = 1000.0;
  double primary_kw = 400.0;
  double secondary_kw = 100.0;
};

/// Substations, feeders of length d_r to every root, primary trees and the
/// secondary layer. Throws InvariantError for a used transformer absent from
/// every primary tree.
DistributionNetwork stitch(const Scenario& scenario, std::span<const PrimarySolution> primary,
                           const SecondaryLayer& secondary, const StitchCapacities& capacities,
                           const Electrical& electrical);

/// Forest rooted at substations, one parent per node, no road leaves, every
/// residence reached; empty when all hold.
std::vector<std::string> network_violations(const DistributionNetwork& net);

}  // namespace gridsynth
