#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gridsynth/geo.hpp"
#include "gridsynth/ingest.hpp"
#include "gridsynth/mapping.hpp"
#include "gridsynth/milp.hpp"

namespace gridsynth {

struct DelaunayResult {
  /// Undirected edges (i < j) over input indices, ascending.
  std::vector<std::pair<int, int>> edges;
  /// Triangles (counter-clockwise) over input indices; empty when collinear.
  std::vector<std::array<int, 3>> triangles;
  /// (duplicate, representative) for points that coincide with an earlier one.
  std::vector<std::pair<int, int>> duplicates;
  bool collinear = false;
};

/// Bowyer-Watson triangulation in a local plane. Collinear inputs yield the
/// chain through consecutive points. A duplicate point is joined to its
/// representative and inherits the representative's edges.
DelaunayResult delaunay(std::span<const geo::GeoPoint> points);

struct SecondaryOptions {
  double lambda_m = 50.0;      // penalty per unit of road crossing
  double capacity_kw = 100.0;  // per secondary conductor
};

struct SecondaryResidence {
  Id id = 0;
  geo::GeoPoint location;
  double demand_kw = 0.0;
};

/// One road link with its mapped residences and candidate transformers.
/// Local node indices: residences first, then candidates.
struct SecondaryProblem {
  Id link_id = 0;
  geo::Segment link;
  std::vector<SecondaryResidence> residences;
  std::vector<TransformerCandidate> candidates;
  SecondaryOptions options;

  std::size_t num_nodes() const { return residences.size() + candidates.size(); }
  bool is_candidate(int node) const { return node >= static_cast<int>(residences.size()); }
  geo::GeoPoint location(int node) const;
};

/// Per-link problems for every link with residents, in link-id order.
std::vector<SecondaryProblem> build_secondary_problems(const Scenario& scenario,
                                                       const LinkAssignment& assignment,
                                                       const TransformerCandidates& candidates,
                                                       const SecondaryOptions& options);

struct CandidateEdge {
  int u = 0;  // a candidate edge has the candidate here
  int v = 0;
  double length_m = 0.0;
  int crossing = 0;  // 0 same side, 1 touches the link, 2 opposite sides
  double weight = 0.0;
};

/// Delaunay edges over residences and candidates, weighted by length plus
/// lambda times the crossing count; candidate-candidate edges are dropped.
std::vector<CandidateEdge> build_candidate_edges(const SecondaryProblem& problem);

/// Crossing count of an edge between two nodes relative to the link.
int crossing_count(const SecondaryProblem& problem, int a, int b);

struct SecondaryModel {
  milp::LinearModel model;
  std::vector<CandidateEdge> edges;
  std::vector<int> x;  // edge selection binaries
  std::vector<int> f;  // edge flows (kW), positive from u to v
};

/// Degree, balance, capacity and edge-count constraints; objective w'x.
SecondaryModel build_secondary_model(const SecondaryProblem& problem, std::vector<CandidateEdge> edges);

/// Selected edge, oriented from the transformer side so the flow is >= 0.
struct SecondaryEdge {
  int from = 0;
  int to = 0;
  double length_m = 0.0;
  double weight = 0.0;
  double flow_kw = 0.0;
};

struct SecondaryNetwork {
  SecondaryProblem problem;
  std::vector<SecondaryEdge> edges;
  std::vector<int> used_candidates;     // local node indices, ascending
  std::vector<int> root_of;             // per residence: its transformer node
  double objective = 0.0;
  std::vector<std::string> warnings;

  /// Sum of residence demands served by transformer node `t`.
  double transformer_demand(int t) const;
};

/// Solves the per-link MILP. Throws InfeasibleError when no forest of
/// starlike trees meets the capacity, InvariantError if a solution breaks
/// the forest structure.
SecondaryNetwork solve_secondary(const SecondaryProblem& problem, const milp::MilpOptions& milp = {});

/// Graph for the component test: residences 0..n_res-1, transformers after.
struct SecondaryTopology {
  std::size_t n_residences = 0;
  std::size_t n_transformers = 0;
  std::vector<std::pair<int, int>> edges;
};

/// Number of components over residences and transformers with degree >= 1.
std::size_t used_component_count(const SecondaryTopology& g);
std::size_t used_transformer_count(const SecondaryTopology& g);

/// True iff the component count equals the number of used transformers and
/// `flows` (positive from first to second endpoint) balance `demands` at
/// every residence within 1e-9 kW.
bool check_components(const SecondaryTopology& g, std::span<const double> flows,
                      std::span<const double> demands);

/// Structural checks on a solved network; empty when all hold.
std::vector<std::string> secondary_violations(const SecondaryNetwork& net);

// --- Secondary layer as consumed by later stages --------------------------

struct UsedTransformer {
  Id id = 0;
  Id link = 0;
  geo::GeoPoint location;
  double demand_kw = 0.0;  // served residence demand
};

/// Secondary conductor; `from` is a transformer when `from_transformer`,
/// otherwise a residence. `to` is always a residence.
struct SecondaryLine {
  Id link = 0;
  bool from_transformer = false;
  Id from = 0;
  Id to = 0;
  double length_m = 0.0;
  double flow_kw = 0.0;
};

/// Every solved link flattened to global ids, transformers by id.
struct SecondaryLayer {
  std::vector<UsedTransformer> transformers;
  std::vector<SecondaryLine> lines;
};

SecondaryLayer flatten(std::span<const SecondaryNetwork> networks);

/// `tx_id,link_id,lon,lat,demand_kw` and `link_id,from,to,length_m,flow_kw`
/// with endpoints written as `tx:N` / `res:N`.
void write_secondary_layer(const SecondaryLayer& layer, const std::filesystem::path& transformers_csv,
                           const std::filesystem::path& lines_csv);
SecondaryLayer read_secondary_layer(const std::filesystem::path& transformers_csv,
                                    const std::filesystem::path& lines_csv);

}  // namespace gridsynth
