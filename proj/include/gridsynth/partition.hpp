#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "gridsynth/ingest.hpp"
#include "gridsynth/mapping.hpp"
#include "gridsynth/secondary.hpp"

namespace gridsynth {

enum class GraphNodeKind { Road, Transformer };

struct GraphNode {
  GraphNodeKind kind = GraphNodeKind::Road;
  Id id = 0;  // road node id or transformer candidate id
  geo::GeoPoint location;
  double demand_kw = 0.0;
  Id link = 0;  // host link of a transformer
};

struct GraphEdge {
  int a = 0;
  int b = 0;
  double length_m = 0.0;
  Id link = 0;  // road link this (sub-)link belongs to
};

/// Road graph with used transformers spliced into their host links.
/// Node order: road nodes by id, then transformers by id.
class AugmentedRoadGraph {
 public:
  AugmentedRoadGraph() = default;
  AugmentedRoadGraph(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges);

  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  /// (neighbour, edge index) pairs, in edge order.
  const std::vector<std::pair<int, int>>& neighbours(int node) const { return adj_[node]; }
  int road_index(Id road_id) const;         // -1 when absent
  int transformer_index(Id tx_id) const;    // -1 when absent
  double total_demand() const;

 private:
  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<std::pair<int, int>>> adj_;
  std::map<Id, int> road_pos_, tx_pos_;
};

/// Splices every used transformer into its link and attaches its served
/// demand. Sub-link lengths telescope to the link length.
AugmentedRoadGraph augment(const RoadNetwork& roads, std::span<const UsedTransformer> transformers);
AugmentedRoadGraph augment(const RoadNetwork& roads, std::span<const SecondaryNetwork> secondary);

struct SubstationSeed {
  Id substation = 0;
  int node = 0;           // road node where the substation attaches
  double offset_m = 0.0;  // substation to that node
};

/// Each substation attaches at the nearer endpoint of its nearest link.
std::vector<SubstationSeed> seed_substations(const AugmentedRoadGraph& graph, const RoadNetwork& roads,
                                             std::span<const Substation> substations,
                                             const MappingOptions& options = {});

struct PartitionMap {
  std::vector<Id> substation_ids;
  std::vector<SubstationSeed> seeds;
  std::vector<int> cell;                    // node -> substation position; -1 if unreachable
  std::vector<double> network_distance_m;   // along roads, including the seed offset
  std::vector<int> community;               // node -> community; -1 if unassigned
  std::vector<int> community_cell;          // community -> substation position

  std::size_t num_communities() const { return community_cell.size(); }
  std::vector<int> members(int community_id) const;
};

/// Multi-source Dijkstra on (distance, substation id) labels. Unreachable
/// road nodes stay unassigned; an unreachable transformer is an error.
/// Every community starts as the whole cell.
PartitionMap voronoi_assign(const AugmentedRoadGraph& graph, std::span<const SubstationSeed> seeds);

/// Plain undirected graph for community detection.
struct SimpleGraph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> load;  // per node; may be empty
};

/// Exact shortest-path edge betweenness (unweighted, unordered pairs).
std::vector<double> edge_betweenness(const SimpleGraph& g);

struct CommunityStop {
  std::size_t max_nodes = 700;
  double max_load_kw = std::numeric_limits<double>::infinity();
};

struct GirvanNewmanResult {
  std::vector<int> label;  // components numbered by their smallest node
  std::vector<std::pair<int, int>> removed;
};

/// Removes the highest-betweenness edge of an oversized component (ties:
/// lexicographically smallest edge) until every component meets `stop`.
GirvanNewmanResult girvan_newman(const SimpleGraph& g, const CommunityStop& stop);

/// Splits each Voronoi cell into communities with girvan_newman. A community
/// without road nodes is merged into its lowest-labelled neighbour.
void split_communities(const AugmentedRoadGraph& graph, PartitionMap& map, const CommunityStop& stop);

/// Connectivity of every cell and community; empty when all hold.
std::vector<std::string> partition_violations(const AugmentedRoadGraph& graph, const PartitionMap& map);

/// Graph node label: "road:N" or "tx:N".
std::string node_label(const GraphNode& n);

/// `node_id,substation_id,community_id`, one row per assigned node.
void write_partition_csv(const AugmentedRoadGraph& graph, const PartitionMap& map,
                         const std::filesystem::path& path);
/// Recomputes the Voronoi cells from `seeds` and takes communities from the
/// file. Rows must cover every assigned node and agree with its cell;
/// community ids must run 0..K-1.
PartitionMap read_partition_csv(const AugmentedRoadGraph& graph, std::span<const SubstationSeed> seeds,
                                const std::filesystem::path& path);

}  // namespace gridsynth
