#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gridsynth/geo.hpp"

namespace gridsynth {

using Id = std::int64_t;

struct RoadLink {
  Id id = 0;
  Id u = 0;
  Id v = 0;
  int level = 5;  // importance level 1..5; carried through, not optimized on

  friend bool operator==(const RoadLink&, const RoadLink&) = default;
};

/// Undirected road graph. Construction validates ids, endpoints and levels.
class RoadNetwork {
 public:
  RoadNetwork() = default;
  RoadNetwork(std::map<Id, geo::GeoPoint> nodes, std::vector<RoadLink> links);

  const std::map<Id, geo::GeoPoint>& nodes() const { return nodes_; }
  const std::vector<RoadLink>& links() const { return links_; }

  const RoadLink& link(Id link_id) const;
  geo::Segment segment(const RoadLink& l) const { return geo::Segment(nodes_.at(l.u), nodes_.at(l.v)); }
  geo::Segment segment(Id link_id) const { return segment(link(link_id)); }
  geo::GeoPoint node(Id node_id) const { return nodes_.at(node_id); }

  friend bool operator==(const RoadNetwork& a, const RoadNetwork& b) {
    return a.nodes_ == b.nodes_ && a.links_ == b.links_;
  }

 private:
  std::map<Id, geo::GeoPoint> nodes_;
  std::vector<RoadLink> links_;
  std::map<Id, std::size_t> link_pos_;
};

struct Substation {
  Id id = 0;
  geo::GeoPoint location;

  friend bool operator==(const Substation&, const Substation&) = default;
};

struct Residence {
  Id id = 0;
  geo::GeoPoint location;
  std::vector<double> demand;  // hourly profile, kW
  double avg_demand = 0.0;     // kW, mean of `demand`

  friend bool operator==(const Residence&, const Residence&) = default;
};

struct Scenario {
  RoadNetwork roads;
  std::vector<Substation> substations;
  std::vector<Residence> residences;

  /// Throws ValidationError describing the first violated invariant.
  void validate() const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Arithmetic mean in index order; the same routine is used when generating
/// and when validating so the stored average matches bit for bit.
double profile_mean(const std::vector<double>& profile);

struct ScenarioPaths {
  std::filesystem::path roads;
  std::filesystem::path substations;
  std::filesystem::path residences;

  /// roads.csv, substations.csv and residences.csv inside `dir`.
  static ScenarioPaths in_directory(const std::filesystem::path& dir);
};

Scenario load_scenario(const ScenarioPaths& paths);
void write_scenario(const Scenario& scenario, const ScenarioPaths& paths);

enum class RoadStyle { Grid, RadialSuburb };

RoadStyle parse_road_style(const std::string& name);

struct GeneratorOptions {
  std::uint64_t seed = 1;
  std::size_t n_res = 500;
  std::size_t n_sub = 3;
  double extent_km = 2.1;
  RoadStyle style = RoadStyle::Grid;
  std::size_t grid_side = 0;  // nodes per side; 0 derives it from extent_km
  double jitter = 0.15;       // node displacement as a fraction of block length
};

/// Deterministic synthetic scenario: residences scattered within 60 m of
/// random links, average demands uniform in [0.3, 5.0] kW.
Scenario generate_scenario(const GeneratorOptions& options);

}  // namespace gridsynth
