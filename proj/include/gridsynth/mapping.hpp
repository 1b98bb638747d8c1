#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "gridsynth/geo.hpp"
#include "gridsynth/ingest.hpp"

namespace gridsynth {

struct MappingOptions {
  double padding_m = 100.0;          // link box padding and first query radius
  double max_distance_m = 5000.0;    // farther residences are an error
  int max_doublings = 6;
  double spacing_m = 50.0;           // candidate transformer spacing
  std::size_t residences_per_transformer = 8;
};

/// Quad-tree over every road link, padded by `padding_m`.
geo::SpatialIndex index_roads(const RoadNetwork& roads, double padding_m);

struct NearestLink {
  Id link = 0;
  double distance_m = 0.0;
};

/// Link minimizing point_segment_distance over all links (ties: lower id).
/// Shortlists come from the index; a shortlist is trusted only when its best
/// distance is within the query radius, otherwise the radius doubles.
/// Throws ValidationError when no link lies within `max_distance_m`.
NearestLink nearest_link(geo::GeoPoint p, const geo::SpatialIndex& idx, const RoadNetwork& roads,
                         const MappingOptions& options = {});

struct LinkAssignment {
  std::map<Id, NearestLink> link_of;          // residence -> link
  std::map<Id, std::vector<Id>> residents;    // link -> residences, ascending; empty links omitted
};

LinkAssignment build_assignment(const Scenario& scenario, const MappingOptions& options = {});

/// k = max(1, min(floor(length / spacing), ceil(n_mapped / rho))) points
/// spread evenly along the link.
std::vector<geo::GeoPoint> place_candidates(const geo::Segment& link, std::size_t n_mapped,
                                            double spacing_m, std::size_t rho);

struct TransformerCandidate {
  Id id = 0;
  Id link = 0;
  geo::GeoPoint location;
};

/// Candidates for every link with residents, numbered from 1 in link-id order.
struct TransformerCandidates {
  std::map<Id, std::vector<TransformerCandidate>> by_link;

  std::size_t size() const;
};

TransformerCandidates place_all_candidates(const RoadNetwork& roads, const LinkAssignment& assignment,
                                           const MappingOptions& options = {});

/// `res_id,link_id,dist_m`, one row per residence in id order.
void write_assignment_csv(const LinkAssignment& assignment, const std::filesystem::path& path);
LinkAssignment read_assignment_csv(const std::filesystem::path& path);

}  // namespace gridsynth
