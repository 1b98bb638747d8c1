#include "gridsynth/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gridsynth/errors.hpp"
#include "internal/csv.hpp"

namespace gridsynth {

geo::SpatialIndex index_roads(const RoadNetwork& roads, double padding_m) {
  std::vector<std::pair<std::int64_t, geo::Segment>> links;
  links.reserve(roads.links().size());
  for (const RoadLink& l : roads.links()) links.emplace_back(l.id, roads.segment(l));
  return geo::index_links(links, padding_m);
}

NearestLink nearest_link(geo::GeoPoint p, const geo::SpatialIndex& idx, const RoadNetwork& roads,
                         const MappingOptions& options) {
  double radius = std::max(idx.padding_m(), 1.0);
  NearestLink best{0, std::numeric_limits<double>::infinity()};
  for (int attempt = 0; attempt <= options.max_doublings; ++attempt, radius *= 2.0) {
    best = {0, std::numeric_limits<double>::infinity()};
    for (std::int64_t id : idx.query(geo::BBox::around(p, radius))) {
      const double d = geo::point_segment_distance(p, roads.segment(id));
      if (d < best.distance_m) best = {id, d};  // ids ascend, so ties keep the lower id
    }
    // Any link closer than `radius` intersects the query box, so the
    // shortlist minimum is global once it is within the radius.
    if (best.distance_m <= radius) break;
  }
  if (!(best.distance_m <= options.max_distance_m)) {
    std::ostringstream os;
    os << "no road link within " << options.max_distance_m << " m of (" << p.lon << ", " << p.lat << ")";
    throw ValidationError(os.str());
  }
  return best;
}

LinkAssignment build_assignment(const Scenario& scenario, const MappingOptions& options) {
  const geo::SpatialIndex idx = index_roads(scenario.roads, options.padding_m);
  LinkAssignment out;
  for (const Residence& r : scenario.residences) {
    NearestLink n;
    try {
      n = nearest_link(r.location, idx, scenario.roads, options);
    } catch (const ValidationError& e) {
      throw ValidationError("unmapped residence " + std::to_string(r.id) + ": " + e.what());
    }
    out.link_of[r.id] = n;
    out.residents[n.link].push_back(r.id);
  }
  for (auto& [link, ids] : out.residents) std::sort(ids.begin(), ids.end());
  return out;
}

std::vector<geo::GeoPoint> place_candidates(const geo::Segment& link, std::size_t n_mapped,
                                            double spacing_m, std::size_t rho) {
  if (!(spacing_m > 0.0) || rho == 0) {
    throw ValidationError("candidate spacing and residences per transformer must be positive");
  }
  const auto by_length = static_cast<std::size_t>(std::floor(geo::segment_length(link) / spacing_m));
  const std::size_t by_load = (n_mapped + rho - 1) / rho;
  return geo::interpolate_along(link, std::max<std::size_t>(1, std::min(by_length, by_load)));
}

std::size_t TransformerCandidates::size() const {
  std::size_t n = 0;
  for (const auto& [link, list] : by_link) n += list.size();
  return n;
}

TransformerCandidates place_all_candidates(const RoadNetwork& roads, const LinkAssignment& assignment,
                                           const MappingOptions& options) {
  TransformerCandidates out;
  Id next = 1;
  for (const auto& [link, residents] : assignment.residents) {
    auto& list = out.by_link[link];
    for (const geo::GeoPoint& p : place_candidates(roads.segment(link), residents.size(), options.spacing_m,
                                                   options.residences_per_transformer)) {
      list.push_back({next++, link, p});
    }
  }
  return out;
}

void write_assignment_csv(const LinkAssignment& assignment, const std::filesystem::path& path) {
  std::ofstream out = internal::open_for_write(path);
  out << "res_id,link_id,dist_m\n";
  for (const auto& [res, n] : assignment.link_of) {
    out << res << ',' << n.link << ',' << internal::format_double(n.distance_m) << '\n';
  }
}

LinkAssignment read_assignment_csv(const std::filesystem::path& path) {
  const internal::CsvTable t = internal::CsvTable::read(path, {"res_id", "link_id", "dist_m"});
  LinkAssignment out;
  for (std::size_t row = 0; row < t.rows(); ++row) {
    const Id res = internal::parse_int(t, row, "res_id");
    const NearestLink n{internal::parse_int(t, row, "link_id"), internal::parse_number(t, row, "dist_m")};
    if (!out.link_of.emplace(res, n).second) {
      throw ValidationError(t.where(row) + ": duplicate residence id " + std::to_string(res));
    }
    out.residents[n.link].push_back(res);
  }
  for (auto& [link, ids] : out.residents) std::sort(ids.begin(), ids.end());
  return out;
}

}  // namespace gridsynth
