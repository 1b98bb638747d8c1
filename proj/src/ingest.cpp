#include "gridsynth/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "gridsynth/errors.hpp"
#include "internal/csv.hpp"

namespace gridsynth {

RoadNetwork::RoadNetwork(std::map<Id, geo::GeoPoint> nodes, std::vector<RoadLink> links)
    : nodes_(std::move(nodes)), links_(std::move(links)) {
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const RoadLink& l = links_[i];
    std::ostringstream where;
    where << "link " << l.id << ": ";
    if (!link_pos_.emplace(l.id, i).second) throw ValidationError(where.str() + "duplicate link id");
    if (!nodes_.contains(l.u) || !nodes_.contains(l.v)) {
      throw ValidationError(where.str() + "dangling endpoint");
    }
    if (l.u == l.v) throw ValidationError(where.str() + "self-loop");
    if (nodes_.at(l.u) == nodes_.at(l.v)) throw ValidationError(where.str() + "zero-length link");
    if (l.level < 1 || l.level > 5) throw ValidationError(where.str() + "level must be in 1..5");
  }
}

const RoadLink& RoadNetwork::link(Id link_id) const {
  auto it = link_pos_.find(link_id);
  if (it == link_pos_.end()) {
    throw ValidationError("unknown link id " + std::to_string(link_id));
  }
  return links_[it->second];
}

double profile_mean(const std::vector<double>& profile) {
  double sum = 0.0;
  for (double v : profile) sum += v;
  return profile.empty() ? 0.0 : sum / static_cast<double>(profile.size());
}

void Scenario::validate() const {
  if (substations.empty()) throw ValidationError("scenario has no substations");
  if (residences.empty()) throw ValidationError("scenario has no residences");
  if (roads.links().empty()) throw ValidationError("scenario has no road links");
  std::set<Id> seen;
  for (const auto& s : substations) {
    if (!seen.insert(s.id).second) {
      throw ValidationError("duplicate substation id " + std::to_string(s.id));
    }
  }
  seen.clear();
  for (const auto& r : residences) {
    const std::string where = "residence " + std::to_string(r.id) + ": ";
    if (!seen.insert(r.id).second) throw ValidationError(where + "duplicate id");
    if (!(r.avg_demand > 0.0) || !std::isfinite(r.avg_demand)) {
      throw ValidationError(where +
                            "average demand must be strictly positive (power-balance radiality "
                            "requires every residence to draw load)");
    }
    if (r.demand.empty()) throw ValidationError(where + "empty demand profile");
    for (double h : r.demand) {
      if (!std::isfinite(h) || h < 0.0) throw ValidationError(where + "invalid hourly demand");
    }
    const double mean = profile_mean(r.demand);
    if (std::abs(mean - r.avg_demand) > 1e-9 * std::max(1.0, r.avg_demand)) {
      throw ValidationError(where + "average demand does not match the hourly profile mean");
    }
  }
}

ScenarioPaths ScenarioPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "roads.csv", dir / "substations.csv", dir / "residences.csv"};
}

namespace {

using internal::CsvTable;

using internal::parse_int;
using internal::parse_number;

geo::GeoPoint parse_point(const CsvTable& t, std::size_t row, const std::string& lon_col,
                          const std::string& lat_col) {
  const double lon = parse_number(t, row, lon_col);
  const double lat = parse_number(t, row, lat_col);
  try {
    return geo::GeoPoint(lon, lat);
  } catch (const ValidationError& e) {
    throw ValidationError(t.where(row) + ": " + e.what());
  }
}

RoadNetwork load_roads(const std::filesystem::path& path) {
  const CsvTable t = CsvTable::read(path, {"link_id", "u_id", "v_id", "u_lon", "u_lat", "v_lon", "v_lat", "level"});
  std::map<Id, geo::GeoPoint> nodes;
  std::vector<RoadLink> links;
  std::set<Id> link_ids;
  auto add_node = [&](std::size_t row, Id id, const std::string& lon_col, const std::string& lat_col) {
    if (t.field(row, lon_col).empty() || t.field(row, lat_col).empty()) {
      throw ValidationError(t.where(row) + ": dangling link endpoint " + std::to_string(id) +
                            " (missing coordinates)");
    }
    const geo::GeoPoint p = parse_point(t, row, lon_col, lat_col);
    auto [it, inserted] = nodes.emplace(id, p);
    if (!inserted && !(it->second == p)) {
      throw ValidationError(t.where(row) + ": node " + std::to_string(id) +
                            " has coordinates inconsistent with an earlier row");
    }
  };
  for (std::size_t row = 0; row < t.rows(); ++row) {
    RoadLink l;
    l.id = parse_int(t, row, "link_id");
    l.u = parse_int(t, row, "u_id");
    l.v = parse_int(t, row, "v_id");
    l.level = static_cast<int>(parse_int(t, row, "level"));
    if (!link_ids.insert(l.id).second) {
      throw ValidationError(t.where(row) + ": duplicate link id " + std::to_string(l.id));
    }
    if (l.u == l.v) throw ValidationError(t.where(row) + ": self-loop link");
    add_node(row, l.u, "u_lon", "u_lat");
    add_node(row, l.v, "v_lon", "v_lat");
    links.push_back(l);
  }
  try {
    return RoadNetwork(std::move(nodes), std::move(links));
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

std::vector<Substation> load_substations(const std::filesystem::path& path) {
  const CsvTable t = CsvTable::read(path, {"sub_id", "lon", "lat"});
  std::vector<Substation> out;
  std::set<Id> ids;
  for (std::size_t row = 0; row < t.rows(); ++row) {
    Substation s{parse_int(t, row, "sub_id"), parse_point(t, row, "lon", "lat")};
    if (!ids.insert(s.id).second) {
      throw ValidationError(t.where(row) + ": duplicate substation id " + std::to_string(s.id));
    }
    out.push_back(s);
  }
  return out;
}

std::vector<Residence> load_residences(const std::filesystem::path& path) {
  const CsvTable t = CsvTable::read(path, {"res_id", "lon", "lat", "p_avg_kw"});
  std::vector<std::string> hour_cols;
  for (int h = 0; h < 24; ++h) hour_cols.push_back("h" + std::to_string(h));
  const std::size_t present = static_cast<std::size_t>(
      std::count_if(hour_cols.begin(), hour_cols.end(), [&](const auto& c) { return t.has_column(c); }));
  if (present != 0 && present != hour_cols.size()) {
    throw ValidationError(path.string() + ": hourly profile needs all of h0..h23");
  }
  std::vector<Residence> out;
  std::set<Id> ids;
  for (std::size_t row = 0; row < t.rows(); ++row) {
    Residence r;
    r.id = parse_int(t, row, "res_id");
    r.location = parse_point(t, row, "lon", "lat");
    r.avg_demand = parse_number(t, row, "p_avg_kw");
    if (!ids.insert(r.id).second) {
      throw ValidationError(t.where(row) + ": duplicate residence id " + std::to_string(r.id));
    }
    if (!(r.avg_demand > 0.0)) {
      throw ValidationError(t.where(row) +
                            ": p_avg_kw must be strictly positive (power-balance radiality "
                            "requires every residence to draw load)");
    }
    if (present != 0) {
      for (const auto& c : hour_cols) r.demand.push_back(parse_number(t, row, c));
      const double mean = profile_mean(r.demand);
      if (std::abs(mean - r.avg_demand) > 1e-9 * std::max(1.0, r.avg_demand)) {
        throw ValidationError(t.where(row) + ": p_avg_kw does not match the mean of h0..h23");
      }
    } else {
      r.demand.assign(24, r.avg_demand);
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

Scenario load_scenario(const ScenarioPaths& paths) {
  Scenario s{load_roads(paths.roads), load_substations(paths.substations),
             load_residences(paths.residences)};
  s.validate();
  return s;
}

void write_scenario(const Scenario& scenario, const ScenarioPaths& paths) {
  using internal::format_double;
  {
    std::ofstream out = internal::open_for_write(paths.roads);
    out << "link_id,u_id,v_id,u_lon,u_lat,v_lon,v_lat,level\n";
    for (const auto& l : scenario.roads.links()) {
      const geo::GeoPoint u = scenario.roads.node(l.u);
      const geo::GeoPoint v = scenario.roads.node(l.v);
      out << l.id << ',' << l.u << ',' << l.v << ',' << format_double(u.lon) << ','
          << format_double(u.lat) << ',' << format_double(v.lon) << ',' << format_double(v.lat)
          << ',' << l.level << '\n';
    }
  }
  {
    std::ofstream out = internal::open_for_write(paths.substations);
    out << "sub_id,lon,lat\n";
    for (const auto& s : scenario.substations) {
      out << s.id << ',' << format_double(s.location.lon) << ',' << format_double(s.location.lat)
          << '\n';
    }
  }
  {
    std::ofstream out = internal::open_for_write(paths.residences);
    const bool with_profile = std::any_of(scenario.residences.begin(), scenario.residences.end(),
                                          [](const Residence& r) { return r.demand.size() == 24; });
    out << "res_id,lon,lat,p_avg_kw";
    if (with_profile) {
      for (int h = 0; h < 24; ++h) out << ",h" << h;
    }
    out << '\n';
    for (const auto& r : scenario.residences) {
      out << r.id << ',' << format_double(r.location.lon) << ',' << format_double(r.location.lat)
          << ',' << format_double(r.avg_demand);
      if (with_profile) {
        if (r.demand.size() != 24) {
          throw ValidationError("residence " + std::to_string(r.id) +
                                ": profile must have 24 entries to be written");
        }
        for (double h : r.demand) out << ',' << format_double(h);
      }
      out << '\n';
    }
  }
}

RoadStyle parse_road_style(const std::string& name) {
  if (name == "grid") return RoadStyle::Grid;
  if (name == "radial-suburb") return RoadStyle::RadialSuburb;
  throw ValidationError("unknown road style '" + name + "' (expected grid or radial-suburb)");
}

}  // namespace gridsynth
