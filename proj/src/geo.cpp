#include "gridsynth/geo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gridsynth/errors.hpp"

namespace gridsynth::geo {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kMetersPerDegree = kEarthRadiusM * kDegToRad;

double pad_lat_deg(double pad_m) { return pad_m / kMetersPerDegree; }

double pad_lon_deg(double pad_m, double abs_lat_deg) {
  const double lat = std::min(abs_lat_deg + pad_lat_deg(pad_m), 89.9);
  return pad_m / (kMetersPerDegree * std::cos(lat * kDegToRad));
}

}  // namespace

GeoPoint::GeoPoint(double lon_deg, double lat_deg) : lon(lon_deg), lat(lat_deg) {
  if (!std::isfinite(lon) || !std::isfinite(lat) || lon < -180.0 || lon > 180.0 || lat < -90.0 ||
      lat > 90.0) {
    std::ostringstream os;
    os << "invalid coordinate (lon=" << lon << ", lat=" << lat << ")";
    throw ValidationError(os.str());
  }
}

Segment::Segment(GeoPoint a_, GeoPoint b_) : a(a_), b(b_) {
  if (a == b) throw ValidationError("degenerate segment: endpoints coincide");
}

BBox BBox::around(GeoPoint p, double pad_m) {
  const double dlat = pad_lat_deg(pad_m);
  const double dlon = pad_lon_deg(pad_m, std::abs(p.lat));
  return {p.lon - dlon, p.lat - dlat, p.lon + dlon, p.lat + dlat};
}

BBox BBox::of(const Segment& s, double pad_m) {
  const double dlat = pad_lat_deg(pad_m);
  const double dlon = pad_lon_deg(pad_m, std::max(std::abs(s.a.lat), std::abs(s.b.lat)));
  return {std::min(s.a.lon, s.b.lon) - dlon, std::min(s.a.lat, s.b.lat) - dlat,
          std::max(s.a.lon, s.b.lon) + dlon, std::max(s.a.lat, s.b.lat) + dlat};
}

LocalFrame::LocalFrame(GeoPoint origin)
    : origin_(origin),
      meters_per_deg_lat_(kMetersPerDegree),
      meters_per_deg_lon_(kMetersPerDegree * std::cos(origin.lat * kDegToRad)) {}

Vec2 LocalFrame::project(GeoPoint p) const {
  return {(p.lon - origin_.lon) * meters_per_deg_lon_, (p.lat - origin_.lat) * meters_per_deg_lat_};
}

GeoPoint LocalFrame::unproject(Vec2 v) const {
  return GeoPoint(origin_.lon + v.x / meters_per_deg_lon_, origin_.lat + v.y / meters_per_deg_lat_);
}

double geodesic_distance(GeoPoint p, GeoPoint q) {
  const double phi1 = p.lat * kDegToRad;
  const double phi2 = q.lat * kDegToRad;
  double dlon = q.lon - p.lon;
  if (dlon > 180.0) dlon -= 360.0;
  if (dlon < -180.0) dlon += 360.0;
  const double s_phi = std::sin((phi2 - phi1) / 2.0);
  const double s_lam = std::sin(dlon * kDegToRad / 2.0);
  const double h = s_phi * s_phi + std::cos(phi1) * std::cos(phi2) * s_lam * s_lam;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

double segment_length(const Segment& s) { return geodesic_distance(s.a, s.b); }

GeoPoint point_at(const Segment& s, double t) {
  return GeoPoint(s.a.lon + t * (s.b.lon - s.a.lon), s.a.lat + t * (s.b.lat - s.a.lat));
}

double point_segment_distance(GeoPoint p, const Segment& s) {
  const LocalFrame frame(p);
  const Vec2 a = frame.project(s.a);
  const Vec2 b = frame.project(s.b);
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? -(a.x * dx + a.y * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double to_foot = geodesic_distance(p, point_at(s, t));
  return std::min({to_foot, geodesic_distance(p, s.a), geodesic_distance(p, s.b)});
}

double orientation(GeoPoint p, const Segment& s) {
  const bool swapped = std::pair(s.b.lon, s.b.lat) < std::pair(s.a.lon, s.a.lat);
  const GeoPoint first = swapped ? s.b : s.a;
  const GeoPoint second = swapped ? s.a : s.b;
  const LocalFrame frame(GeoPoint((s.a.lon + s.b.lon) / 2.0, (s.a.lat + s.b.lat) / 2.0));
  const Vec2 a = frame.project(first);
  const Vec2 b = frame.project(second);
  const Vec2 q = frame.project(p);
  const double ux = b.x - a.x, uy = b.y - a.y;
  const double wx = q.x - a.x, wy = q.y - a.y;
  const double norm = std::hypot(ux, uy) * std::hypot(wx, wy);
  if (norm == 0.0) return 0.0;
  const double sine = (ux * wy - uy * wx) / norm;
  return swapped ? -sine : sine;
}

Side side_of(GeoPoint p, const Segment& s) {
  const double o = orientation(p, s);
  if (std::abs(o) < 1e-12) return Side::On;
  return o > 0.0 ? Side::Left : Side::Right;
}

std::vector<GeoPoint> interpolate_along(const Segment& s, std::size_t k) {
  if (k == 0) throw ValidationError("interpolate_along: k must be at least 1");
  // Linear lon/lat parameters are not proportional to distance, so solve for
  // the parameter whose geodesic distance from s.a is the target fraction.
  const double length = segment_length(s);
  std::vector<GeoPoint> out;
  out.reserve(k);
  double lo = 0.0;
  for (std::size_t i = 1; i <= k; ++i) {
    const double target = length * static_cast<double>(i) / static_cast<double>(k + 1);
    double hi = 1.0;
    double t_lo = lo;
    for (int iter = 0; iter < 100 && hi - t_lo > 1e-15; ++iter) {
      const double mid = 0.5 * (t_lo + hi);
      if (geodesic_distance(s.a, point_at(s, mid)) < target) {
        t_lo = mid;
      } else {
        hi = mid;
      }
    }
    lo = 0.5 * (t_lo + hi);
    out.push_back(point_at(s, lo));
  }
  return out;
}

// --- SpatialIndex --------------------------------------------------------

SpatialIndex::SpatialIndex(std::vector<Entry> entries, double padding_m, std::size_t leaf_capacity,
                           int max_depth)
    : entries_(std::move(entries)),
      padding_m_(padding_m),
      leaf_capacity_(std::max<std::size_t>(1, leaf_capacity)),
      max_depth_(max_depth) {
  if (entries_.empty()) return;
  BBox world = entries_.front().box;
  for (const auto& e : entries_) {
    world.min_lon = std::min(world.min_lon, e.box.min_lon);
    world.min_lat = std::min(world.min_lat, e.box.min_lat);
    world.max_lon = std::max(world.max_lon, e.box.max_lon);
    world.max_lat = std::max(world.max_lat, e.box.max_lat);
  }
  std::vector<std::size_t> all(entries_.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  nodes_.push_back(Node{world, {}, {-1, -1, -1, -1}});
  build(0, std::move(all), 0);
}

void SpatialIndex::build(int node, std::vector<std::size_t> items, int depth) {
  if (items.size() <= leaf_capacity_ || depth >= max_depth_) {
    nodes_[node].items = std::move(items);
    return;
  }
  const BBox r = nodes_[node].region;
  const double mid_lon = 0.5 * (r.min_lon + r.max_lon);
  const double mid_lat = 0.5 * (r.min_lat + r.max_lat);
  const std::array<BBox, 4> quads = {BBox{r.min_lon, r.min_lat, mid_lon, mid_lat},
                                     BBox{mid_lon, r.min_lat, r.max_lon, mid_lat},
                                     BBox{r.min_lon, mid_lat, mid_lon, r.max_lat},
                                     BBox{mid_lon, mid_lat, r.max_lon, r.max_lat}};
  std::array<std::vector<std::size_t>, 4> buckets;
  std::vector<std::size_t> straddling;
  for (std::size_t item : items) {
    bool placed = false;
    for (std::size_t q = 0; q < 4 && !placed; ++q) {
      if (quads[q].contains(entries_[item].box)) {
        buckets[q].push_back(item);
        placed = true;
      }
    }
    if (!placed) straddling.push_back(item);
  }
  // Nothing fits a quadrant: subdividing further cannot help.
  if (straddling.size() == items.size()) {
    nodes_[node].items = std::move(items);
    return;
  }
  nodes_[node].items = std::move(straddling);
  for (std::size_t q = 0; q < 4; ++q) {
    if (buckets[q].empty()) continue;
    const int child = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{quads[q], {}, {-1, -1, -1, -1}});
    nodes_[node].children[q] = child;
    build(child, std::move(buckets[q]), depth + 1);
  }
}

std::vector<std::int64_t> SpatialIndex::query(const BBox& query) const {
  std::vector<std::int64_t> hits;
  if (nodes_.empty()) return hits;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[stack.back()];
    stack.pop_back();
    if (!n.region.intersects(query)) continue;
    for (std::size_t item : n.items) {
      if (entries_[item].box.intersects(query)) hits.push_back(entries_[item].id);
    }
    for (int c : n.children) {
      if (c >= 0) stack.push_back(c);
    }
  }
  std::sort(hits.begin(), hits.end());
  return hits;
}

int SpatialIndex::depth() const { return nodes_.empty() ? 0 : depth_of(0); }

int SpatialIndex::depth_of(int node) const {
  int best = 0;
  for (int c : nodes_[node].children) {
    if (c >= 0) best = std::max(best, 1 + depth_of(c));
  }
  return best;
}

SpatialIndex index_links(std::span<const std::pair<std::int64_t, Segment>> links, double padding_m) {
  if (links.empty()) throw ValidationError("index_links: no links to index");
  if (!(padding_m >= 0.0)) throw ValidationError("index_links: padding must be non-negative");
  std::vector<SpatialIndex::Entry> entries;
  entries.reserve(links.size());
  for (const auto& [id, seg] : links) entries.push_back({id, BBox::of(seg, padding_m)});
  return SpatialIndex(std::move(entries), padding_m);
}

}  // namespace gridsynth::geo
