#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace gridsynth::geo {

/// Mean Earth radius used for every distance in the library (meters).
inline constexpr double kEarthRadiusM = 6371008.8;

/// Longitude/latitude pair in degrees. Construction rejects non-finite or
/// out-of-range coordinates with ValidationError.
struct GeoPoint {
  double lon = 0.0;
  double lat = 0.0;

  GeoPoint() = default;
  GeoPoint(double lon_deg, double lat_deg);

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Straight road link between two distinct points.
struct Segment {
  GeoPoint a;
  GeoPoint b;

  Segment(GeoPoint a_, GeoPoint b_);

  Segment reversed() const { return Segment(b, a); }
};

struct BBox {
  double min_lon = 0.0;
  double min_lat = 0.0;
  double max_lon = 0.0;
  double max_lat = 0.0;

  bool intersects(const BBox& other) const {
    return min_lon <= other.max_lon && other.min_lon <= max_lon && min_lat <= other.max_lat &&
           other.min_lat <= max_lat;
  }
  bool contains(const BBox& other) const {
    return min_lon <= other.min_lon && other.max_lon <= max_lon && min_lat <= other.min_lat &&
           other.max_lat <= max_lat;
  }

  /// Box around a point, padded by `pad_m` meters on every side.
  static BBox around(GeoPoint p, double pad_m);
  /// Axis-aligned box of a segment, padded by `pad_m` meters on every side.
  static BBox of(const Segment& s, double pad_m);
};

/// Planar coordinates in meters.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Equirectangular projection centered at an origin. Adequate at county scale.
class LocalFrame {
 public:
  explicit LocalFrame(GeoPoint origin);

  Vec2 project(GeoPoint p) const;
  GeoPoint unproject(Vec2 v) const;
  GeoPoint origin() const { return origin_; }

 private:
  GeoPoint origin_;
  double meters_per_deg_lat_;
  double meters_per_deg_lon_;
};

/// Great-circle (haversine) distance in meters.
double geodesic_distance(GeoPoint p, GeoPoint q);

double segment_length(const Segment& s);

/// Point at fraction t in [0,1] along the segment.
GeoPoint point_at(const Segment& s, double t);

/// Geodesic distance from p to the closest point of s.
double point_segment_distance(GeoPoint p, const Segment& s);

enum class Side { Left, Right, On };

/// Sine of the angle between s and p - s.a, computed in a frame centered at
/// the segment midpoint with the endpoints in canonical order, so reversing
/// the segment negates the value exactly.
double orientation(GeoPoint p, const Segment& s);

/// Left/Right of the directed segment; On when |orientation| < 1e-12.
Side side_of(GeoPoint p, const Segment& s);

/// k points at geodesic fractions i/(k+1), i = 1..k, of the segment length.
/// Throws ValidationError for k = 0.
std::vector<GeoPoint> interpolate_along(const Segment& s, std::size_t k);

/// Quad-tree over padded link boxes.
class SpatialIndex {
 public:
  struct Entry {
    std::int64_t id;
    BBox box;
  };

  explicit SpatialIndex(std::vector<Entry> entries, double padding_m = 0.0,
                        std::size_t leaf_capacity = 16, int max_depth = 20);

  /// Ids of all entries whose box intersects `query`, ascending.
  std::vector<std::int64_t> query(const BBox& query) const;

  std::size_t size() const { return entries_.size(); }
  double padding_m() const { return padding_m_; }
  const std::vector<Entry>& entries() const { return entries_; }
  int depth() const;

 private:
  struct Node {
    BBox region;
    std::vector<std::size_t> items;
    std::array<int, 4> children{-1, -1, -1, -1};
  };

  void build(int node, std::vector<std::size_t> items, int depth);
  int depth_of(int node) const;

  std::vector<Entry> entries_;
  std::vector<Node> nodes_;
  double padding_m_;
  std::size_t leaf_capacity_;
  int max_depth_;
};

/// Builds the index with every link's box expanded by `padding_m`.
/// Throws ValidationError for an empty link list or negative padding.
SpatialIndex index_links(std::span<const std::pair<std::int64_t, Segment>> links,
                         double padding_m);

}  // namespace gridsynth::geo
