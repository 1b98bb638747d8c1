#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

#include "gridsynth/errors.hpp"
#include "gridsynth/secondary.hpp"

namespace gridsynth {

namespace {

using geo::Vec2;

double orient(Vec2 a, Vec2 b, Vec2 c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

// Positive when d is strictly inside the circumcircle of counter-clockwise abc.
double incircle(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return ad * (bdx * cdy - cdx * bdy) - bd * (adx * cdy - cdx * ady) + cd * (adx * bdy - bdx * ady);
}

std::pair<int, int> ordered(int a, int b) { return a < b ? std::pair(a, b) : std::pair(b, a); }

// Andrew's monotone chain; returns hull vertex indices counter-clockwise.
std::vector<int> convex_hull(const std::vector<Vec2>& pts, std::vector<int> ids) {
  std::sort(ids.begin(), ids.end(), [&](int a, int b) {
    return std::pair(pts[a].x, pts[a].y) < std::pair(pts[b].x, pts[b].y);
  });
  std::vector<int> hull(2 * ids.size());
  std::size_t k = 0;
  for (int i : ids) {
    while (k >= 2 && orient(pts[hull[k - 2]], pts[hull[k - 1]], pts[i]) <= 0) --k;
    hull[k++] = i;
  }
  const std::size_t lower = k + 1;
  for (auto it = ids.rbegin() + 1; it != ids.rend(); ++it) {
    while (k >= lower && orient(pts[hull[k - 2]], pts[hull[k - 1]], pts[*it]) <= 0) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

DelaunayResult delaunay(std::span<const geo::GeoPoint> points) {
  if (points.size() < 2) throw ValidationError("delaunay: need at least 2 points");
  DelaunayResult out;

  double lon = 0.0, lat = 0.0;
  for (const auto& p : points) {
    lon += p.lon;
    lat += p.lat;
  }
  const geo::LocalFrame frame(geo::GeoPoint(lon / points.size(), lat / points.size()));

  std::vector<Vec2> pts;
  std::vector<int> unique;
  std::map<std::pair<double, double>, int> first_at;
  for (std::size_t i = 0; i < points.size(); ++i) {
    pts.push_back(frame.project(points[i]));
    auto [it, fresh] = first_at.emplace(std::pair(points[i].lon, points[i].lat), static_cast<int>(i));
    if (fresh) {
      unique.push_back(static_cast<int>(i));
    } else {
      out.duplicates.emplace_back(static_cast<int>(i), it->second);
    }
  }

  std::set<std::pair<int, int>> edges;
  if (unique.size() >= 2) {
    // Collinearity: distance of every point from the line through the two
    // points farthest apart along the first point's direction.
    const int a = unique.front();
    int b = unique[1];
    for (int i : unique) {
      if (std::hypot(pts[i].x - pts[a].x, pts[i].y - pts[a].y) > std::hypot(pts[b].x - pts[a].x, pts[b].y - pts[a].y)) b = i;
    }
    const double len = std::hypot(pts[b].x - pts[a].x, pts[b].y - pts[a].y);
    bool collinear = true;
    for (int i : unique) {
      if (std::abs(orient(pts[a], pts[b], pts[i])) / len > 1e-9 * std::max(1.0, len)) {
        collinear = false;
        break;
      }
    }
    out.collinear = collinear;
    if (collinear) {
      std::vector<int> chain = unique;
      const double ux = (pts[b].x - pts[a].x) / len, uy = (pts[b].y - pts[a].y) / len;
      auto along = [&](int i) { return (pts[i].x - pts[a].x) * ux + (pts[i].y - pts[a].y) * uy; };
      std::sort(chain.begin(), chain.end(), [&](int p, int q) { return along(p) < along(q); });
      for (std::size_t k = 0; k + 1 < chain.size(); ++k) edges.insert(ordered(chain[k], chain[k + 1]));
    } else {
      double min_x = pts[a].x, max_x = min_x, min_y = pts[a].y, max_y = min_y;
      for (int i : unique) {
        min_x = std::min(min_x, pts[i].x);
        max_x = std::max(max_x, pts[i].x);
        min_y = std::min(min_y, pts[i].y);
        max_y = std::max(max_y, pts[i].y);
      }
      const double span = std::max(max_x - min_x, max_y - min_y);
      const Vec2 c{(min_x + max_x) / 2.0, (min_y + max_y) / 2.0};
      const double big = 1000.0 * span;
      const int n = static_cast<int>(points.size());
      std::vector<Vec2> all = pts;
      all.push_back({c.x - big, c.y - big});
      all.push_back({c.x + big, c.y - big});
      all.push_back({c.x, c.y + big});

      struct Tri {
        std::array<int, 3> v;
        bool alive;
      };
      std::vector<Tri> tris{{{n, n + 1, n + 2}, true}};
      for (int p : unique) {
        std::vector<std::size_t> bad;
        for (std::size_t t = 0; t < tris.size(); ++t) {
          if (!tris[t].alive) continue;
          const auto& v = tris[t].v;
          if (incircle(all[v[0]], all[v[1]], all[v[2]], all[p]) > 0.0) bad.push_back(t);
        }
        std::set<std::pair<int, int>> directed;
        for (std::size_t t : bad) {
          const auto& v = tris[t].v;
          for (int e = 0; e < 3; ++e) directed.emplace(v[e], v[(e + 1) % 3]);
          tris[t].alive = false;
        }
        for (const auto& [u, w] : directed) {
          if (!directed.contains({w, u})) tris.push_back({{u, w, p}, true});
        }
      }
      for (const Tri& t : tris) {
        if (!t.alive || *std::max_element(t.v.begin(), t.v.end()) >= n) continue;
        out.triangles.push_back(t.v);
        for (int e = 0; e < 3; ++e) edges.insert(ordered(t.v[e], t.v[(e + 1) % 3]));
      }
      // Hull edges are always Delaunay edges; a finite super triangle can
      // hide the ones along a nearly flat stretch of the hull.
      const std::vector<int> hull = convex_hull(pts, unique);
      for (std::size_t k = 0; k < hull.size(); ++k) edges.insert(ordered(hull[k], hull[(k + 1) % hull.size()]));
    }
  }

  for (const auto& [dup, rep] : out.duplicates) {
    std::vector<int> neighbours;
    for (const auto& [u, w] : edges) {
      if (u == rep) neighbours.push_back(w);
      if (w == rep) neighbours.push_back(u);
    }
    edges.insert(ordered(dup, rep));
    for (int nb : neighbours) {
      if (nb != dup) edges.insert(ordered(dup, nb));
    }
  }
  out.edges.assign(edges.begin(), edges.end());
  std::sort(out.triangles.begin(), out.triangles.end());
  return out;
}

}  // namespace gridsynth
