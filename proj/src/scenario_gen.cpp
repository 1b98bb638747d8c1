#include <algorithm>
#include <cmath>
#include <numbers>

#include "gridsynth/errors.hpp"
#include "gridsynth/ingest.hpp"
#include "internal/rng.hpp"

namespace gridsynth {

namespace {

// Somewhere in south-west Virginia; only the local geometry matters.
const geo::GeoPoint kOrigin(-80.4139, 37.2296);

constexpr double kBlockM = 350.0;
constexpr double kRingSpacingM = 300.0;
constexpr std::size_t kSpokes = 8;

struct Layout {
  std::map<Id, geo::Vec2> nodes;  // local meters
  std::vector<RoadLink> links;
  double extent_m = 0.0;
};

Layout grid_layout(const GeneratorOptions& opt, internal::Rng& rng) {
  const double extent = opt.extent_km * 1000.0;
  std::size_t k = opt.grid_side;
  if (k == 0) k = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(extent / kBlockM)) + 1);
  if (k < 2) throw ValidationError("grid needs at least 2 nodes per side");
  const double block = extent / static_cast<double>(k - 1);
  Layout out;
  out.extent_m = extent;
  auto node_id = [k](std::size_t i, std::size_t j) { return static_cast<Id>(1 + i * k + j); };
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double jx = rng.uniform(-opt.jitter, opt.jitter) * block;
      const double jy = rng.uniform(-opt.jitter, opt.jitter) * block;
      out.nodes[node_id(i, j)] = {static_cast<double>(i) * block + jx, static_cast<double>(j) * block + jy};
    }
  }
  Id next = 1;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j + 1 < k; ++j) {
      // Every third avenue is a collector road.
      out.links.push_back({next++, node_id(i, j), node_id(i, j + 1), i % 3 == 0 ? 3 : 5});
      out.links.push_back({next++, node_id(j, i), node_id(j + 1, i), i % 3 == 0 ? 3 : 5});
    }
  }
  return out;
}

Layout radial_layout(const GeneratorOptions& opt) {
  const double radius = opt.extent_km * 1000.0 / 2.0;
  const std::size_t rings =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(radius / kRingSpacingM)));
  Layout out;
  out.extent_m = 2.0 * radius;
  out.nodes[1] = {radius, radius};
  auto node_id = [](std::size_t ring, std::size_t spoke) {
    return static_cast<Id>(2 + (ring - 1) * kSpokes + spoke);
  };
  for (std::size_t r = 1; r <= rings; ++r) {
    const double rr = radius * static_cast<double>(r) / static_cast<double>(rings);
    for (std::size_t s = 0; s < kSpokes; ++s) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>(s) / kSpokes;
      out.nodes[node_id(r, s)] = {radius + rr * std::cos(theta), radius + rr * std::sin(theta)};
    }
  }
  Id next = 1;
  for (std::size_t s = 0; s < kSpokes; ++s) out.links.push_back({next++, 1, node_id(1, s), 2});
  for (std::size_t r = 1; r <= rings; ++r) {
    for (std::size_t s = 0; s < kSpokes; ++s) {
      out.links.push_back({next++, node_id(r, s), node_id(r, (s + 1) % kSpokes), 5});
    }
  }
  for (std::size_t r = 1; r < rings; ++r) {
    for (std::size_t s = 0; s < kSpokes; ++s) {
      out.links.push_back({next++, node_id(r, s), node_id(r + 1, s), 3});
    }
  }
  return out;
}

std::vector<double> hourly_profile(double scale) {
  std::vector<double> shape(24);
  for (int h = 0; h < 24; ++h) {
    // Evening peak, night trough.
    shape[h] = 1.0 + 0.35 * std::sin(2.0 * std::numbers::pi * (h - 12) / 24.0) +
               0.15 * std::cos(2.0 * std::numbers::pi * (h - 19) / 12.0);
  }
  const double mean = profile_mean(shape);
  for (double& v : shape) v = scale * v / mean;
  return shape;
}

}  // namespace

Scenario generate_scenario(const GeneratorOptions& opt) {
  if (opt.n_res == 0) throw ValidationError("generate_scenario: n_res must be at least 1");
  if (opt.n_sub == 0) throw ValidationError("generate_scenario: n_sub must be at least 1");
  if (!(opt.extent_km > 0.0)) throw ValidationError("generate_scenario: extent must be positive");

  internal::Rng rng(opt.seed);
  const Layout layout = opt.style == RoadStyle::Grid ? grid_layout(opt, rng) : radial_layout(opt);
  const geo::LocalFrame frame(kOrigin);

  std::map<Id, geo::GeoPoint> nodes;
  for (const auto& [id, v] : layout.nodes) nodes.emplace(id, frame.unproject(v));
  Scenario scenario{RoadNetwork(std::move(nodes), layout.links), {}, {}};

  for (std::size_t i = 0; i < opt.n_sub; ++i) {
    const geo::Vec2 at{rng.uniform(0.0, layout.extent_m), rng.uniform(0.0, layout.extent_m)};
    scenario.substations.push_back({static_cast<Id>(i + 1), frame.unproject(at)});
  }

  for (std::size_t i = 0; i < opt.n_res; ++i) {
    const RoadLink& l = layout.links[rng.index(layout.links.size())];
    const geo::Vec2 a = layout.nodes.at(l.u);
    const geo::Vec2 b = layout.nodes.at(l.v);
    const double t = rng.uniform(0.08, 0.92);
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len = std::hypot(dx, dy);
    const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double offset = std::min(60.0, 8.0 + std::abs(rng.normal(0.0, 20.0)));
    const geo::Vec2 at{a.x + t * dx - side * offset * dy / len, a.y + t * dy + side * offset * dx / len};
    Residence r;
    r.id = static_cast<Id>(i + 1);
    r.location = frame.unproject(at);
    r.demand = hourly_profile(rng.uniform(0.3, 5.0));
    r.avg_demand = profile_mean(r.demand);
    scenario.residences.push_back(std::move(r));
  }
  scenario.validate();
  return scenario;
}

}  // namespace gridsynth
