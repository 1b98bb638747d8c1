#pragma once

// Small primary communities laid out in local meters.

#include <random>

#include "gridsynth/primary_net.hpp"
#include "support/secondary_fixtures.hpp"

namespace fixtures {

struct CommunityBuilder {
  gridsynth::PrimaryProblem p;
  std::vector<std::pair<double, double>> xy;

  int road(double x, double y, double d_r) {
    p.nodes.push_back({gridsynth::GraphNodeKind::Road, static_cast<gridsynth::Id>(p.nodes.size() + 1), at(x, y), 0.0, d_r});
    xy.emplace_back(x, y);
    return static_cast<int>(p.nodes.size() - 1);
  }
  int transformer(double x, double y, double kw) {
    p.nodes.push_back({gridsynth::GraphNodeKind::Transformer, static_cast<gridsynth::Id>(100 + p.nodes.size()), at(x, y), kw, 0.0});
    xy.emplace_back(x, y);
    return static_cast<int>(p.nodes.size() - 1);
  }
  void edge(int a, int b, double ohm) {
    const double len = std::hypot(xy[a].first - xy[b].first, xy[a].second - xy[b].second);
    p.edges.push_back({a, b, len, ohm, 0});
  }
};

/// Roads on a random spanning tree plus extra links; each transformer
/// splits a random existing link. Nodes end up roads first.
inline gridsynth::PrimaryProblem random_community(std::mt19937_64& rng, int n_road, int n_tx, int extra,
                                                  double ohm_per_m, gridsynth::PrimaryOptions options = {}) {
  std::uniform_real_distribution<double> pos(0.0, 400.0), d(50.0, 900.0), kw(5.0, 150.0), frac(0.2, 0.8);
  struct Link {
    int a, b;
  };
  std::vector<std::pair<double, double>> road_xy;
  std::vector<double> road_d;
  for (int i = 0; i < n_road; ++i) {
    road_xy.emplace_back(pos(rng), pos(rng));
    road_d.push_back(std::round(d(rng)));
  }
  std::vector<Link> links;
  for (int v = 1; v < n_road; ++v) links.push_back({std::uniform_int_distribution<int>(0, v - 1)(rng), v});
  std::uniform_int_distribution<int> any(0, n_road - 1);
  for (int k = 0; k < extra; ++k) {
    const int a = any(rng), b = any(rng);
    if (a != b) links.push_back({a, b});
  }
  // Split links; endpoints >= n_road are transformers.
  std::vector<std::pair<double, double>> tx_xy;
  std::vector<double> tx_kw;
  for (int t = 0; t < n_tx; ++t) {
    const std::size_t li = std::uniform_int_distribution<std::size_t>(0, links.size() - 1)(rng);
    const Link l = links[li];
    auto loc = [&](int i) { return i < n_road ? road_xy[i] : tx_xy[i - n_road]; };
    const double f = frac(rng);
    tx_xy.emplace_back(loc(l.a).first + f * (loc(l.b).first - loc(l.a).first),
                       loc(l.a).second + f * (loc(l.b).second - loc(l.a).second));
    tx_kw.push_back(std::round(kw(rng)));
    const int t_idx = n_road + t;
    links[li] = {l.a, t_idx};
    links.push_back({t_idx, l.b});
  }
  CommunityBuilder b;
  b.p.options = options;
  for (int i = 0; i < n_road; ++i) b.road(road_xy[i].first, road_xy[i].second, road_d[i]);
  for (int t = 0; t < n_tx; ++t) b.transformer(tx_xy[t].first, tx_xy[t].second, tx_kw[t]);
  for (const Link& l : links) {
    const double len = std::hypot(b.xy[l.a].first - b.xy[l.b].first, b.xy[l.a].second - b.xy[l.b].second);
    b.edge(l.a, l.b, ohm_per_m * len);
  }
  return b.p;
}

}  // namespace fixtures
