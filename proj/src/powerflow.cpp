#include "gridsynth/powerflow.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gridsynth/errors.hpp"
#include "internal/csv.hpp"

namespace gridsynth {

FlowSolution run_ldf(const DistributionNetwork& net) {
  const auto n = net.nodes.size();
  std::vector<std::vector<int>> incident(n);
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const NetEdge& edge = net.edges[e];
    if (edge.from < 0 || edge.to < 0 || static_cast<std::size_t>(std::max(edge.from, edge.to)) >= n) {
      throw ValidationError("edge " + std::to_string(e + 1) + " has an unknown endpoint");
    }
    incident[edge.from].push_back(static_cast<int>(e));
    incident[edge.to].push_back(static_cast<int>(e));
  }

  // Orient every edge away from the substations; `order` is pre-order.
  std::vector<int> parent_edge(n, -1);
  std::vector<bool> seen(n, false);
  std::vector<int> order;
  for (std::size_t s = 0; s < n; ++s) {
    if (net.nodes[s].kind != NodeKind::Substation) continue;
    seen[s] = true;
    std::vector<int> stack{static_cast<int>(s)};
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      order.push_back(v);
      for (int e : incident[v]) {
        if (e == parent_edge[v]) continue;
        const int w = net.edges[e].from == v ? net.edges[e].to : net.edges[e].from;
        if (seen[w]) {
          throw ValidationError("network has a cycle through " + net.nodes[w].label());
        }
        seen[w] = true;
        parent_edge[w] = e;
        stack.push_back(w);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) throw ValidationError(net.nodes[i].label() + " is not reached from any substation");
  }

  FlowSolution out;
  out.parent_edge = parent_edge;
  out.flow_kw.assign(net.edges.size(), 0.0);
  out.loading.assign(net.edges.size(), 0.0);
  out.voltage_pu.assign(n, 1.0);
  std::vector<double> below(n, 0.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const int v = *it;
    below[v] += net.nodes[v].demand_kw;
    const int e = parent_edge[v];
    if (e < 0) continue;
    const int up = net.edges[e].from == v ? net.edges[e].to : net.edges[e].from;
    below[up] += below[v];
    out.flow_kw[e] = net.edges[e].to == v ? below[v] : -below[v];
  }
  for (int v : order) {
    const int e = parent_edge[v];
    if (e < 0) continue;
    const NetEdge& edge = net.edges[e];
    const int up = edge.from == v ? edge.to : edge.from;
    const double drop = net.resistance_pu(edge) * net.electrical.to_pu(std::abs(out.flow_kw[e]));
    out.voltage_pu[v] = out.voltage_pu[up] - drop;
  }
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const double cap = net.edges[e].capacity_kw;
    out.loading[e] = cap > 0.0 ? std::abs(out.flow_kw[e]) / cap : 0.0;
  }
  return out;
}

void apply(DistributionNetwork& net, const FlowSolution& flows) {
  for (std::size_t i = 0; i < net.nodes.size(); ++i) net.nodes[i].voltage_pu = flows.voltage_pu[i];
  for (std::size_t e = 0; e < net.edges.size(); ++e) net.edges[e].flow_kw = flows.flow_kw[e];
}

OperationalReport check_operational(const DistributionNetwork& net, const FlowSolution& flows, double v_min,
                                    double v_max) {
  OperationalReport rep;
  if (!net.nodes.empty()) {
    rep.min_voltage = *std::min_element(flows.voltage_pu.begin(), flows.voltage_pu.end());
    rep.max_voltage = *std::max_element(flows.voltage_pu.begin(), flows.voltage_pu.end());
  }
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const double v = flows.voltage_pu[i];
    if (v < v_min - 1e-12 || v > v_max + 1e-12) {
      std::ostringstream os;
      os << net.nodes[i].label() << ": voltage " << v << " pu outside [" << v_min << ", " << v_max << "]";
      rep.violations.push_back(os.str());
    }
  }
  std::vector<int> children(net.nodes.size(), 0);
  std::vector<int> down_of(net.edges.size(), -1);
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const int e = flows.parent_edge[i];
    if (e < 0) continue;
    down_of[e] = static_cast<int>(i);
    ++children[net.edges[e].from == static_cast<int>(i) ? net.edges[e].to : net.edges[e].from];
  }
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const NetEdge& edge = net.edges[e];
    const double l = flows.loading[e];
    rep.max_loading = std::max(rep.max_loading, l);
    if (edge.kind == EdgeKind::Feeder) rep.max_feeder_loading = std::max(rep.max_feeder_loading, l);
    const int down = down_of[e];
    const int up = down == edge.to ? edge.from : edge.to;
    if (edge.kind == EdgeKind::Secondary && children[down] == 0) {
      rep.max_leaf_secondary_loading = std::max(rep.max_leaf_secondary_loading, l);
    }
    if (l > 1.0 + 1e-12) {
      std::ostringstream os;
      os << "edge " << e + 1 << " (" << to_string(edge.kind) << "): loading " << l;
      rep.violations.push_back(os.str());
    }
    if (flows.voltage_pu[down] > flows.voltage_pu[up] + 1e-12) {
      rep.violations.push_back("edge " + std::to_string(e + 1) + ": voltage rises downstream");
    }
  }
  return rep;
}

Histogram log_histogram(std::span<const double> values, double lo, double hi, std::size_t bins_per_decade) {
  if (!(lo > 0.0 && hi > lo) || bins_per_decade == 0) throw ValidationError("histogram range must satisfy 0 < lo < hi");
  Histogram h;
  const double decades = std::log10(hi / lo);
  const auto bins = static_cast<std::size_t>(std::ceil(decades * static_cast<double>(bins_per_decade) - 1e-9));
  for (std::size_t k = 0; k <= bins; ++k) {
    h.edges.push_back(lo * std::pow(10.0, static_cast<double>(k) / static_cast<double>(bins_per_decade)));
  }
  h.counts.assign(bins, 0);
  for (double v : values) {
    const auto it = std::lower_bound(h.edges.begin(), h.edges.end(), v);
    std::size_t bin = it == h.edges.begin() ? 0 : static_cast<std::size_t>(it - h.edges.begin()) - 1;
    h.counts[std::min(bin, bins - 1)] += 1;
  }
  return h;
}

namespace {

std::vector<double> abs_flows(const FlowSolution& f) {
  std::vector<double> out;
  for (double v : f.flow_kw) out.push_back(std::abs(v));
  return out;
}

double total_length(const DistributionNetwork& net) {
  double s = 0.0;
  for (const auto& e : net.edges) s += e.length_m;
  return s;
}

constexpr double kFlowLo = 0.01;
constexpr double kFlowHi = 10000.0;

nlohmann::json to_json(const Histogram& h) { return {{"edges", h.edges}, {"counts", h.counts}}; }

}  // namespace

ComparisonReport compare(const DistributionNetwork& a, const DistributionNetwork& b) {
  const FlowSolution fa = run_ldf(a);
  const FlowSolution fb = run_ldf(b);
  auto residences = [](const DistributionNetwork& net, const FlowSolution& f) {
    std::map<Id, double> v;
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
      if (net.nodes[i].kind == NodeKind::Residence) v[net.nodes[i].id] = f.voltage_pu[i];
    }
    return v;
  };
  const auto va = residences(a, fa);
  const auto vb = residences(b, fb);
  if (va.size() != vb.size() ||
      !std::equal(va.begin(), va.end(), vb.begin(), [](const auto& x, const auto& y) { return x.first == y.first; })) {
    throw ValidationError("compare: the two networks serve different residence sets");
  }
  ComparisonReport rep;
  std::size_t within = 0;
  for (const auto& [id, v] : va) {
    const double d = v - vb.at(id);
    rep.residences.push_back(id);
    rep.deviation_pu.push_back(d);
    rep.max_abs_deviation = std::max(rep.max_abs_deviation, std::abs(d));
    within += std::abs(d) <= 0.01;
  }
  rep.fraction_within_1pct = va.empty() ? 1.0 : static_cast<double>(within) / static_cast<double>(va.size());
  rep.flow_a = log_histogram(abs_flows(fa), kFlowLo, kFlowHi, 4);
  rep.flow_b = log_histogram(abs_flows(fb), kFlowLo, kFlowHi, 4);
  rep.length_a_m = total_length(a);
  rep.length_b_m = total_length(b);
  return rep;
}

void write_voltage_csv(const DistributionNetwork& net, const FlowSolution& flows, const std::filesystem::path& path) {
  std::ofstream out = internal::open_for_write(path);
  out << "node_id,kind,voltage_pu\n";
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    out << net.nodes[i].label() << ',' << to_string(net.nodes[i].kind) << ','
        << internal::format_double(flows.voltage_pu[i]) << '\n';
  }
}

void write_flow_csv(const DistributionNetwork& net, const FlowSolution& flows, const std::filesystem::path& path) {
  std::ofstream out = internal::open_for_write(path);
  out << "edge_id,kind,flow_kw,loading\n";
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    out << e + 1 << ',' << to_string(net.edges[e].kind) << ',' << internal::format_double(flows.flow_kw[e]) << ','
        << internal::format_double(flows.loading[e]) << '\n';
  }
}

void write_histogram_json(const DistributionNetwork& net, const FlowSolution& flows, const std::filesystem::path& path) {
  nlohmann::json j;
  j["flow_kw"] = to_json(log_histogram(abs_flows(flows), kFlowLo, kFlowHi, 4));
  std::map<std::string, std::vector<double>> loading;
  for (std::size_t e = 0; e < net.edges.size(); ++e) loading[to_string(net.edges[e].kind)].push_back(flows.loading[e]);
  for (const auto& [kind, values] : loading) j["loading"][kind] = to_json(log_histogram(values, 1e-5, 10.0, 4));
  // Voltage in 0.005 pu bins from 0.90 to 1.05.
  Histogram v;
  for (int k = 0; k <= 30; ++k) v.edges.push_back(0.90 + 0.005 * k);
  v.counts.assign(30, 0);
  for (double x : flows.voltage_pu) {
    const auto bin = static_cast<long>(std::floor((x - 0.90) / 0.005));
    v.counts[static_cast<std::size_t>(std::clamp(bin, 0L, 29L))] += 1;
  }
  j["voltage_pu"] = to_json(v);
  std::ofstream out = internal::open_for_write(path);
  out << j.dump(2) << '\n';
}

void write_comparison_json(const ComparisonReport& report, const std::filesystem::path& path) {
  nlohmann::json j;
  j["residences"] = report.residences;
  j["deviation_pu"] = report.deviation_pu;
  j["max_abs_deviation_pu"] = report.max_abs_deviation;
  j["fraction_within_0_01_pu"] = report.fraction_within_1pct;
  j["flow_kw_a"] = to_json(report.flow_a);
  j["flow_kw_b"] = to_json(report.flow_b);
  j["total_length_m"] = {report.length_a_m, report.length_b_m};
  std::ofstream out = internal::open_for_write(path);
  out << j.dump(2) << '\n';
}

}  // namespace gridsynth
