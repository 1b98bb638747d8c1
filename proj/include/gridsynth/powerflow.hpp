#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gridsynth/primary_net.hpp"

namespace gridsynth {

struct FlowSolution {
  std::vector<double> voltage_pu;  // per node
  std::vector<double> flow_kw;     // per edge, positive from `from` to `to`
  std::vector<double> loading;     // |flow| / capacity
  std::vector<int> parent_edge;    // per node, -1 at substations
};

/// Linearized distribution flow on a forest rooted at the substations:
/// edge flow is the demand below it, v_child = v_parent - r f in pu, and
/// feeders are ideal so roots sit at 1 pu. Throws ValidationError on a
/// cycle or a node no substation reaches.
FlowSolution run_ldf(const DistributionNetwork& net);

/// Writes voltages and flows into the network.
void apply(DistributionNetwork& net, const FlowSolution& flows);

struct OperationalReport {
  std::vector<std::string> violations;
  double min_voltage = 1.0;
  double max_voltage = 1.0;
  double max_loading = 0.0;
  double max_feeder_loading = 0.0;
  double max_leaf_secondary_loading = 0.0;  // secondary edges into leaf residences
};

/// Voltage band, overloads and voltage monotonicity from parent to child.
OperationalReport check_operational(const DistributionNetwork& net, const FlowSolution& flows, double v_min,
                                    double v_max);

/// Log-spaced bins; values at or below the first edge land in bin 0 and
/// values above the last edge in the last bin.
struct Histogram {
  std::vector<double> edges;  // bins + 1 ascending edges
  std::vector<std::size_t> counts;
};

Histogram log_histogram(std::span<const double> values, double lo, double hi, std::size_t bins_per_decade);

struct ComparisonReport {
  std::vector<Id> residences;        // ascending
  std::vector<double> deviation_pu;  // v_A - v_B per residence
  double max_abs_deviation = 0.0;
  double fraction_within_1pct = 1.0;
  Histogram flow_a, flow_b;          // |edge flow| in kW
  double length_a_m = 0.0, length_b_m = 0.0;
};

/// Runs LDF on both networks and compares residence voltages. Throws
/// ValidationError when the residence sets differ.
ComparisonReport compare(const DistributionNetwork& a, const DistributionNetwork& b);

/// `node_id,kind,voltage_pu` and `edge_id,kind,flow_kw,loading`.
void write_voltage_csv(const DistributionNetwork& net, const FlowSolution& flows, const std::filesystem::path& path);
void write_flow_csv(const DistributionNetwork& net, const FlowSolution& flows, const std::filesystem::path& path);
/// Flow, loading and voltage histograms of one network.
void write_histogram_json(const DistributionNetwork& net, const FlowSolution& flows, const std::filesystem::path& path);
void write_comparison_json(const ComparisonReport& report, const std::filesystem::path& path);

}  // namespace gridsynth
