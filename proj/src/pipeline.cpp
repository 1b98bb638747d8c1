#include "gridsynth/pipeline.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "gridsynth/errors.hpp"
#include "gridsynth/geojson.hpp"
#include "internal/csv.hpp"

namespace gridsynth {

namespace {

template <typename F>
auto in_stage(const char* stage, F&& body) {
  const std::string prefix = std::string(stage) + ": ";
  try {
    return body();
  } catch (const ValidationError& e) {
    throw ValidationError(prefix + e.what());
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(prefix + e.what());
  } catch (const InvariantError& e) {
    throw InvariantError(prefix + e.what());
  }
}

}  // namespace

LinkAssignment run_map_stage(const Scenario& scenario, const Config& config) {
  return in_stage("map", [&] { return build_assignment(scenario, config.mapping()); });
}

SecondaryLayer run_secondary_stage(const Scenario& scenario, const LinkAssignment& assignment, const Config& config) {
  return in_stage("secondary", [&] {
    const TransformerCandidates candidates = place_all_candidates(scenario.roads, assignment, config.mapping());
    std::vector<SecondaryNetwork> nets;
    for (const auto& p : build_secondary_problems(scenario, assignment, candidates, config.secondary())) {
      nets.push_back(solve_secondary(p, config.milp()));
    }
    return flatten(nets);
  });
}

PartitionStage run_partition_stage(const Scenario& scenario, const SecondaryLayer& layer, const Config& config) {
  return in_stage("partition", [&] {
    PartitionStage out;
    out.graph = augment(scenario.roads, layer.transformers);
    const auto seeds = seed_substations(out.graph, scenario.roads, scenario.substations, config.mapping());
    out.map = voronoi_assign(out.graph, seeds);
    split_communities(out.graph, out.map, config.community_stop());
    const auto bad = partition_violations(out.graph, out.map);
    if (!bad.empty()) throw InvariantError(bad.front());
    return out;
  });
}

PartitionStage load_partition_stage(const Scenario& scenario, const SecondaryLayer& layer, const Config& config,
                                    const std::filesystem::path& partition_csv) {
  return in_stage("partition", [&] {
    PartitionStage out;
    out.graph = augment(scenario.roads, layer.transformers);
    const auto seeds = seed_substations(out.graph, scenario.roads, scenario.substations, config.mapping());
    out.map = read_partition_csv(out.graph, seeds, partition_csv);
    return out;
  });
}

PrimaryStage run_primary_stage(const Scenario& scenario, const SecondaryLayer& layer, const PartitionStage& partition,
                               const Config& config) {
  return in_stage("primary", [&] {
    PrimaryStage out;
    for (const auto& p : build_primary_problems(partition.graph, partition.map, scenario.substations, config.primary())) {
      out.solutions.push_back(solve_primary(p, config.milp()));
    }
    out.network = stitch(scenario, out.solutions, layer, config.capacities(), config.electrical());
    const auto bad = network_violations(out.network);
    if (!bad.empty()) throw InvariantError(bad.front());
    apply(out.network, run_ldf(out.network));
    return out;
  });
}

PowerflowStage run_powerflow_stage(const DistributionNetwork& network, const Config& config) {
  return in_stage("powerflow", [&] {
    PowerflowStage out;
    out.flows = run_ldf(network);
    out.report = check_operational(network, out.flows, config.v_min, config.v_max);
    return out;
  });
}

void write_powerflow_artifacts(const DistributionNetwork& network, const PowerflowStage& stage,
                               const std::filesystem::path& dir) {
  write_voltage_csv(network, stage.flows, dir / artifacts::kVoltages);
  write_flow_csv(network, stage.flows, dir / artifacts::kFlows);
  write_histogram_json(network, stage.flows, dir / artifacts::kHistograms);

  nlohmann::json j;
  const OperationalReport& r = stage.report;
  j["min_voltage_pu"] = r.min_voltage;
  j["max_voltage_pu"] = r.max_voltage;
  j["max_loading"] = r.max_loading;
  j["max_feeder_loading"] = r.max_feeder_loading;
  j["max_leaf_secondary_loading"] = r.max_leaf_secondary_loading;
  j["violations"] = r.violations;
  std::map<std::string, std::size_t> nodes, edges;
  std::map<std::string, double> length;
  for (const NetNode& n : network.nodes) ++nodes[to_string(n.kind)];
  for (const NetEdge& e : network.edges) {
    ++edges[to_string(e.kind)];
    length[to_string(e.kind)] += e.length_m;
  }
  j["nodes"] = nodes;
  j["edges"] = edges;
  j["length_m"] = length;
  std::ofstream out = internal::open_for_write(dir / artifacts::kReport);
  out << j.dump(2) << '\n';
}

PipelineResult run_pipeline(const Scenario& scenario, const Config& config,
                            const std::optional<std::filesystem::path>& work_dir) {
  in_stage("validate", [&] {
    config.validate();
    scenario.validate();
    return 0;
  });
  if (work_dir) {
    std::ofstream out = internal::open_for_write(*work_dir / artifacts::kConfig);
    out << config.to_text();
  }

  PipelineResult r;
  r.assignment = run_map_stage(scenario, config);
  if (work_dir) write_assignment_csv(r.assignment, *work_dir / artifacts::kAssignment);

  r.secondary = run_secondary_stage(scenario, r.assignment, config);
  if (work_dir) {
    write_secondary_layer(r.secondary, *work_dir / artifacts::kSecondaryTransformers,
                          *work_dir / artifacts::kSecondaryLines);
    write_secondary_geojson(r.secondary, scenario, *work_dir / artifacts::kSecondaryGeojson);
  }

  r.partition = run_partition_stage(scenario, r.secondary, config);
  if (work_dir) write_partition_csv(r.partition.graph, r.partition.map, *work_dir / artifacts::kPartition);

  r.primary = run_primary_stage(scenario, r.secondary, r.partition, config);
  if (work_dir) write_network_geojson(r.primary.network, *work_dir / artifacts::kNetwork);

  r.powerflow = run_powerflow_stage(r.primary.network, config);
  if (work_dir) write_powerflow_artifacts(r.primary.network, r.powerflow, *work_dir);
  return r;
}

}  // namespace gridsynth
