#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridsynth/config.hpp"
#include "gridsynth/powerflow.hpp"

namespace gridsynth {

/// Artifact names inside a work directory. Every stage reads its inputs from
/// here and writes its outputs here, so a run can resume at any stage.
namespace artifacts {
inline constexpr const char* kAssignment = "assignment.csv";
inline constexpr const char* kSecondaryTransformers = "secondary_transformers.csv";
inline constexpr const char* kSecondaryLines = "secondary_lines.csv";
inline constexpr const char* kSecondaryGeojson = "secondary.geojson";
inline constexpr const char* kPartition = "partition.csv";
inline constexpr const char* kNetwork = "network.geojson";
inline constexpr const char* kVoltages = "voltages.csv";
inline constexpr const char* kFlows = "flows.csv";
inline constexpr const char* kHistograms = "histograms.json";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kConfig = "config_used.toml";
}  // namespace artifacts

struct PartitionStage {
  AugmentedRoadGraph graph;
  PartitionMap map;
};

struct PrimaryStage {
  std::vector<PrimarySolution> solutions;
  DistributionNetwork network;  // carries LDF voltages and flows
};

struct PowerflowStage {
  FlowSolution flows;
  OperationalReport report;
};

// Each stage rethrows library errors with "<stage>: " prefixed, keeping the
// error kind.
LinkAssignment run_map_stage(const Scenario& scenario, const Config& config);
SecondaryLayer run_secondary_stage(const Scenario& scenario, const LinkAssignment& assignment, const Config& config);
PartitionStage run_partition_stage(const Scenario& scenario, const SecondaryLayer& layer, const Config& config);
PrimaryStage run_primary_stage(const Scenario& scenario, const SecondaryLayer& layer, const PartitionStage& partition,
                               const Config& config);
PowerflowStage run_powerflow_stage(const DistributionNetwork& network, const Config& config);

/// Rebuilds the augmented graph and Voronoi cells from the scenario and the
/// secondary layer, taking communities from a partition file.
PartitionStage load_partition_stage(const Scenario& scenario, const SecondaryLayer& layer, const Config& config,
                                    const std::filesystem::path& partition_csv);

void write_powerflow_artifacts(const DistributionNetwork& network, const PowerflowStage& stage,
                               const std::filesystem::path& dir);

struct PipelineResult {
  LinkAssignment assignment;
  SecondaryLayer secondary;
  PartitionStage partition;
  PrimaryStage primary;
  PowerflowStage powerflow;
};

/// Validates scenario and config up front, then runs map, secondary,
/// partition, primary and power flow in order. Writes every artifact when
/// `work_dir` is given.
PipelineResult run_pipeline(const Scenario& scenario, const Config& config,
                            const std::optional<std::filesystem::path>& work_dir = std::nullopt);

}  // namespace gridsynth
