#pragma once

#include <filesystem>
#include <string>

#include "gridsynth/ingest.hpp"
#include "gridsynth/primary_net.hpp"
#include "gridsynth/secondary.hpp"

namespace gridsynth {

/// FeatureCollection with one Point per node (properties id, kind,
/// demand_kw, voltage_pu) followed by one LineString per edge (properties
/// id, kind, from, to, length_m, resistance_ohm, capacity_kw, flow_kw). The
/// per-unit bases travel in a top-level "electrical" member. Keys are
/// emitted sorted, so equal networks give identical bytes.
std::string network_to_geojson(const DistributionNetwork& net);
DistributionNetwork network_from_geojson(const std::string& text);

void write_network_geojson(const DistributionNetwork& net, const std::filesystem::path& path);
DistributionNetwork read_network_geojson(const std::filesystem::path& path);

/// Used transformers as Points and secondary conductors as LineStrings,
/// grouped by link through a `link_id` property.
void write_secondary_geojson(const SecondaryLayer& layer, const Scenario& scenario,
                             const std::filesystem::path& path);

}  // namespace gridsynth
