#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gridsynth/ingest.hpp"
#include "gridsynth/mapping.hpp"
#include "gridsynth/milp.hpp"
#include "gridsynth/partition.hpp"
#include "gridsynth/primary_net.hpp"
#include "gridsynth/secondary.hpp"

namespace gridsynth {

/// Every tunable of a run. Read from a `key = value` file (`#` comments,
/// `[section]` headers ignored, optional quotes) and then overridden by
/// flags.
struct Config {
  // mapping
  double padding_m = 100.0;
  double spacing_m = 50.0;
  std::size_t residences_per_transformer = 8;
  // secondary
  double lambda_m = 50.0;
  double secondary_capacity_kw = 100.0;
  // partition
  std::size_t max_nodes = 700;
  double max_community_load_kw = 0.0;  // 0 disables the load limit
  // primary
  double line_capacity_kw = 400.0;
  double feeder_capacity_kw = 1000.0;
  double v_min = 0.95;
  double v_max = 1.05;
  bool strengthen = true;
  // electrical
  double primary_ohm_per_km = 0.33;
  double secondary_ohm_per_km = 0.52;
  double s_base_kva = 1000.0;
  double primary_kv = 12.47;
  double secondary_kv = 0.24;
  // solver
  std::size_t node_limit = 1'000'000;
  double integrality_tol = 1e-6;
  double feasibility_tol = 1e-6;
  double gap_tol = 1e-6;  // relative
  // scenario generator
  std::uint64_t seed = 1;
  std::size_t n_res = 500;
  std::size_t n_sub = 3;
  double extent_km = 2.1;
  std::string road_style = "grid";

  /// Names accepted by set(), in file order.
  static const std::vector<std::string>& keys();
  /// Throws ValidationError for an unknown key or a malformed value.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  /// Applies every assignment in the file on top of the current values.
  void load(const std::filesystem::path& path);
  /// Positive magnitudes, v_min < v_max, a known road style.
  void validate() const;
  /// The effective configuration in the file syntax.
  std::string to_text() const;

  MappingOptions mapping() const;
  SecondaryOptions secondary() const;
  CommunityStop community_stop() const;
  Electrical electrical() const;
  PrimaryOptions primary() const;
  StitchCapacities capacities() const;
  milp::MilpOptions milp() const;
  GeneratorOptions generator() const;
};

}  // namespace gridsynth
