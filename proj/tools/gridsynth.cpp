// Command-line front end: one subcommand per pipeline stage plus the full
// pipeline and network comparison. Every stage reads and writes files in a
// work directory so runs can resume mid-way.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "gridsynth/errors.hpp"
#include "gridsynth/geojson.hpp"
#include "gridsynth/pipeline.hpp"

namespace fs = std::filesystem;
using namespace gridsynth;

namespace {

std::string flag_name(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  return "--" + key;
}

struct Globals {
  std::optional<fs::path> config_file;
  std::vector<std::string> assignments;      // --set key=value
  std::map<std::string, std::string> flags;  // --key value
};

Config resolve_config(const Globals& g) {
  Config c;
  if (g.config_file) c.load(*g.config_file);
  for (const std::string& kv : g.assignments) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + kv + "'");
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  for (const auto& [key, value] : g.flags) c.set(key, value);
  c.validate();
  return c;
}

Scenario load_from(const fs::path& dir) {
  try {
    return load_scenario(ScenarioPaths::in_directory(dir));
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("scenario: ") + e.what());
  }
}

SecondaryLayer load_layer(const fs::path& work) {
  return read_secondary_layer(work / artifacts::kSecondaryTransformers, work / artifacts::kSecondaryLines);
}

void print_report(const OperationalReport& r) {
  std::cout << "voltage range [" << r.min_voltage << ", " << r.max_voltage << "] pu, max loading " << r.max_loading
            << " (feeders " << r.max_feeder_loading << ", leaf secondaries " << r.max_leaf_secondary_loading << "), "
            << r.violations.size() << " operational violation(s)\n";
  for (std::size_t i = 0; i < std::min<std::size_t>(r.violations.size(), 10); ++i) {
    std::cout << "  " << r.violations[i] << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gridsynth: synthetic distribution networks from roads, residences and substations"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_file, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", g.assignments, "override one setting, key=value (repeatable)");
  for (const std::string& key : Config::keys()) {
    app.add_option_function<std::string>(
           flag_name(key), [&g, key](const std::string& v) { g.flags[key] = v; },
           "override config key " + key + " (default " + Config{}.get(key) + ")")
        ->group("Config overrides");
  }

  fs::path scenario_dir, work_dir = "out", out_path;
  std::optional<fs::path> pipeline_scenario;
  fs::path net_a, net_b;

  auto* gen = app.add_subcommand("gen-scenario", "generate a synthetic scenario (roads, substations, residences)");
  gen->add_option("--out", out_path, "output directory")->required();

  auto add_stage = [&](const char* name, const char* help) {
    auto* sc = app.add_subcommand(name, help);
    sc->add_option("--scenario", scenario_dir, "scenario directory")->required()->check(CLI::ExistingDirectory);
    sc->add_option("--work", work_dir, "work directory for artifacts")->capture_default_str();
    return sc;
  };
  auto* map_cmd = add_stage("map", "map residences to their nearest road link -> assignment.csv");
  auto* sec_cmd = add_stage("secondary", "solve per-link secondary networks -> secondary_*.csv, secondary.geojson");
  auto* part_cmd = add_stage("partition", "Voronoi cells and communities -> partition.csv");
  auto* prim_cmd = add_stage("primary", "solve primary networks and stitch -> network.geojson");

  auto* pf_cmd = app.add_subcommand("powerflow", "LDF on network.geojson -> voltages, flows, histograms, report");
  pf_cmd->add_option("--work", work_dir, "work directory holding network.geojson")->capture_default_str();

  auto* pipe_cmd = app.add_subcommand("pipeline", "run every stage; generates a scenario when none is given");
  pipe_cmd->add_option("--scenario", pipeline_scenario, "scenario directory")->check(CLI::ExistingDirectory);
  pipe_cmd->add_option("--work", work_dir, "work directory for artifacts")->capture_default_str();

  auto* cmp_cmd = app.add_subcommand("compare", "compare residence voltages of two networks");
  cmp_cmd->add_option("a", net_a, "network GeoJSON A")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("b", net_b, "network GeoJSON B")->required()->check(CLI::ExistingFile);
  cmp_cmd->add_option("--out", out_path, "comparison JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const Config config = resolve_config(g);

    if (*gen) {
      const Scenario sc = generate_scenario(config.generator());
      write_scenario(sc, ScenarioPaths::in_directory(out_path));
      std::cout << "wrote " << sc.residences.size() << " residences, " << sc.roads.links().size() << " links, "
                << sc.substations.size() << " substations to " << out_path.string() << '\n';
    } else if (*map_cmd) {
      const Scenario sc = load_from(scenario_dir);
      const LinkAssignment a = run_map_stage(sc, config);
      write_assignment_csv(a, work_dir / artifacts::kAssignment);
      std::cout << "mapped " << a.link_of.size() << " residences onto " << a.residents.size() << " links\n";
    } else if (*sec_cmd) {
      const Scenario sc = load_from(scenario_dir);
      const LinkAssignment a = read_assignment_csv(work_dir / artifacts::kAssignment);
      const SecondaryLayer layer = run_secondary_stage(sc, a, config);
      write_secondary_layer(layer, work_dir / artifacts::kSecondaryTransformers, work_dir / artifacts::kSecondaryLines);
      write_secondary_geojson(layer, sc, work_dir / artifacts::kSecondaryGeojson);
      std::cout << layer.transformers.size() << " transformers, " << layer.lines.size() << " secondary lines\n";
    } else if (*part_cmd) {
      const Scenario sc = load_from(scenario_dir);
      const PartitionStage p = run_partition_stage(sc, load_layer(work_dir), config);
      write_partition_csv(p.graph, p.map, work_dir / artifacts::kPartition);
      std::cout << p.graph.nodes().size() << " graph nodes in " << p.map.num_communities() << " communities\n";
    } else if (*prim_cmd) {
      const Scenario sc = load_from(scenario_dir);
      const SecondaryLayer layer = load_layer(work_dir);
      const PartitionStage p = load_partition_stage(sc, layer, config, work_dir / artifacts::kPartition);
      const PrimaryStage prim = run_primary_stage(sc, layer, p, config);
      write_network_geojson(prim.network, work_dir / artifacts::kNetwork);
      double total = 0.0;
      for (const auto& s : prim.solutions) total += s.objective;
      std::cout << prim.solutions.size() << " primary networks, objective " << total << ", "
                << prim.network.nodes.size() << " nodes, " << prim.network.edges.size() << " edges\n";
    } else if (*pf_cmd) {
      DistributionNetwork net = read_network_geojson(work_dir / artifacts::kNetwork);
      const PowerflowStage pf = run_powerflow_stage(net, config);
      apply(net, pf.flows);
      write_network_geojson(net, work_dir / artifacts::kNetwork);
      write_powerflow_artifacts(net, pf, work_dir);
      print_report(pf.report);
    } else if (*pipe_cmd) {
      Scenario sc;
      if (pipeline_scenario) {
        sc = load_from(*pipeline_scenario);
      } else {
        sc = generate_scenario(config.generator());
        write_scenario(sc, ScenarioPaths::in_directory(work_dir / "scenario"));
      }
      const PipelineResult r = run_pipeline(sc, config, work_dir);
      std::cout << r.primary.network.nodes.size() << " nodes, " << r.primary.network.edges.size() << " edges in "
                << r.partition.map.num_communities() << " communities; artifacts in " << work_dir.string() << '\n';
      print_report(r.powerflow.report);
    } else if (*cmp_cmd) {
      const ComparisonReport rep = compare(read_network_geojson(net_a), read_network_geojson(net_b));
      write_comparison_json(rep, out_path);
      std::cout << rep.residences.size() << " residences, max |dv| " << rep.max_abs_deviation << " pu, "
                << 100.0 * rep.fraction_within_1pct << "% within 0.01 pu\n";
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
}
