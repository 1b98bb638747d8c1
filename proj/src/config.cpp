#include "gridsynth/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "gridsynth/errors.hpp"
#include "internal/csv.hpp"

namespace gridsynth {

namespace {

struct Field {
  std::string name;
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ValidationError("config " + key + ": '" + v + "' is not a number");
  }
  return out;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ValidationError("config " + key + ": '" + v + "' is not a non-negative integer");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("config " + key + ": '" + v + "' is not a boolean");
}

template <typename T>
Field field(const std::string& name, T Config::*member) {
  Field f;
  f.name = name;
  f.set = [name, member](Config& c, const std::string& v) {
    if constexpr (std::is_same_v<T, double>) {
      c.*member = parse_double(name, v);
    } else if constexpr (std::is_same_v<T, bool>) {
      c.*member = parse_bool(name, v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      c.*member = v;
    } else {
      c.*member = static_cast<T>(parse_unsigned(name, v));
    }
  };
  f.get = [member](const Config& c) -> std::string {
    if constexpr (std::is_same_v<T, double>) {
      return internal::format_double(c.*member);
    } else if constexpr (std::is_same_v<T, bool>) {
      return c.*member ? "true" : "false";
    } else if constexpr (std::is_same_v<T, std::string>) {
      return "\"" + c.*member + "\"";
    } else {
      return std::to_string(c.*member);
    }
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all{
      field("padding_m", &Config::padding_m),
      field("spacing_m", &Config::spacing_m),
      field("residences_per_transformer", &Config::residences_per_transformer),
      field("lambda_m", &Config::lambda_m),
      field("secondary_capacity_kw", &Config::secondary_capacity_kw),
      field("max_nodes", &Config::max_nodes),
      field("max_community_load_kw", &Config::max_community_load_kw),
      field("line_capacity_kw", &Config::line_capacity_kw),
      field("feeder_capacity_kw", &Config::feeder_capacity_kw),
      field("v_min", &Config::v_min),
      field("v_max", &Config::v_max),
      field("strengthen", &Config::strengthen),
      field("primary_ohm_per_km", &Config::primary_ohm_per_km),
      field("secondary_ohm_per_km", &Config::secondary_ohm_per_km),
      field("s_base_kva", &Config::s_base_kva),
      field("primary_kv", &Config::primary_kv),
      field("secondary_kv", &Config::secondary_kv),
      field("node_limit", &Config::node_limit),
      field("integrality_tol", &Config::integrality_tol),
      field("feasibility_tol", &Config::feasibility_tol),
      field("gap_tol", &Config::gap_tol),
      field("seed", &Config::seed),
      field("n_res", &Config::n_res),
      field("n_sub", &Config::n_sub),
      field("extent_km", &Config::extent_km),
      field("road_style", &Config::road_style),
  };
  return all;
}

const Field& find_field(const std::string& key) {
  for (const Field& f : fields()) {
    if (f.name == key) return f;
  }
  throw ValidationError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const Field& f : fields()) out.push_back(f.name);
    return out;
  }();
  return names;
}

void Config::set(const std::string& key, const std::string& value) { find_field(key).set(*this, value); }

std::string Config::get(const std::string& key) const { return find_field(key).get(*this); }

void Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // A '#' inside quotes is part of the value.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.erase(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path.filename().string() + " line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    try {
      set(trim(line.substr(0, eq)), value);
    } catch (const ValidationError& e) {
      throw ValidationError(path.filename().string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void Config::validate() const {
  auto positive = [](const char* name, double v) {
    if (!(v > 0.0)) throw ValidationError(std::string("config ") + name + " must be positive");
  };
  positive("padding_m", padding_m);
  positive("spacing_m", spacing_m);
  positive("residences_per_transformer", static_cast<double>(residences_per_transformer));
  positive("lambda_m", lambda_m);
  positive("secondary_capacity_kw", secondary_capacity_kw);
  positive("max_nodes", static_cast<double>(max_nodes));
  if (max_community_load_kw < 0.0) throw ValidationError("config max_community_load_kw must not be negative");
  positive("line_capacity_kw", line_capacity_kw);
  positive("feeder_capacity_kw", feeder_capacity_kw);
  positive("v_min", v_min);
  positive("v_max", v_max);
  if (!(v_min < v_max)) throw ValidationError("config v_min must be below v_max");
  positive("primary_ohm_per_km", primary_ohm_per_km);
  positive("secondary_ohm_per_km", secondary_ohm_per_km);
  positive("s_base_kva", s_base_kva);
  positive("primary_kv", primary_kv);
  positive("secondary_kv", secondary_kv);
  positive("node_limit", static_cast<double>(node_limit));
  positive("integrality_tol", integrality_tol);
  positive("feasibility_tol", feasibility_tol);
  positive("gap_tol", gap_tol);
  positive("n_res", static_cast<double>(n_res));
  positive("n_sub", static_cast<double>(n_sub));
  positive("extent_km", extent_km);
  parse_road_style(road_style);
}

std::string Config::to_text() const {
  std::ostringstream os;
  for (const Field& f : fields()) os << f.name << " = " << f.get(*this) << '\n';
  return os.str();
}

MappingOptions Config::mapping() const {
  MappingOptions o;
  o.padding_m = padding_m;
  o.spacing_m = spacing_m;
  o.residences_per_transformer = residences_per_transformer;
  return o;
}

SecondaryOptions Config::secondary() const { return {lambda_m, secondary_capacity_kw}; }

CommunityStop Config::community_stop() const {
  CommunityStop s;
  s.max_nodes = max_nodes;
  if (max_community_load_kw > 0.0) s.max_load_kw = max_community_load_kw;
  return s;
}

Electrical Config::electrical() const {
  Electrical e;
  e.s_base_kva = s_base_kva;
  e.primary_kv = primary_kv;
  e.secondary_kv = secondary_kv;
  e.primary_ohm_per_km = primary_ohm_per_km;
  e.secondary_ohm_per_km = secondary_ohm_per_km;
  return e;
}

PrimaryOptions Config::primary() const {
  PrimaryOptions o;
  o.line_capacity_kw = line_capacity_kw;
  o.feeder_capacity_kw = feeder_capacity_kw;
  o.v_min = v_min;
  o.v_max = v_max;
  o.electrical = electrical();
  o.strengthen = strengthen;
  return o;
}

StitchCapacities Config::capacities() const { return {feeder_capacity_kw, line_capacity_kw, secondary_capacity_kw}; }

milp::MilpOptions Config::milp() const {
  milp::MilpOptions o;
  o.node_limit = node_limit;
  o.tol.integrality = integrality_tol;
  o.tol.feasibility = feasibility_tol;
  o.tol.gap = gap_tol;
  return o;
}

GeneratorOptions Config::generator() const {
  GeneratorOptions g;
  g.seed = seed;
  g.n_res = n_res;
  g.n_sub = n_sub;
  g.extent_km = extent_km;
  g.style = parse_road_style(road_style);
  return g;
}

}  // namespace gridsynth
