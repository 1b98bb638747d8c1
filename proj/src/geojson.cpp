#include "gridsynth/geojson.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "gridsynth/errors.hpp"
#include "internal/csv.hpp"

namespace gridsynth {

using nlohmann::json;

namespace {

json point(const geo::GeoPoint& p) { return json::array({p.lon, p.lat}); }

json feature(json geometry, json properties) {
  return {{"type", "Feature"}, {"geometry", std::move(geometry)}, {"properties", std::move(properties)}};
}

std::pair<NodeKind, Id> parse_label(const std::string& label) {
  const auto colon = label.find(':');
  if (colon == std::string::npos) throw ValidationError("node id '" + label + "' lacks a kind prefix");
  const std::string prefix = label.substr(0, colon);
  Id id = 0;
  try {
    std::size_t used = 0;
    id = std::stoll(label.substr(colon + 1), &used);
    if (used != label.size() - colon - 1) throw std::invalid_argument(label);
  } catch (const std::exception&) {
    throw ValidationError("node id '" + label + "' has no numeric part");
  }
  if (prefix == "sub") return {NodeKind::Substation, id};
  if (prefix == "road") return {NodeKind::Transfer, id};
  if (prefix == "tx") return {NodeKind::Transformer, id};
  if (prefix == "res") return {NodeKind::Residence, id};
  throw ValidationError("node id '" + label + "' has an unknown prefix");
}

template <typename T>
T member(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError(where + ": missing '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(where + ": '" + key + "' has the wrong type");
  }
}

void write_text(const std::string& text, const std::filesystem::path& path) {
  std::ofstream out = internal::open_for_write(path);
  out << text;
}

}  // namespace

std::string network_to_geojson(const DistributionNetwork& net) {
  json features = json::array();
  for (const NetNode& n : net.nodes) {
    features.push_back(feature({{"type", "Point"}, {"coordinates", point(n.location)}},
                               {{"id", n.label()},
                                {"kind", to_string(n.kind)},
                                {"demand_kw", n.demand_kw},
                                {"voltage_pu", n.voltage_pu}}));
  }
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const NetEdge& edge = net.edges[e];
    const NetNode& a = net.nodes[edge.from];
    const NetNode& b = net.nodes[edge.to];
    features.push_back(feature({{"type", "LineString"}, {"coordinates", json::array({point(a.location), point(b.location)})}},
                               {{"id", e + 1},
                                {"kind", to_string(edge.kind)},
                                {"from", a.label()},
                                {"to", b.label()},
                                {"length_m", edge.length_m},
                                {"resistance_ohm", edge.resistance_ohm},
                                {"capacity_kw", edge.capacity_kw},
                                {"flow_kw", edge.flow_kw}}));
  }
  const Electrical& el = net.electrical;
  json doc{{"type", "FeatureCollection"},
           {"electrical",
            {{"s_base_kva", el.s_base_kva},
             {"primary_kv", el.primary_kv},
             {"secondary_kv", el.secondary_kv},
             {"primary_ohm_per_km", el.primary_ohm_per_km},
             {"secondary_ohm_per_km", el.secondary_ohm_per_km}}},
           {"features", std::move(features)}};
  return doc.dump(1) + "\n";
}

DistributionNetwork network_from_geojson(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("network GeoJSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw ValidationError("network GeoJSON: expected a FeatureCollection");
  }
  DistributionNetwork net;
  if (doc.contains("electrical")) {
    const json& el = doc["electrical"];
    const std::string w = "network GeoJSON electrical";
    net.electrical.s_base_kva = member<double>(el, "s_base_kva", w);
    net.electrical.primary_kv = member<double>(el, "primary_kv", w);
    net.electrical.secondary_kv = member<double>(el, "secondary_kv", w);
    net.electrical.primary_ohm_per_km = member<double>(el, "primary_ohm_per_km", w);
    net.electrical.secondary_ohm_per_km = member<double>(el, "secondary_ohm_per_km", w);
  }
  std::map<std::string, int> index;
  std::vector<const json*> lines;
  for (std::size_t k = 0; k < doc["features"].size(); ++k) {
    const json& f = doc["features"][k];
    const std::string where = "feature " + std::to_string(k + 1);
    if (!f.is_object() || !f.contains("geometry") || !f.contains("properties")) {
      throw ValidationError(where + ": not a Feature");
    }
    const std::string type = member<std::string>(f["geometry"], "type", where);
    if (type == "LineString") {
      lines.push_back(&f);
      continue;
    }
    if (type != "Point") throw ValidationError(where + ": unsupported geometry " + type);
    const json& p = f["properties"];
    const auto coords = member<std::vector<double>>(f["geometry"], "coordinates", where);
    if (coords.size() != 2) throw ValidationError(where + ": Point needs two coordinates");
    NetNode n;
    const std::string label = member<std::string>(p, "id", where);
    n.id = parse_label(label).second;
    n.kind = parse_node_kind(member<std::string>(p, "kind", where));
    if (parse_label(label).first != (n.kind == NodeKind::Root ? NodeKind::Transfer : n.kind)) {
      throw ValidationError(where + ": id prefix does not match kind");
    }
    n.location = geo::GeoPoint(coords[0], coords[1]);
    n.demand_kw = member<double>(p, "demand_kw", where);
    n.voltage_pu = member<double>(p, "voltage_pu", where);
    if (!index.emplace(label, static_cast<int>(net.nodes.size())).second) {
      throw ValidationError(where + ": duplicate node " + label);
    }
    net.nodes.push_back(n);
  }
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const json& p = (*lines[k])["properties"];
    const std::string where = "edge feature " + std::to_string(k + 1);
    NetEdge e;
    e.kind = parse_edge_kind(member<std::string>(p, "kind", where));
    const auto from = index.find(member<std::string>(p, "from", where));
    const auto to = index.find(member<std::string>(p, "to", where));
    if (from == index.end() || to == index.end()) throw ValidationError(where + ": endpoint is not a node feature");
    e.from = from->second;
    e.to = to->second;
    e.length_m = member<double>(p, "length_m", where);
    e.resistance_ohm = member<double>(p, "resistance_ohm", where);
    e.capacity_kw = p.contains("capacity_kw") ? member<double>(p, "capacity_kw", where) : 0.0;
    e.flow_kw = member<double>(p, "flow_kw", where);
    net.edges.push_back(e);
  }
  return net;
}

void write_network_geojson(const DistributionNetwork& net, const std::filesystem::path& path) {
  write_text(network_to_geojson(net), path);
}

DistributionNetwork read_network_geojson(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return network_from_geojson(ss.str());
}

void write_secondary_geojson(const SecondaryLayer& layer, const Scenario& scenario, const std::filesystem::path& path) {
  std::map<Id, geo::GeoPoint> tx, res;
  for (const auto& t : layer.transformers) tx[t.id] = t.location;
  for (const auto& r : scenario.residences) res[r.id] = r.location;
  json features = json::array();
  for (const auto& t : layer.transformers) {
    features.push_back(feature({{"type", "Point"}, {"coordinates", point(t.location)}},
                               {{"id", "tx:" + std::to_string(t.id)},
                                {"kind", "transformer"},
                                {"link_id", t.link},
                                {"demand_kw", t.demand_kw}}));
  }
  for (std::size_t k = 0; k < layer.lines.size(); ++k) {
    const SecondaryLine& l = layer.lines[k];
    const auto& ends = l.from_transformer ? tx : res;
    const auto a = ends.find(l.from);
    const auto b = res.find(l.to);
    if (a == ends.end() || b == res.end()) {
      throw InvariantError("secondary line " + std::to_string(k + 1) + " references an unknown endpoint");
    }
    features.push_back(feature({{"type", "LineString"}, {"coordinates", json::array({point(a->second), point(b->second)})}},
                               {{"id", k + 1},
                                {"kind", "secondary"},
                                {"link_id", l.link},
                                {"from", (l.from_transformer ? "tx:" : "res:") + std::to_string(l.from)},
                                {"to", "res:" + std::to_string(l.to)},
                                {"length_m", l.length_m},
                                {"flow_kw", l.flow_kw}}));
  }
  write_text(json{{"type", "FeatureCollection"}, {"features", std::move(features)}}.dump(1) + "\n", path);
}

}  // namespace gridsynth
