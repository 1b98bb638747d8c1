#include <algorithm>
#include <charconv>

#include "gridsynth/errors.hpp"
#include "gridsynth/secondary.hpp"
#include "internal/csv.hpp"

namespace gridsynth {

SecondaryLayer flatten(std::span<const SecondaryNetwork> networks) {
  SecondaryLayer layer;
  for (const SecondaryNetwork& net : networks) {
    const SecondaryProblem& p = net.problem;
    const auto n_res = static_cast<int>(p.residences.size());
    for (int t : net.used_candidates) {
      const TransformerCandidate& c = p.candidates[t - n_res];
      layer.transformers.push_back({c.id, c.link, c.location, net.transformer_demand(t)});
    }
    for (const SecondaryEdge& e : net.edges) {
      const bool from_tx = p.is_candidate(e.from);
      const Id from = from_tx ? p.candidates[e.from - n_res].id : p.residences[e.from].id;
      layer.lines.push_back({p.link_id, from_tx, from, p.residences[e.to].id, e.length_m, e.flow_kw});
    }
  }
  std::sort(layer.transformers.begin(), layer.transformers.end(),
            [](const UsedTransformer& a, const UsedTransformer& b) { return a.id < b.id; });
  return layer;
}

namespace {

std::string endpoint(bool transformer, Id id) { return (transformer ? "tx:" : "res:") + std::to_string(id); }

std::pair<bool, Id> parse_endpoint(const internal::CsvTable& t, std::size_t row, const std::string& col) {
  const std::string& s = t.field(row, col);
  const auto colon = s.find(':');
  const std::string kind = s.substr(0, colon);
  Id id = 0;
  bool ok = colon != std::string::npos && (kind == "tx" || kind == "res");
  if (ok) {
    auto [ptr, ec] = std::from_chars(s.data() + colon + 1, s.data() + s.size(), id);
    ok = ec == std::errc() && ptr == s.data() + s.size();
  }
  if (!ok) throw ValidationError(t.where(row) + ": column '" + col + "' must look like tx:N or res:N, got '" + s + "'");
  return {kind == "tx", id};
}

}  // namespace

void write_secondary_layer(const SecondaryLayer& layer, const std::filesystem::path& transformers_csv,
                           const std::filesystem::path& lines_csv) {
  using internal::format_double;
  std::ofstream tx = internal::open_for_write(transformers_csv);
  tx << "tx_id,link_id,lon,lat,demand_kw\n";
  for (const auto& t : layer.transformers) {
    tx << t.id << ',' << t.link << ',' << format_double(t.location.lon) << ',' << format_double(t.location.lat)
       << ',' << format_double(t.demand_kw) << '\n';
  }
  std::ofstream ln = internal::open_for_write(lines_csv);
  ln << "link_id,from,to,length_m,flow_kw\n";
  for (const auto& l : layer.lines) {
    ln << l.link << ',' << endpoint(l.from_transformer, l.from) << ',' << endpoint(false, l.to) << ','
       << format_double(l.length_m) << ',' << format_double(l.flow_kw) << '\n';
  }
}

SecondaryLayer read_secondary_layer(const std::filesystem::path& transformers_csv,
                                    const std::filesystem::path& lines_csv) {
  SecondaryLayer layer;
  const auto tx = internal::CsvTable::read(transformers_csv, {"tx_id", "link_id", "lon", "lat", "demand_kw"});
  for (std::size_t r = 0; r < tx.rows(); ++r) {
    layer.transformers.push_back({internal::parse_int(tx, r, "tx_id"), internal::parse_int(tx, r, "link_id"),
                                  geo::GeoPoint(internal::parse_number(tx, r, "lon"), internal::parse_number(tx, r, "lat")),
                                  internal::parse_number(tx, r, "demand_kw")});
  }
  std::sort(layer.transformers.begin(), layer.transformers.end(),
            [](const UsedTransformer& a, const UsedTransformer& b) { return a.id < b.id; });
  for (std::size_t r = 1; r < layer.transformers.size(); ++r) {
    if (layer.transformers[r].id == layer.transformers[r - 1].id) {
      throw ValidationError(transformers_csv.filename().string() + ": duplicate transformer " +
                            std::to_string(layer.transformers[r].id));
    }
  }
  const auto ln = internal::CsvTable::read(lines_csv, {"link_id", "from", "to", "length_m", "flow_kw"});
  for (std::size_t r = 0; r < ln.rows(); ++r) {
    const auto [from_tx, from] = parse_endpoint(ln, r, "from");
    const auto [to_tx, to] = parse_endpoint(ln, r, "to");
    if (to_tx) throw ValidationError(ln.where(r) + ": a secondary line must end at a residence");
    layer.lines.push_back({internal::parse_int(ln, r, "link_id"), from_tx, from, to,
                           internal::parse_number(ln, r, "length_m"), internal::parse_number(ln, r, "flow_kw")});
  }
  return layer;
}

}  // namespace gridsynth
