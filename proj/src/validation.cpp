#include "tmcsim/validation.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tmcsim/error.hpp"
#include "xml_sax.hpp"

namespace tmcsim {

using detail::parse_double;

namespace {

std::vector<std::string> split_edges(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  for (std::string edge; in >> edge;) out.push_back(edge);
  return out;
}

}  // namespace

VehrouteParse parse_vehroutes(std::string_view xml_text) {
  VehrouteParse out;
  std::optional<VehrouteRecord> current;
  bool depart_ok = true;

  detail::parse_xml(
      xml_text,
      {[&](std::string_view name, const detail::XmlAttributes& attrs) {
         if (name == "vehicle") {
           current.emplace();
           current->vehicle_id = std::string(attrs.get_or("id", ""));
           auto depart = parse_double(attrs.get_or("depart", ""));
           depart_ok = depart.has_value();
           current->depart = depart.value_or(0.0);
         } else if (name == "route" && current) {
           // inside a routeDistribution the last route is the final one
           current->edges = split_edges(attrs.get_or("edges", ""));
         }
       },
       [&](std::string_view name) {
         if (name != "vehicle" || !current) return;
         if (current->vehicle_id.empty()) {
           out.diagnostics.push_back("vehicle without id skipped");
         } else if (!depart_ok) {
           out.diagnostics.push_back("vehicle '" + current->vehicle_id +
                                     "' has no numeric depart; skipped");
         } else if (current->edges.empty()) {
           out.diagnostics.push_back("vehicle '" + current->vehicle_id + "' has no route; skipped");
         } else {
           out.records.push_back(std::move(*current));
         }
         current.reset();
       }});
  return out;
}

RoutesDocument parse_routes_xml(std::string_view xml_text) {
  RoutesDocument doc;
  auto number = [](const detail::XmlAttributes& attrs, std::string_view name,
                   const std::string& owner) {
    auto value = parse_double(attrs.get_or(name, ""));
    if (!value) {
      throw Error(ErrorCategory::parse, owner + ": missing or non-numeric " + std::string(name));
    }
    return *value;
  };
  detail::parse_xml(
      xml_text, {[&](std::string_view name, const detail::XmlAttributes& attrs) {
                   if (name == "vType") {
                     VehicleTypeConfig vt;
                     vt.type_id = std::string(attrs.get_or("id", ""));
                     const std::string owner = "vType '" + vt.type_id + "'";
                     const auto vclass = attrs.get_or("vClass", "passenger");
                     if (vclass == "passenger") {
                       vt.vclass = VehicleClass::car;
                     } else if (vclass == "truck") {
                       vt.vclass = VehicleClass::truck;
                     } else if (vclass == "bus") {
                       vt.vclass = VehicleClass::bus;
                     } else {
                       throw Error(ErrorCategory::parse,
                                   owner + ": unsupported vClass '" + std::string(vclass) + "'");
                     }
                     vt.length = number(attrs, "length", owner);
                     vt.sigma = number(attrs, "sigma", owner);
                     auto model = car_follow_model_from_string(attrs.get_or("carFollowModel", "Krauss"));
                     if (!model) throw Error(ErrorCategory::parse, owner + ": unknown carFollowModel");
                     vt.car_follow_model = *model;
                     doc.vtypes.push_back(std::move(vt));
                   } else if (name == "flow") {
                     FlowSpec f;
                     f.flow_id = std::string(attrs.get_or("id", ""));
                     const std::string owner = "flow '" + f.flow_id + "'";
                     f.from_edge = std::string(attrs.get_or("from", ""));
                     f.to_edge = std::string(attrs.get_or("to", ""));
                     f.begin = number(attrs, "begin", owner);
                     f.end = number(attrs, "end", owner);
                     const double n = number(attrs, "number", owner);
                     if (n < 0 || n != std::floor(n)) {
                       throw Error(ErrorCategory::parse, owner + ": number must be a whole count");
                     }
                     f.count = static_cast<std::int64_t>(n);
                     f.vtype = std::string(attrs.get_or("type", ""));
                     doc.flows.push_back(std::move(f));
                   }
                 },
                 {}});
  return doc;
}

std::int64_t SimulatedCounts::count(const MovementKey& key, std::size_t bin_index) const {
  if (bin_index >= bins.size()) return 0;
  auto it = bins[bin_index].counts.find(key);
  return it == bins[bin_index].counts.end() ? 0 : it->second;
}

namespace {

SimulatedCounts empty_counts(const std::string& intersection_id, std::size_t bin_count) {
  SimulatedCounts sim;
  sim.intersection_id = intersection_id;
  for (std::size_t i = 0; i < bin_count; ++i) sim.bins.push_back({i, {}});
  return sim;
}

}  // namespace

SimulatedCounts CountReconstruction::for_intersection(const std::string& intersection_id) const {
  auto it = by_intersection.find(intersection_id);
  if (it != by_intersection.end()) return it->second;
  return empty_counts(intersection_id, bin_count);
}

CountReconstruction reconstruct_counts(const std::vector<std::string>& vehicle_ids,
                                       std::size_t bin_count) {
  CountReconstruction out;
  out.bin_count = bin_count;
  const std::set<std::string> unique(vehicle_ids.begin(), vehicle_ids.end());
  for (const auto& id : unique) {
    ParsedVehicleId parsed;
    try {
      parsed = parse_vehicle_id(id);
    } catch (const Error&) {
      out.diagnostics.push_back("vehicle id '" + id + "' is not a flow vehicle; ignored");
      continue;
    }
    if (parsed.bin_index >= bin_count) {
      out.diagnostics.push_back("vehicle id '" + id + "' names bin " +
                                std::to_string(parsed.bin_index) + " beyond " +
                                std::to_string(bin_count) + " bins; ignored");
      continue;
    }
    auto [it, inserted] = out.by_intersection.try_emplace(parsed.intersection_id);
    if (inserted) it->second = empty_counts(parsed.intersection_id, bin_count);
    ++it->second.bins[parsed.bin_index].counts[parsed.key];
  }
  return out;
}

namespace {

std::optional<double> percent(std::int64_t abs_diff, std::int64_t real) {
  if (real == 0) return std::nullopt;
  return 100.0 * static_cast<double>(abs_diff) / static_cast<double>(real);
}

}  // namespace

bool ComparisonReport::all_zero_diff() const {
  return std::all_of(rows.begin(), rows.end(), [](const ComparisonRow& r) { return r.abs_diff == 0; });
}

ComparisonReport compare(const std::vector<CountBin>& real, const SimulatedCounts& sim) {
  std::vector<const CountBin*> ordered;
  for (const auto& bin : real) {
    if (bin.intersection_id != sim.intersection_id) {
      throw Error(ErrorCategory::invalid_input, "real bin for intersection '" +
                                                    bin.intersection_id + "' compared against '" +
                                                    sim.intersection_id + "'");
    }
    ordered.push_back(&bin);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const CountBin* a, const CountBin* b) { return a->bin_start < b->bin_start; });
  if (ordered.size() != sim.bins.size()) {
    throw Error(ErrorCategory::invalid_input,
                "bin structure mismatch: " + std::to_string(ordered.size()) + " real bins vs " +
                    std::to_string(sim.bins.size()) + " simulated bins");
  }
  for (std::size_t i = 0; i < sim.bins.size(); ++i) {
    if (sim.bins[i].bin_index != i) {
      throw Error(ErrorCategory::invalid_input, "bin structure mismatch: simulated bins out of order");
    }
    if (i > 0 && ordered[i]->bin_start != ordered[i - 1]->bin_end()) {
      throw Error(ErrorCategory::invalid_input, "bin structure mismatch: real bins are not contiguous");
    }
  }

  ComparisonReport report;
  report.intersection_id = sim.intersection_id;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    std::set<MovementKey> keys;
    for (const auto& [key, count] : ordered[i]->counts) keys.insert(key);
    for (const auto& [key, count] : sim.bins[i].counts) keys.insert(key);
    for (const auto& key : keys) {
      ComparisonRow row;
      row.key = key;
      row.bin_index = i;
      row.real = ordered[i]->count(key);
      row.simulated = sim.count(key, i);
      row.abs_diff = row.real > row.simulated ? row.real - row.simulated : row.simulated - row.real;
      row.pct_diff = percent(row.abs_diff, row.real);
      report.totals.real += row.real;
      report.totals.simulated += row.simulated;
      report.rows.push_back(row);
    }
  }
  const auto& t = report.totals;
  report.totals.abs_diff = t.real > t.simulated ? t.real - t.simulated : t.simulated - t.real;
  report.totals.pct_diff = percent(report.totals.abs_diff, report.totals.real);
  return report;
}

namespace {

std::string pct_text(const std::optional<double>& pct) {
  if (!pct) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", *pct);
  return buf;
}

}  // namespace

std::string report_to_csv(const std::vector<ComparisonReport>& reports) {
  std::ostringstream out;
  out << "intersection_id,approach,turn,vclass,bin_index,real,simulated,abs_diff,pct_diff\n";
  for (const auto& report : reports) {
    for (const auto& row : report.rows) {
      out << report.intersection_id << ',' << to_string(row.key.approach) << ','
          << to_string(row.key.turn) << ',' << to_string(row.key.vclass) << ',' << row.bin_index
          << ',' << row.real << ',' << row.simulated << ',' << row.abs_diff << ','
          << pct_text(row.pct_diff) << '\n';
    }
  }
  return out.str();
}

std::string report_to_json(const std::vector<ComparisonReport>& reports) {
  using nlohmann::json;
  auto pct = [](const std::optional<double>& p) { return p ? json(*p) : json(nullptr); };
  json doc = json::array();
  for (const auto& report : reports) {
    json rows = json::array();
    for (const auto& row : report.rows) {
      rows.push_back({{"approach", to_string(row.key.approach)},
                      {"turn", to_string(row.key.turn)},
                      {"vclass", to_string(row.key.vclass)},
                      {"bin_index", row.bin_index},
                      {"real", row.real},
                      {"simulated", row.simulated},
                      {"abs_diff", row.abs_diff},
                      {"pct_diff", pct(row.pct_diff)}});
    }
    doc.push_back({{"intersection_id", report.intersection_id},
                   {"rows", std::move(rows)},
                   {"totals",
                    {{"real", report.totals.real},
                     {"simulated", report.totals.simulated},
                     {"abs_diff", report.totals.abs_diff},
                     {"pct_diff", pct(report.totals.pct_diff)}}}});
  }
  return doc.dump(2) + "\n";
}

FlowDerivedCounts counts_from_flows(const std::vector<FlowSpec>& flows, Timestamp t0) {
  FlowDerivedCounts out;
  if (flows.empty()) return out;
  const double duration = flows.front().end - flows.front().begin;
  if (!(duration > 0.0) || duration != std::floor(duration)) {
    throw Error(ErrorCategory::invalid_input, "flows do not describe whole-second bins");
  }
  double latest_end = 0.0;
  std::map<std::string, std::map<std::size_t, std::map<MovementKey, std::int64_t>>> sums;
  for (const auto& f : flows) {
    if (f.end - f.begin != duration) {
      throw Error(ErrorCategory::invalid_input, "flow '" + f.flow_id + "' has a different bin length");
    }
    ParsedVehicleId parsed;
    try {
      parsed = parse_vehicle_id(f.flow_id);
    } catch (const Error&) {
      out.diagnostics.push_back("flow '" + f.flow_id + "' does not follow the flow id grammar; ignored");
      continue;
    }
    if (f.begin != static_cast<double>(parsed.bin_index) * duration) {
      throw Error(ErrorCategory::invalid_input,
                  "flow '" + f.flow_id + "' begin does not match its bin index");
    }
    sums[parsed.intersection_id][parsed.bin_index][parsed.key] += f.count;
    latest_end = std::max(latest_end, f.end);
  }
  out.bin_count = static_cast<std::size_t>(std::llround(latest_end / duration));
  const auto step = std::chrono::seconds{static_cast<long long>(duration)};
  for (const auto& [id, per_bin] : sums) {
    auto& bins = out.bins_by_intersection[id];
    for (std::size_t i = 0; i < out.bin_count; ++i) {
      CountBin bin;
      bin.intersection_id = id;
      bin.bin_start = t0 + step * static_cast<long long>(i);
      bin.duration = step;
      if (auto it = per_bin.find(i); it != per_bin.end()) bin.counts = it->second;
      bins.push_back(std::move(bin));
    }
  }
  return out;
}

}  // namespace tmcsim
