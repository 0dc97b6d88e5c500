#include "tmcsim/demand.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "tmcsim/error.hpp"
#include "xml_sax.hpp"

namespace tmcsim {

using detail::format_number;
using detail::xml_escape;

std::string_view to_string(CarFollowModel model) {
  switch (model) {
    case CarFollowModel::Krauss: return "Krauss";
    case CarFollowModel::KraussOrig: return "KraussOrig1";
    case CarFollowModel::IDM: return "IDM";
    case CarFollowModel::Wiedemann: return "Wiedemann";
  }
  return "Krauss";
}

std::optional<CarFollowModel> car_follow_model_from_string(std::string_view text) {
  if (text == "Krauss") return CarFollowModel::Krauss;
  if (text == "KraussOrig1" || text == "KraussOrig") return CarFollowModel::KraussOrig;
  if (text == "IDM") return CarFollowModel::IDM;
  if (text == "Wiedemann") return CarFollowModel::Wiedemann;
  return std::nullopt;
}

std::vector<VehicleTypeConfig> default_vehicle_types() {
  return {
      {"car", VehicleClass::car, 5.0, 0.5, CarFollowModel::Krauss},
      {"truck", VehicleClass::truck, 7.1, 0.5, CarFollowModel::Krauss},
      {"bus", VehicleClass::bus, 12.0, 0.5, CarFollowModel::Krauss},
  };
}

void validate(const VehicleTypeConfig& vtype) {
  if (vtype.type_id.empty()) throw Error(ErrorCategory::invalid_input, "vehicle type without id");
  if (!(vtype.length > 0.0) || !std::isfinite(vtype.length)) {
    throw Error(ErrorCategory::invalid_input,
                "vehicle type '" + vtype.type_id + "': length must be positive");
  }
  if (!(vtype.sigma >= 0.0 && vtype.sigma <= 1.0)) {
    throw Error(ErrorCategory::invalid_input,
                "vehicle type '" + vtype.type_id + "': sigma must be within [0, 1]");
  }
}

std::string_view simulator_vclass(VehicleClass vclass) {
  switch (vclass) {
    case VehicleClass::car: return "passenger";
    case VehicleClass::truck: return "truck";
    case VehicleClass::bus: return "bus";
  }
  return "passenger";
}

Cardinal movement_exit_direction(Cardinal approach, Turn turn) {
  // Cardinal values run counterclockwise, so +1 is a left turn.
  const int heading = static_cast<int>(approach);
  switch (turn) {
    case Turn::left: return static_cast<Cardinal>((heading + 1) % 4);
    case Turn::right: return static_cast<Cardinal>((heading + 3) % 4);
    case Turn::through: break;
  }
  return approach;
}

namespace {

constexpr char approach_letter(Cardinal c) {
  switch (c) {
    case Cardinal::north: return 'N';
    case Cardinal::east: return 'E';
    case Cardinal::south: return 'S';
    case Cardinal::west: return 'W';
  }
  return '?';
}

constexpr char turn_letter(Turn t) {
  switch (t) {
    case Turn::left: return 'L';
    case Turn::through: return 'T';
    case Turn::right: return 'R';
  }
  return '?';
}

void sort_flows(std::vector<FlowSpec>& flows) {
  std::sort(flows.begin(), flows.end(), [](const FlowSpec& a, const FlowSpec& b) {
    if (a.begin != b.begin) return a.begin < b.begin;
    return a.flow_id < b.flow_id;
  });
}

}  // namespace

std::string encode_flow_id(std::string_view intersection_id, const MovementKey& key,
                           std::size_t bin_index) {
  if (intersection_id.empty() || intersection_id.find_first_of("_.") != std::string_view::npos) {
    throw Error(ErrorCategory::invalid_input,
                "intersection id '" + std::string(intersection_id) +
                    "' cannot be encoded in a flow id (empty or contains '_' or '.')");
  }
  std::string id = "f_";
  id += intersection_id;
  id += '_';
  id += approach_letter(key.approach);
  id += turn_letter(key.turn);
  id += '_';
  id += to_string(key.vclass);
  id += '_';
  id += std::to_string(bin_index);
  return id;
}

ParsedVehicleId parse_vehicle_id(std::string_view vehicle_id) {
  auto fail = [&]() -> ParsedVehicleId {
    throw Error(ErrorCategory::parse,
                "vehicle id '" + std::string(vehicle_id) + "' does not follow the flow id grammar");
  };
  auto all_digits = [](std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };

  std::string_view flow = vehicle_id;
  if (auto dot = flow.find('.'); dot != std::string_view::npos) {
    if (!all_digits(flow.substr(dot + 1))) return fail();
    flow = flow.substr(0, dot);
  }
  std::vector<std::string_view> parts;
  for (std::size_t start = 0;;) {
    auto sep = flow.find('_', start);
    parts.push_back(flow.substr(start, sep == std::string_view::npos ? sep : sep - start));
    if (sep == std::string_view::npos) break;
    start = sep + 1;
  }
  if (parts.size() != 5 || parts[0] != "f" || parts[1].empty() || parts[2].size() != 2 ||
      !all_digits(parts[4])) {
    return fail();
  }

  ParsedVehicleId out;
  out.intersection_id = std::string(parts[1]);
  switch (parts[2][0]) {
    case 'N': out.key.approach = Cardinal::north; break;
    case 'E': out.key.approach = Cardinal::east; break;
    case 'S': out.key.approach = Cardinal::south; break;
    case 'W': out.key.approach = Cardinal::west; break;
    default: return fail();
  }
  switch (parts[2][1]) {
    case 'L': out.key.turn = Turn::left; break;
    case 'T': out.key.turn = Turn::through; break;
    case 'R': out.key.turn = Turn::right; break;
    default: return fail();
  }
  auto vclass = vehicle_class_from_string(parts[3]);
  if (!vclass) return fail();
  out.key.vclass = *vclass;
  auto [ptr, ec] = std::from_chars(parts[4].data(), parts[4].data() + parts[4].size(), out.bin_index);
  if (ec != std::errc{}) return fail();
  return out;
}

CompiledDemand compile_flows(const IntersectionBinding& binding, const std::vector<CountBin>& bins,
                             const std::vector<VehicleTypeConfig>& vtypes, Timestamp t0) {
  CompiledDemand out;
  std::vector<const CountBin*> ordered;
  for (const auto& bin : bins) ordered.push_back(&bin);
  std::sort(ordered.begin(), ordered.end(),
            [](const CountBin* a, const CountBin* b) { return a->bin_start < b->bin_start; });

  auto vtype_for = [&](VehicleClass vclass) -> const VehicleTypeConfig* {
    for (const auto& vt : vtypes) {
      if (vt.vclass == vclass) return &vt;
    }
    return nullptr;
  };

  std::set<std::string> reported;
  auto note_once = [&](const std::string& message) {
    if (reported.insert(message).second) out.diagnostics.push_back(message);
  };

  for (const CountBin* bin : ordered) {
    if (bin->intersection_id != binding.source_id) {
      throw Error(ErrorCategory::invalid_input, "bin for intersection '" + bin->intersection_id +
                                                    "' passed with binding for '" +
                                                    binding.source_id + "'");
    }
    if (bin->duration.count() <= 0) {
      throw Error(ErrorCategory::invalid_input, "bin with non-positive duration");
    }
    const auto offset = bin->bin_start - t0;
    if (offset.count() < 0 || offset % bin->duration != std::chrono::seconds{0}) {
      throw Error(ErrorCategory::invalid_input,
                  "bin " + format_timestamp(bin->bin_start) + " is before t0 or off the bin grid");
    }
    const auto bin_index = static_cast<std::size_t>(offset / bin->duration);
    const double begin = static_cast<double>(offset.count());
    const double end = begin + static_cast<double>(bin->duration.count());

    for (const auto& [key, count] : bin->counts) {
      if (count <= 0) continue;
      const Cardinal exit = movement_exit_direction(key.approach, key.turn);
      const auto from = binding.mapping.representative_incoming(key.approach);
      const auto to = binding.mapping.representative_outgoing(exit);
      const VehicleTypeConfig* vtype = vtype_for(key.vclass);

      std::string reason;
      if (!from) {
        reason = "no incoming edge for cardinal " + std::string(to_string(key.approach));
      } else if (!to) {
        reason = "no outgoing edge for cardinal " + std::string(to_string(exit));
      } else if (vtype == nullptr) {
        reason = "no vehicle type for class " + std::string(to_string(key.vclass));
      }
      if (!reason.empty()) {
        out.dropped.push_back({key, bin_index, count, reason});
        note_once("intersection " + binding.source_id + ", movement " + to_string(key) + ": " +
                  reason + "; movement dropped");
        continue;
      }

      FlowSpec flow;
      flow.flow_id = encode_flow_id(binding.source_id, key, bin_index);
      flow.from_edge = *from;
      flow.to_edge = *to;
      flow.begin = begin;
      flow.end = end;
      flow.count = count;
      flow.vtype = vtype->type_id;
      out.flows.push_back(std::move(flow));
    }
  }
  sort_flows(out.flows);
  return out;
}

std::string emit_routes_xml(const std::vector<FlowSpec>& flows,
                            const std::vector<VehicleTypeConfig>& vtypes) {
  std::set<std::string> type_ids;
  for (const auto& vt : vtypes) {
    validate(vt);
    if (!type_ids.insert(vt.type_id).second) {
      throw Error(ErrorCategory::invalid_input, "duplicate vehicle type '" + vt.type_id + "'");
    }
  }
  std::set<std::string> flow_ids;
  for (const auto& f : flows) {
    if (!flow_ids.insert(f.flow_id).second) {
      throw Error(ErrorCategory::invalid_input, "duplicate flow id '" + f.flow_id + "'");
    }
  }
  std::vector<FlowSpec> sorted = flows;
  sort_flows(sorted);

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<routes xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" "
         "xsi:noNamespaceSchemaLocation=\"http://sumo.dlr.de/xsd/routes_file.xsd\">\n";
  for (const auto& vt : vtypes) {
    out << "    <vType id=\"" << xml_escape(vt.type_id) << "\" vClass=\""
        << simulator_vclass(vt.vclass) << "\" length=\"" << format_number(vt.length)
        << "\" sigma=\"" << format_number(vt.sigma) << "\" carFollowModel=\""
        << to_string(vt.car_follow_model) << "\"/>\n";
  }
  for (const auto& f : sorted) {
    out << "    <flow id=\"" << xml_escape(f.flow_id) << "\" from=\"" << xml_escape(f.from_edge)
        << "\" to=\"" << xml_escape(f.to_edge) << "\" begin=\"" << format_number(f.begin)
        << "\" end=\"" << format_number(f.end) << "\" number=\"" << f.count << "\" type=\""
        << xml_escape(f.vtype) << "\"/>\n";
  }
  out << "</routes>\n";
  return out.str();
}

std::int64_t simulation_steps(const ScenarioConfig& sc) {
  return static_cast<std::int64_t>(std::llround((sc.end - sc.begin) / sc.step_length));
}

std::string emit_sumocfg(const ScenarioConfig& sc) {
  if (sc.network_path.empty() || sc.route_path.empty()) {
    throw Error(ErrorCategory::invalid_input, "scenario config needs network and route paths");
  }
  if (!(sc.begin < sc.end)) {
    throw Error(ErrorCategory::invalid_input, "scenario begin must precede end");
  }
  if (!(sc.step_length > 0.0)) {
    throw Error(ErrorCategory::invalid_input, "step length must be positive");
  }
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<configuration xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" "
         "xsi:noNamespaceSchemaLocation=\"http://sumo.dlr.de/xsd/sumoConfiguration.xsd\">\n";
  out << "    <input>\n";
  out << "        <net-file value=\"" << xml_escape(sc.network_path) << "\"/>\n";
  out << "        <route-files value=\"" << xml_escape(sc.route_path) << "\"/>\n";
  out << "    </input>\n";
  out << "    <time>\n";
  out << "        <begin value=\"" << format_number(sc.begin) << "\"/>\n";
  out << "        <end value=\"" << format_number(sc.end) << "\"/>\n";
  out << "        <step-length value=\"" << format_number(sc.step_length) << "\"/>\n";
  out << "    </time>\n";
  if (sc.vehroute_output) {
    out << "    <output>\n";
    out << "        <vehroute-output value=\"" << xml_escape(sc.vehroute_path) << "\"/>\n";
    out << "        <vehroute-output.write-unfinished value=\"true\"/>\n";
    out << "    </output>\n";
  }
  out << "</configuration>\n";
  return out.str();
}

}  // namespace tmcsim
