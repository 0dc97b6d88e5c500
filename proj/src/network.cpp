#include "tmcsim/network.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

#include "tmcsim/error.hpp"
#include "xml_sax.hpp"

namespace tmcsim {

using detail::format_number;
using detail::parse_double;
using detail::xml_escape;

const Junction& RoadNetwork::junction(const std::string& id) const {
  auto it = junctions.find(id);
  if (it == junctions.end()) throw Error(ErrorCategory::not_found, "unknown junction '" + id + "'");
  return it->second;
}

const Edge& RoadNetwork::edge(const std::string& id) const {
  auto it = edges.find(id);
  if (it == edges.end()) throw Error(ErrorCategory::not_found, "unknown edge '" + id + "'");
  return it->second;
}

namespace {

std::vector<double> parse_number_list(std::string_view text, std::size_t expected,
                                      const char* what) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    auto value = parse_double(text.substr(start, comma - start));
    if (!value) break;
    values.push_back(*value);
    start = comma + 1;
  }
  if (values.size() != expected) {
    throw Error(ErrorCategory::parse,
                std::string("location: bad ") + what + " '" + std::string(text) + "'");
  }
  return values;
}

double require_coordinate(const detail::XmlAttributes& attrs, std::string_view name,
                          const std::string& junction_id) {
  auto raw = attrs.get(name);
  auto value = raw ? parse_double(*raw) : std::nullopt;
  if (!value) {
    throw Error(ErrorCategory::parse, "junction '" + junction_id + "': missing or non-numeric " +
                                          std::string(name));
  }
  return *value;
}

EdgeFunction classify_function(std::string_view function) {
  // pedestrian helper edges live inside the junction like internal ones
  if (function == "internal" || function == "crossing" || function == "walkingarea") {
    return EdgeFunction::internal;
  }
  return EdgeFunction::normal;
}

class NetworkBuilder {
 public:
  void start(std::string_view name, const detail::XmlAttributes& attrs) {
    if (name == "location") {
      on_location(attrs);
    } else if (name == "junction") {
      on_junction(attrs);
    } else if (name == "edge") {
      on_edge(attrs);
    } else if (name == "lane" && current_edge_) {
      ++lanes_seen_;
    }
  }

  void end(std::string_view name) {
    if (name == "edge" && current_edge_) {
      if (lanes_seen_ > 0) current_edge_->lane_count = lanes_seen_;
      net_.edges.insert_or_assign(current_edge_->id, std::move(*current_edge_));
      current_edge_.reset();
    }
  }

  RoadNetwork finish() && {
    if (!saw_location_) throw Error(ErrorCategory::parse, "missing location element");
    if (net_.junctions.empty()) throw Error(ErrorCategory::parse, "missing junctions");

    for (auto& [id, edge] : net_.edges) {
      if (edge.function == EdgeFunction::internal) continue;
      for (const auto* endpoint : {&edge.from_junction, &edge.to_junction}) {
        if (!net_.junctions.contains(*endpoint)) {
          throw Error(ErrorCategory::parse,
                      "edge '" + id + "' references unknown junction '" + *endpoint + "'");
        }
      }
      if (edge.from_junction == edge.to_junction) {
        throw Error(ErrorCategory::parse, "edge '" + id + "' starts and ends at junction '" +
                                              edge.from_junction + "'");
      }
      net_.junctions.at(edge.from_junction).outgoing_edges.push_back(id);
      net_.junctions.at(edge.to_junction).incoming_edges.push_back(id);
    }
    // edges map is ordered, so both lists are already sorted by id
    return std::move(net_);
  }

 private:
  void on_location(const detail::XmlAttributes& attrs) {
    saw_location_ = true;
    GeoProjection proj = parse_projection(attrs.get_or("projParameter", "!"));
    auto offset = parse_number_list(attrs.get_or("netOffset", "0,0"), 2, "netOffset");
    proj.net_offset = {offset[0], offset[1]};
    auto conv = parse_number_list(attrs.get_or("convBoundary", "0,0,0,0"), 4, "convBoundary");
    proj.conv_boundary = {conv[0], conv[1], conv[2], conv[3]};
    auto orig = parse_number_list(attrs.get_or("origBoundary", "0,0,0,0"), 4, "origBoundary");
    proj.orig_boundary = {orig[0], orig[1], orig[2], orig[3]};
    if (proj.conv_boundary.min_x > proj.conv_boundary.max_x ||
        proj.conv_boundary.min_y > proj.conv_boundary.max_y) {
      throw Error(ErrorCategory::parse, "location: convBoundary min exceeds max");
    }
    net_.projection = std::move(proj);
  }

  void on_junction(const detail::XmlAttributes& attrs) {
    Junction j;
    j.id = std::string(attrs.get_or("id", ""));
    if (j.id.empty()) throw Error(ErrorCategory::parse, "junction without id");
    j.position = {require_coordinate(attrs, "x", j.id), require_coordinate(attrs, "y", j.id)};
    j.junction_type = std::string(attrs.get_or("type", ""));
    if (net_.junctions.contains(j.id)) {
      throw Error(ErrorCategory::parse, "duplicate junction '" + j.id + "'");
    }
    net_.junctions.emplace(j.id, std::move(j));
  }

  void on_edge(const detail::XmlAttributes& attrs) {
    Edge e;
    e.id = std::string(attrs.get_or("id", ""));
    if (e.id.empty()) throw Error(ErrorCategory::parse, "edge without id");
    if (net_.edges.contains(e.id)) throw Error(ErrorCategory::parse, "duplicate edge '" + e.id + "'");
    e.function = classify_function(attrs.get_or("function", ""));
    e.from_junction = std::string(attrs.get_or("from", ""));
    e.to_junction = std::string(attrs.get_or("to", ""));
    e.type_string = std::string(attrs.get_or("type", ""));
    if (auto lanes = attrs.get("numLanes")) {
      auto n = parse_double(*lanes);
      if (!n || *n < 1) throw Error(ErrorCategory::parse, "edge '" + e.id + "': bad numLanes");
      e.lane_count = static_cast<int>(*n);
    }
    if (e.function == EdgeFunction::normal && (e.from_junction.empty() || e.to_junction.empty())) {
      throw Error(ErrorCategory::parse, "edge '" + e.id + "' lacks from/to junction");
    }
    current_edge_ = std::move(e);
    lanes_seen_ = 0;
  }

  RoadNetwork net_;
  bool saw_location_ = false;
  std::optional<Edge> current_edge_;
  int lanes_seen_ = 0;
};

std::string format_list(std::initializer_list<double> values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ',';
    out += format_number(v);
  }
  return out;
}

}  // namespace

RoadNetwork parse_network(std::string_view xml_text) {
  NetworkBuilder builder;
  detail::parse_xml(xml_text,
                    {[&](std::string_view name, const detail::XmlAttributes& attrs) {
                       builder.start(name, attrs);
                     },
                     [&](std::string_view name) { builder.end(name); }});
  return std::move(builder).finish();
}

std::string serialize_network(const RoadNetwork& net) {
  const auto& p = net.projection;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<net version=\"1.20\">\n";
  out << "    <location netOffset=\"" << format_list({p.net_offset.x, p.net_offset.y})
      << "\" convBoundary=\""
      << format_list({p.conv_boundary.min_x, p.conv_boundary.min_y, p.conv_boundary.max_x,
                      p.conv_boundary.max_y})
      << "\" origBoundary=\""
      << format_list({p.orig_boundary.min_x, p.orig_boundary.min_y, p.orig_boundary.max_x,
                      p.orig_boundary.max_y})
      << "\" projParameter=\"" << xml_escape(p.proj_parameter) << "\"/>\n";
  for (const auto& [id, e] : net.edges) {
    out << "    <edge id=\"" << xml_escape(id) << '"';
    if (e.function == EdgeFunction::internal) out << " function=\"internal\"";
    if (!e.from_junction.empty()) out << " from=\"" << xml_escape(e.from_junction) << '"';
    if (!e.to_junction.empty()) out << " to=\"" << xml_escape(e.to_junction) << '"';
    if (!e.type_string.empty()) out << " type=\"" << xml_escape(e.type_string) << '"';
    out << ">\n";
    for (int lane = 0; lane < e.lane_count; ++lane) {
      out << "        <lane id=\"" << xml_escape(id) << '_' << lane << "\" index=\"" << lane
          << "\"/>\n";
    }
    out << "    </edge>\n";
  }
  for (const auto& [id, j] : net.junctions) {
    out << "    <junction id=\"" << xml_escape(id) << "\" type=\"" << xml_escape(j.junction_type)
        << "\" x=\"" << format_number(j.position.x) << "\" y=\"" << format_number(j.position.y)
        << "\"/>\n";
  }
  out << "</net>\n";
  return out.str();
}

}  // namespace tmcsim
