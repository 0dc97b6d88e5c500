#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tmcsim/geo.hpp"

namespace tmcsim {

enum class EdgeFunction { normal, internal };

struct Junction {
  std::string id;
  Point2 position;
  std::string junction_type;
  // Normal edges only, sorted by id. Derived from edge endpoints at parse time.
  std::vector<std::string> incoming_edges;
  std::vector<std::string> outgoing_edges;

  bool is_internal() const { return junction_type == "internal"; }

  friend bool operator==(const Junction&, const Junction&) = default;
};

struct Edge {
  std::string id;
  std::string from_junction;  // empty for internal edges
  std::string to_junction;
  std::string type_string;
  int lane_count = 1;
  EdgeFunction function = EdgeFunction::normal;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Immutable network model. Maps are ordered so iteration is deterministic.
struct RoadNetwork {
  GeoProjection projection;
  std::map<std::string, Junction> junctions;
  std::map<std::string, Edge> edges;

  const Junction& junction(const std::string& id) const;
  const Edge& edge(const std::string& id) const;

  friend bool operator==(const RoadNetwork&, const RoadNetwork&) = default;
};

/// Parses the simulator's network XML. Reads `location`, `junction`, `edge`
/// and `lane` (for the lane count); everything else is ignored.
/// Throws Error{parse} on malformed XML, a missing location element, zero
/// junctions, an unsupported projection, or an edge whose endpoint does not
/// resolve.
RoadNetwork parse_network(std::string_view xml_text);

/// Writes the subset of the network format that parse_network reads. Lanes
/// are emitted as placeholder children so the lane count survives.
std::string serialize_network(const RoadNetwork& net);

}  // namespace tmcsim
