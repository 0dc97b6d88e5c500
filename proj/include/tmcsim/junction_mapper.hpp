#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tmcsim/network.hpp"

namespace tmcsim {

// Travel direction. The order is counterclockwise from east, so the axis
// angle of a cardinal is 90 * index.
enum class Cardinal { east = 0, north = 1, west = 2, south = 3 };

inline constexpr std::array<Cardinal, 4> kAllCardinals = {Cardinal::east, Cardinal::north,
                                                          Cardinal::west, Cardinal::south};

std::string_view to_string(Cardinal c);
std::optional<Cardinal> cardinal_from_string(std::string_view text);

/// east: [315,360) u [0,45); north: [45,135); west: [135,225); south: [225,315).
/// Input must already be normalized into [0, 360).
Cardinal classify_direction(double angle_deg);

/// Angle of the cardinal's axis: east 0, north 90, west 180, south 270.
double axis_angle(Cardinal c);

struct EdgeFilterPolicy {
  // Admit edges with an empty type string (hand-built networks carry none).
  bool include_untyped = false;
};

struct SkippedEdge {
  std::string edge_id;
  std::string reason;

  friend bool operator==(const SkippedEdge&, const SkippedEdge&) = default;
};

struct EdgeMapping {
  // Indexed by Cardinal. Each list is ordered by angular deviation from the
  // cardinal's axis, ties broken by edge id.
  std::array<std::vector<std::string>, 4> incoming;
  std::array<std::vector<std::string>, 4> outgoing;
  std::vector<SkippedEdge> skipped_edges;
  std::vector<std::string> notes;

  const std::vector<std::string>& incoming_for(Cardinal c) const {
    return incoming[static_cast<int>(c)];
  }
  const std::vector<std::string>& outgoing_for(Cardinal c) const {
    return outgoing[static_cast<int>(c)];
  }
  // List heads: the edges that receive demand for a cardinal.
  std::optional<std::string> representative_incoming(Cardinal c) const;
  std::optional<std::string> representative_outgoing(Cardinal c) const;

  friend bool operator==(const EdgeMapping&, const EdgeMapping&) = default;
};

struct JunctionMatch {
  std::string junction_id;
  double distance = 0.0;  // meters in the network frame
};

struct ToleranceExceeded {
  JunctionMatch candidate;
  double tolerance = 0.0;
};

using NearestJunctionResult = std::variant<JunctionMatch, ToleranceExceeded>;

inline constexpr double kDefaultMatchTolerance = 5.0;

/// Nearest non-internal junction to (lon, lat). A candidate farther than `tol`
/// comes back as ToleranceExceeded; confirming it is the caller's call.
/// Throws Error{invalid_input} when the network has no eligible junction.
NearestJunctionResult find_nearest_junction(const RoadNetwork& net, double lon, double lat,
                                            double tol = kDefaultMatchTolerance);

/// Classifies the junction's incoming edges by the bearing from their
/// upstream junction and its outgoing edges by the bearing toward their
/// downstream junction.
EdgeMapping map_intersection_edges(const RoadNetwork& net, const std::string& junction_id,
                                   const EdgeFilterPolicy& filter = {});

struct IntersectionBinding {
  std::string source_id;
  std::string junction_id;
  double match_distance = 0.0;
  EdgeMapping mapping;
};

using BindResult = std::variant<IntersectionBinding, ToleranceExceeded>;

BindResult bind_intersection(const RoadNetwork& net, const std::string& source_id, double lon,
                             double lat, double tol = kDefaultMatchTolerance,
                             const EdgeFilterPolicy& filter = {});

}  // namespace tmcsim
