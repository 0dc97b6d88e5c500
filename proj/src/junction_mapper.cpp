#include "tmcsim/junction_mapper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tmcsim/error.hpp"

namespace tmcsim {

std::string_view to_string(Cardinal c) {
  switch (c) {
    case Cardinal::east: return "east";
    case Cardinal::north: return "north";
    case Cardinal::west: return "west";
    case Cardinal::south: return "south";
  }
  return "?";
}

std::optional<Cardinal> cardinal_from_string(std::string_view text) {
  for (auto c : kAllCardinals) {
    if (to_string(c) == text) return c;
  }
  return std::nullopt;
}

Cardinal classify_direction(double angle_deg) {
  if (angle_deg >= 315.0 || angle_deg < 45.0) return Cardinal::east;
  if (angle_deg < 135.0) return Cardinal::north;
  if (angle_deg < 225.0) return Cardinal::west;
  return Cardinal::south;
}

double axis_angle(Cardinal c) { return 90.0 * static_cast<int>(c); }

std::optional<std::string> EdgeMapping::representative_incoming(Cardinal c) const {
  const auto& list = incoming_for(c);
  if (list.empty()) return std::nullopt;
  return list.front();
}

std::optional<std::string> EdgeMapping::representative_outgoing(Cardinal c) const {
  const auto& list = outgoing_for(c);
  if (list.empty()) return std::nullopt;
  return list.front();
}

NearestJunctionResult find_nearest_junction(const RoadNetwork& net, double lon, double lat,
                                            double tol) {
  const Point2 target = lonlat_to_xy(net.projection, lon, lat);
  double best = std::numeric_limits<double>::infinity();
  const Junction* closest = nullptr;
  for (const auto& [id, junction] : net.junctions) {
    if (junction.is_internal()) continue;
    const double d = distance(junction.position, target);
    if (d < best) {
      best = d;
      closest = &junction;
    }
  }
  if (closest == nullptr) {
    throw Error(ErrorCategory::invalid_input, "network has no non-internal junctions");
  }
  JunctionMatch match{closest->id, best};
  if (best > tol) return ToleranceExceeded{std::move(match), tol};
  return match;
}

namespace {

std::optional<std::string> filter_reason(const Edge& edge, const EdgeFilterPolicy& filter) {
  const auto& type = edge.type_string;
  if (type.empty()) {
    if (filter.include_untyped) return std::nullopt;
    return "untyped edge";
  }
  if (type.find("footway") != std::string::npos) return "footway edge (type '" + type + "')";
  if (type.find("highway") == std::string::npos) return "non-highway edge (type '" + type + "')";
  return std::nullopt;
}

double deviation_from_axis(double angle, Cardinal c) {
  const double diff = std::fabs(angle - axis_angle(c));
  return std::min(diff, 360.0 - diff);
}

struct Classified {
  std::string id;
  double deviation;
};

void sort_by_deviation(std::vector<Classified>& list) {
  std::sort(list.begin(), list.end(), [](const Classified& a, const Classified& b) {
    if (a.deviation != b.deviation) return a.deviation < b.deviation;
    return a.id < b.id;
  });
}

}  // namespace

EdgeMapping map_intersection_edges(const RoadNetwork& net, const std::string& junction_id,
                                   const EdgeFilterPolicy& filter) {
  const Junction& junction = net.junction(junction_id);
  if (junction.is_internal()) {
    throw Error(ErrorCategory::invalid_input, "junction '" + junction_id + "' is internal");
  }

  EdgeMapping mapping;
  std::array<std::vector<Classified>, 4> incoming;
  std::array<std::vector<Classified>, 4> outgoing;

  auto process = [&](const std::vector<std::string>& edge_ids, bool is_incoming) {
    for (const auto& edge_id : edge_ids) {
      const Edge& edge = net.edge(edge_id);
      if (edge.function != EdgeFunction::normal) continue;
      if (auto reason = filter_reason(edge, filter)) {
        mapping.skipped_edges.push_back({edge_id, *reason});
        continue;
      }
      const Point2 other = net.junction(is_incoming ? edge.from_junction : edge.to_junction).position;
      if (other == junction.position) {
        mapping.skipped_edges.push_back({edge_id, "zero-length edge geometry"});
        continue;
      }
      const double angle = is_incoming ? bearing_degrees(other, junction.position)
                                       : bearing_degrees(junction.position, other);
      const Cardinal dir = classify_direction(angle);
      auto& bucket = (is_incoming ? incoming : outgoing)[static_cast<int>(dir)];
      bucket.push_back({edge_id, deviation_from_axis(angle, dir)});
    }
  };
  process(junction.incoming_edges, true);
  process(junction.outgoing_edges, false);

  for (auto c : kAllCardinals) {
    const int i = static_cast<int>(c);
    sort_by_deviation(incoming[i]);
    sort_by_deviation(outgoing[i]);
    for (const auto& e : incoming[i]) mapping.incoming[i].push_back(e.id);
    for (const auto& e : outgoing[i]) mapping.outgoing[i].push_back(e.id);
    if (incoming[i].size() > 1 || outgoing[i].size() > 1) {
      mapping.notes.push_back("junction '" + junction_id + "': " +
                              std::to_string(incoming[i].size()) + " incoming and " +
                              std::to_string(outgoing[i].size()) + " outgoing edges classified " +
                              std::string(to_string(c)) + "; list heads receive demand");
    }
  }
  std::sort(mapping.skipped_edges.begin(), mapping.skipped_edges.end(),
            [](const SkippedEdge& a, const SkippedEdge& b) { return a.edge_id < b.edge_id; });
  return mapping;
}

BindResult bind_intersection(const RoadNetwork& net, const std::string& source_id, double lon,
                             double lat, double tol, const EdgeFilterPolicy& filter) {
  auto nearest = find_nearest_junction(net, lon, lat, tol);
  if (auto* exceeded = std::get_if<ToleranceExceeded>(&nearest)) return *exceeded;
  auto& match = std::get<JunctionMatch>(nearest);
  IntersectionBinding binding;
  binding.source_id = source_id;
  binding.junction_id = match.junction_id;
  binding.match_distance = match.distance;
  binding.mapping = map_intersection_edges(net, match.junction_id, filter);
  return binding;
}

}  // namespace tmcsim
