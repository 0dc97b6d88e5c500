#pragma once

#include <string>
#include <string_view>

namespace tmcsim {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Bounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  friend bool operator==(const Bounds&, const Bounds&) = default;
};

struct UtmCoordinate {
  double easting = 0.0;
  double northing = 0.0;
};

/// Projection metadata of a network file: how geographic coordinates map onto
/// the planar network frame.
struct GeoProjection {
  enum class Kind { identity, utm };

  Kind kind = Kind::identity;
  int utm_zone = 0;  // 1..60, utm only
  bool northern_hemisphere = true;
  Point2 net_offset;
  Bounds conv_boundary;
  Bounds orig_boundary;
  // Raw projection string as found in the file, kept for re-serialization.
  std::string proj_parameter = "!";

  friend bool operator==(const GeoProjection&, const GeoProjection&) = default;
};

/// Interprets a projection string. Accepts "!" (identity) and PROJ-style UTM
/// definitions such as "+proj=utm +zone=17 +ellps=WGS84 +datum=WGS84
/// +units=m +no_defs" (optionally with "+south"). Anything else throws
/// Error{parse} echoing the string.
GeoProjection parse_projection(std::string_view proj_parameter);

/// WGS84 UTM forward transform (Krüger series, 6th order in n).
/// Central meridian is taken from `zone`; points outside the zone are still
/// projected, just with growing scale error.
UtmCoordinate utm_forward(int zone, bool northern_hemisphere, double lon_deg, double lat_deg);

/// Geographic to network frame. Throws Error{invalid_input} on out-of-range
/// or non-finite coordinates.
Point2 lonlat_to_xy(const GeoProjection& proj, double lon_deg, double lat_deg);

/// Mathematical angle of (to - from) in [0, 360): 0 = +x (east),
/// 90 = +y (north). Throws Error{invalid_input} "degenerate bearing" when
/// the points coincide.
double bearing_degrees(Point2 from, Point2 to);

double distance(Point2 a, Point2 b);

}  // namespace tmcsim
