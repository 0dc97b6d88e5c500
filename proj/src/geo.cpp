#include "tmcsim/geo.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "tmcsim/error.hpp"

namespace tmcsim {

namespace {

constexpr double kWgs84A = 6378137.0;
constexpr double kWgs84F = 1.0 / 298.257223563;
constexpr double kUtmScale = 0.9996;
constexpr double kFalseEasting = 500000.0;
constexpr double kFalseNorthingSouth = 10000000.0;

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

// Krüger coefficients for the forward series, precomputed for WGS84.
struct KruegerSeries {
  double rectifying_radius;  // A
  std::array<double, 6> alpha;
  double e;  // first eccentricity

  KruegerSeries() {
    const double n = kWgs84F / (2.0 - kWgs84F);
    const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n;
    rectifying_radius = kWgs84A / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);
    alpha = {
        n / 2.0 - 2.0 * n2 / 3.0 + 5.0 * n3 / 16.0 + 41.0 * n4 / 180.0 - 127.0 * n5 / 288.0 +
            7891.0 * n6 / 37800.0,
        13.0 * n2 / 48.0 - 3.0 * n3 / 5.0 + 557.0 * n4 / 1440.0 + 281.0 * n5 / 630.0 -
            1983433.0 * n6 / 1935360.0,
        61.0 * n3 / 240.0 - 103.0 * n4 / 140.0 + 15061.0 * n5 / 26880.0 +
            167603.0 * n6 / 181440.0,
        49561.0 * n4 / 161280.0 - 179.0 * n5 / 168.0 + 6601661.0 * n6 / 7257600.0,
        34729.0 * n5 / 80640.0 - 3418889.0 * n6 / 1995840.0,
        212378941.0 * n6 / 319334400.0,
    };
    e = std::sqrt(kWgs84F * (2.0 - kWgs84F));
  }
};

const KruegerSeries& series() {
  static const KruegerSeries s;
  return s;
}

std::vector<std::string> split_ws(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

}  // namespace

GeoProjection parse_projection(std::string_view proj_parameter) {
  GeoProjection proj;
  proj.proj_parameter = std::string(proj_parameter);
  const auto tokens = split_ws(proj_parameter);
  if (tokens.size() == 1 && tokens[0] == "!") {
    proj.kind = GeoProjection::Kind::identity;
    return proj;
  }
  bool is_utm = false;
  int zone = 0;
  bool south = false;
  for (const auto& token : tokens) {
    if (token == "+proj=utm") {
      is_utm = true;
    } else if (token.rfind("+zone=", 0) == 0) {
      try {
        std::size_t used = 0;
        zone = std::stoi(token.substr(6), &used);
        if (used != token.size() - 6) zone = 0;
      } catch (const std::exception&) {
        zone = 0;
      }
    } else if (token == "+south") {
      south = true;
    } else if (token.rfind("+ellps=", 0) == 0 && token != "+ellps=WGS84") {
      is_utm = false;
      break;
    }
  }
  if (!is_utm || zone < 1 || zone > 60) {
    throw Error(ErrorCategory::parse,
                "unsupported projection '" + std::string(proj_parameter) + "'");
  }
  proj.kind = GeoProjection::Kind::utm;
  proj.utm_zone = zone;
  proj.northern_hemisphere = !south;
  return proj;
}

UtmCoordinate utm_forward(int zone, bool northern_hemisphere, double lon_deg, double lat_deg) {
  const auto& s = series();
  const double central = deg2rad((zone - 1) * 6.0 - 180.0 + 3.0);
  const double phi = deg2rad(lat_deg);
  const double lambda = deg2rad(lon_deg) - central;

  // Conformal latitude via tau' = sinh(atanh(sin phi) - e atanh(e sin phi)).
  const double sin_phi = std::sin(phi);
  const double t = std::sinh(std::atanh(sin_phi) - s.e * std::atanh(s.e * sin_phi));
  const double xi_prime = std::atan2(t, std::cos(lambda));
  const double eta_prime = std::atanh(std::sin(lambda) / std::sqrt(1.0 + t * t));

  double xi = xi_prime;
  double eta = eta_prime;
  for (int j = 1; j <= 6; ++j) {
    const double a = s.alpha[j - 1];
    xi += a * std::sin(2.0 * j * xi_prime) * std::cosh(2.0 * j * eta_prime);
    eta += a * std::cos(2.0 * j * xi_prime) * std::sinh(2.0 * j * eta_prime);
  }

  UtmCoordinate out;
  out.easting = kFalseEasting + kUtmScale * s.rectifying_radius * eta;
  out.northing = kUtmScale * s.rectifying_radius * xi;
  if (!northern_hemisphere) out.northing += kFalseNorthingSouth;
  return out;
}

Point2 lonlat_to_xy(const GeoProjection& proj, double lon_deg, double lat_deg) {
  if (!std::isfinite(lon_deg) || !std::isfinite(lat_deg) || lat_deg < -90.0 || lat_deg > 90.0 ||
      lon_deg < -180.0 || lon_deg > 180.0) {
    std::ostringstream msg;
    msg << "coordinate out of range: lon " << lon_deg << ", lat " << lat_deg;
    throw Error(ErrorCategory::invalid_input, msg.str());
  }
  if (proj.kind == GeoProjection::Kind::identity) {
    return {lon_deg + proj.net_offset.x, lat_deg + proj.net_offset.y};
  }
  const auto utm = utm_forward(proj.utm_zone, proj.northern_hemisphere, lon_deg, lat_deg);
  return {utm.easting + proj.net_offset.x, utm.northing + proj.net_offset.y};
}

double bearing_degrees(Point2 from, Point2 to) {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  if (dx == 0.0 && dy == 0.0) {
    throw Error(ErrorCategory::invalid_input, "degenerate bearing");
  }
  double angle = std::atan2(dy, dx) * 180.0 / std::numbers::pi;
  if (angle < 0.0) angle += 360.0;
  // -tiny + 360 rounds to exactly 360
  if (angle >= 360.0) angle = 0.0;
  return angle;
}

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace tmcsim
