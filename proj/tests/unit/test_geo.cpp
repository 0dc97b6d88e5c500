#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "doubles.hpp"
#include "json.hpp"
#include "tmcsim/error.hpp"
#include "tmcsim/geo.hpp"

using namespace tmcsim;
namespace tk = tmcsim::testkit;

TEST(Projection, IdentityAddsOffset) {
  GeoProjection p;
  p.net_offset = {100, 200};
  const auto xy = lonlat_to_xy(p, 3, 4);
  EXPECT_DOUBLE_EQ(xy.x, 103);
  EXPECT_DOUBLE_EQ(xy.y, 204);
}

TEST(Projection, ParsesUtmStrings) {
  const auto p = parse_projection("+proj=utm +zone=17 +ellps=WGS84 +datum=WGS84 +units=m +no_defs");
  EXPECT_EQ(p.kind, GeoProjection::Kind::utm);
  EXPECT_EQ(p.utm_zone, 17);
  EXPECT_TRUE(p.northern_hemisphere);
  const auto s = parse_projection("+proj=utm +zone=56 +south +ellps=WGS84 +datum=WGS84 +units=m +no_defs");
  EXPECT_FALSE(s.northern_hemisphere);
  EXPECT_EQ(parse_projection("!").kind, GeoProjection::Kind::identity);
}

TEST(Projection, RejectsOtherProjections) {
  try {
    parse_projection("+proj=lcc +lat_1=33");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::parse);
    EXPECT_NE(std::string(e.what()).find("+proj=lcc"), std::string::npos);
  }
}

TEST(Projection, UtmMatchesFrozenReference) {
  const auto ref = nlohmann::json::parse(tk::read_fixture("utm_reference.json"));
  ASSERT_EQ(ref["points"].size(), 5u);
  for (const auto& pt : ref["points"]) {
    const auto utm = utm_forward(pt["zone"], pt["north"], pt["lon"], pt["lat"]);
    EXPECT_NEAR(utm.easting, pt["easting"].get<double>(), 0.5) << pt["name"];
    EXPECT_NEAR(utm.northing, pt["northing"].get<double>(), 0.5) << pt["name"];
    // the series is accurate to millimetres, so hold it tighter than the gate
    EXPECT_NEAR(utm.easting, pt["easting"].get<double>(), 0.005) << pt["name"];
    EXPECT_NEAR(utm.northing, pt["northing"].get<double>(), 0.005) << pt["name"];
  }
}

TEST(Projection, UtmThroughNetworkOffset) {
  auto p = parse_projection("+proj=utm +zone=17 +ellps=WGS84 +datum=WGS84 +units=m +no_defs");
  p.net_offset = {-630000.0, -4834000.0};
  const auto xy = lonlat_to_xy(p, -79.3832, 43.6532);
  EXPECT_NEAR(xy.x, 378.9953, 0.01);
  EXPECT_NEAR(xy.y, 625.7009, 0.01);
}

TEST(Projection, RejectsOutOfRangeCoordinates) {
  auto p = parse_projection("+proj=utm +zone=17 +ellps=WGS84");
  for (auto [lon, lat] : {std::pair{0.0, 91.0}, {0.0, -90.5}, {181.0, 0.0},
                          {std::numeric_limits<double>::quiet_NaN(), 0.0}}) {
    try {
      lonlat_to_xy(p, lon, lat);
      FAIL() << lon << "," << lat;
    } catch (const Error& e) {
      EXPECT_EQ(e.category(), ErrorCategory::invalid_input);
    }
  }
}

TEST(Bearing, AxisAndDiagonal) {
  EXPECT_DOUBLE_EQ(bearing_degrees({0, 0}, {10, 0}), 0.0);
  EXPECT_DOUBLE_EQ(bearing_degrees({0, 0}, {0, 5}), 90.0);
  EXPECT_DOUBLE_EQ(bearing_degrees({0, 0}, {-1, -1}), 225.0);
  EXPECT_DOUBLE_EQ(bearing_degrees({0, 0}, {-3, 0}), 180.0);
  EXPECT_DOUBLE_EQ(bearing_degrees({0, 0}, {0, -2}), 270.0);
}

TEST(Bearing, StaysInHalfOpenRange) {
  // a vector just below the +x axis must not come back as 360
  const double b = bearing_degrees({0, 0}, {1, -1e-18});
  EXPECT_GE(b, 0.0);
  EXPECT_LT(b, 360.0);
}

TEST(Bearing, DegenerateThrows) {
  EXPECT_THROW(bearing_degrees({1, 1}, {1, 1}), Error);
}
