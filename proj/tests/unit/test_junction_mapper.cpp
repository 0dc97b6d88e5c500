#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doubles.hpp"
#include "tmcsim/error.hpp"
#include "tmcsim/junction_mapper.hpp"

using namespace tmcsim;
namespace tk = tmcsim::testkit;

namespace {

RoadNetwork random_junctions(std::mt19937& rng, int n, double extent) {
  RoadNetwork net;
  std::uniform_real_distribution<double> coord(-extent, extent);
  for (int i = 0; i < n; ++i) {
    Junction j;
    j.id = "j" + std::to_string(i);
    j.position = {coord(rng), coord(rng)};
    j.junction_type = (i % 11 == 10) ? "internal" : "priority";
    net.junctions[j.id] = j;
  }
  return net;
}

// Network with a center junction and one stub per given bearing; each stub
// connects both ways.
RoadNetwork star(const std::vector<double>& bearings, const std::string& type = "highway.secondary") {
  RoadNetwork net;
  net.junctions["C"] = {"C", {0, 0}, "priority", {}, {}};
  for (std::size_t i = 0; i < bearings.size(); ++i) {
    const double rad = bearings[i] * M_PI / 180.0;
    const std::string stub = "X" + std::to_string(i);
    net.junctions[stub] = {stub, {100 * std::cos(rad), 100 * std::sin(rad)}, "dead_end", {}, {}};
    net.edges["in" + std::to_string(i)] = {"in" + std::to_string(i), stub, "C", type, 1, EdgeFunction::normal};
    net.edges["out" + std::to_string(i)] = {"out" + std::to_string(i), "C", stub, type, 1, EdgeFunction::normal};
    net.junctions["C"].incoming_edges.push_back("in" + std::to_string(i));
    net.junctions["C"].outgoing_edges.push_back("out" + std::to_string(i));
  }
  return net;
}

template <typename Map>
std::set<std::string> all_ids(const Map& lists) {
  std::set<std::string> out;
  for (const auto& list : lists) out.insert(list.begin(), list.end());
  return out;
}

}  // namespace

TEST(Classify, PaperBoundaries) {
  EXPECT_EQ(classify_direction(0.0), Cardinal::east);
  EXPECT_EQ(classify_direction(44.999), Cardinal::east);
  EXPECT_EQ(classify_direction(45.0), Cardinal::north);
  EXPECT_EQ(classify_direction(135.0), Cardinal::west);
  EXPECT_EQ(classify_direction(180.0), Cardinal::west);
  EXPECT_EQ(classify_direction(225.0), Cardinal::south);
  EXPECT_EQ(classify_direction(315.0), Cardinal::east);
  EXPECT_EQ(classify_direction(359.999), Cardinal::east);
}

TEST(Classify, PartitionsTheCircle) {
  // adjacent doubles around every boundary fall on opposite sides
  const std::vector<std::pair<double, Cardinal>> lower = {
      {45.0, Cardinal::north}, {135.0, Cardinal::west}, {225.0, Cardinal::south}, {315.0, Cardinal::east}};
  for (const auto& [edge, c] : lower) {
    EXPECT_EQ(classify_direction(edge), c);
    EXPECT_NE(classify_direction(std::nextafter(edge, 0.0)), c);
  }
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> angle(0.0, 360.0);
  std::array<int, 4> hits{};
  for (int i = 0; i < 100000; ++i) {
    const double a = angle(rng);
    const Cardinal c = classify_direction(a);
    ++hits[static_cast<int>(c)];
    // half-open interval centred on the axis
    double dev = std::fmod(a - axis_angle(c) + 360.0, 360.0);
    if (dev >= 180.0) dev -= 360.0;
    EXPECT_GE(dev, -45.0);
    EXPECT_LT(dev, 45.0);
  }
  for (int h : hits) EXPECT_GT(h, 20000);
}

TEST(Cardinal, StringsRoundTrip) {
  for (auto c : kAllCardinals) EXPECT_EQ(cardinal_from_string(to_string(c)), c);
  EXPECT_FALSE(cardinal_from_string("up"));
}

TEST(Nearest, ExactMatchHasZeroDistance) {
  const auto net = parse_network(tk::read_fixture("four_way.net.xml"));
  const auto r = find_nearest_junction(net, 0.0, 0.0);
  ASSERT_TRUE(std::holds_alternative<JunctionMatch>(r));
  EXPECT_EQ(std::get<JunctionMatch>(r).junction_id, "C");
  EXPECT_EQ(std::get<JunctionMatch>(r).distance, 0.0);
}

TEST(Nearest, GateFiresBeyondTolerance) {
  RoadNetwork net;
  net.junctions["far"] = {"far", {7.2, 0.0}, "priority", {}, {}};
  const auto r = find_nearest_junction(net, 0.0, 0.0, 5.0);
  ASSERT_TRUE(std::holds_alternative<ToleranceExceeded>(r));
  const auto& t = std::get<ToleranceExceeded>(r);
  EXPECT_EQ(t.candidate.junction_id, "far");
  EXPECT_DOUBLE_EQ(t.candidate.distance, 7.2);
  EXPECT_EQ(t.tolerance, 5.0);
  // exactly at the tolerance still matches
  net.junctions["far"].position = {5.0, 0.0};
  EXPECT_TRUE(std::holds_alternative<JunctionMatch>(find_nearest_junction(net, 0.0, 0.0, 5.0)));
}

TEST(Nearest, SkipsInternalJunctions) {
  RoadNetwork net;
  net.junctions[":inner"] = {":inner", {0.1, 0.0}, "internal", {}, {}};
  net.junctions["real"] = {"real", {3.0, 0.0}, "priority", {}, {}};
  const auto r = find_nearest_junction(net, 0.0, 0.0);
  EXPECT_EQ(std::get<JunctionMatch>(r).junction_id, "real");
  RoadNetwork only_internal;
  only_internal.junctions[":inner"] = net.junctions[":inner"];
  EXPECT_THROW(find_nearest_junction(only_internal, 0.0, 0.0), Error);
}

TEST(Nearest, MatchesLinearScan) {
  std::mt19937 rng(200);
  for (int trial = 0; trial < 200; ++trial) {
    // identity frame, so coordinates stay inside the lon/lat domain
    const auto net = random_junctions(rng, 200, 80.0);
    std::uniform_real_distribution<double> q(-80.0, 80.0);
    const Point2 query{q(rng), q(rng)};
    std::string best;
    double best_d = INFINITY;
    for (const auto& [id, j] : net.junctions) {
      if (j.is_internal()) continue;
      const double d = std::hypot(j.position.x - query.x, j.position.y - query.y);
      if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
    const auto r = find_nearest_junction(net, query.x, query.y, 5.0);
    if (best_d > 5.0) {
      ASSERT_TRUE(std::holds_alternative<ToleranceExceeded>(r));
      EXPECT_EQ(std::get<ToleranceExceeded>(r).candidate.junction_id, best);
    } else {
      ASSERT_TRUE(std::holds_alternative<JunctionMatch>(r));
      EXPECT_EQ(std::get<JunctionMatch>(r).junction_id, best);
    }
  }
}

TEST(Mapping, FourWayHasOneEdgePerCardinal) {
  const auto net = parse_network(tk::read_fixture("four_way.net.xml"));
  const auto m = map_intersection_edges(net, "C");
  for (auto c : kAllCardinals) {
    EXPECT_EQ(m.incoming_for(c).size(), 1u) << to_string(c);
    EXPECT_EQ(m.outgoing_for(c).size(), 1u) << to_string(c);
  }
  // labels are travel directions
  EXPECT_EQ(m.incoming_for(Cardinal::south), std::vector<std::string>{"n_in"});
  EXPECT_EQ(m.incoming_for(Cardinal::north), std::vector<std::string>{"s_in"});
  EXPECT_EQ(m.incoming_for(Cardinal::west), std::vector<std::string>{"e_in"});
  EXPECT_EQ(m.incoming_for(Cardinal::east), std::vector<std::string>{"w_in"});
  EXPECT_EQ(m.outgoing_for(Cardinal::north), std::vector<std::string>{"n_out"});
  EXPECT_EQ(m.outgoing_for(Cardinal::west), std::vector<std::string>{"w_out"});
  EXPECT_TRUE(m.skipped_edges.empty());
  EXPECT_TRUE(m.notes.empty());
}

TEST(Mapping, TJunctionLeavesMissingLegEmpty) {
  const auto net = parse_network(tk::read_fixture("t_junction.net.xml"));
  const auto m = map_intersection_edges(net, "C");
  // the absent south leg would have fed northbound traffic in and taken southbound traffic out
  EXPECT_TRUE(m.outgoing_for(Cardinal::south).empty());
  EXPECT_TRUE(m.incoming_for(Cardinal::north).empty());
  for (auto c : {Cardinal::east, Cardinal::north, Cardinal::west}) EXPECT_EQ(m.outgoing_for(c).size(), 1u);
  for (auto c : {Cardinal::east, Cardinal::west, Cardinal::south}) EXPECT_EQ(m.incoming_for(c).size(), 1u);
}

TEST(Mapping, FootwayIsSkipped) {
  const auto net = parse_network(tk::read_fixture("four_way_footway.net.xml"));
  const auto m = map_intersection_edges(net, "C");
  ASSERT_EQ(m.skipped_edges.size(), 1u);
  EXPECT_EQ(m.skipped_edges[0].edge_id, "path_ne");
  EXPECT_NE(m.skipped_edges[0].reason.find("footway"), std::string::npos);
  EXPECT_EQ(all_ids(m.incoming).count("path_ne"), 0u);
}

TEST(Mapping, UntypedEdgesNeedThePolicy) {
  auto net = star({0, 90, 180, 270}, "");
  const auto strict = map_intersection_edges(net, "C");
  EXPECT_EQ(strict.skipped_edges.size(), 8u);
  EXPECT_TRUE(all_ids(strict.incoming).empty());
  const auto lenient = map_intersection_edges(net, "C", {true});
  EXPECT_TRUE(lenient.skipped_edges.empty());
  EXPECT_EQ(all_ids(lenient.incoming).size(), 4u);
  auto rail = star({0}, "railway.rail");
  EXPECT_EQ(map_intersection_edges(rail, "C").skipped_edges.size(), 2u);
}

TEST(Mapping, SharedCardinalOrderedByDeviationThenId) {
  auto net = star({10, 350, 30, 90});
  const auto m = map_intersection_edges(net, "C");
  // outgoing toward 10 and 350 deviate equally; id breaks the tie, 30 comes last
  EXPECT_EQ(m.outgoing_for(Cardinal::east), (std::vector<std::string>{"out0", "out1", "out2"}));
  EXPECT_EQ(m.representative_outgoing(Cardinal::east), "out0");
  EXPECT_FALSE(m.representative_outgoing(Cardinal::south));
  EXPECT_FALSE(m.notes.empty());
}

TEST(Mapping, ReversedEdgeClassifiesOpposite) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> angle(0.0, 360.0);
  for (int trial = 0; trial < 300; ++trial) {
    const double a = angle(rng);
    auto net = star({a});
    const auto m = map_intersection_edges(net, "C");
    // outgoing toward the stub points at a; incoming from it points at a+180
    const Cardinal out = classify_direction(bearing_degrees({0, 0}, net.junction("X0").position));
    const Cardinal in = classify_direction(bearing_degrees(net.junction("X0").position, {0, 0}));
    EXPECT_EQ(m.outgoing_for(out), std::vector<std::string>{"out0"});
    EXPECT_EQ(m.incoming_for(in), std::vector<std::string>{"in0"});
    const double flipped = std::fmod(bearing_degrees({0, 0}, net.junction("X0").position) + 180.0, 360.0);
    EXPECT_EQ(in, classify_direction(flipped));
  }
}

TEST(Mapping, IncomingEdgesArePartitionedIntoClassifiedAndSkipped) {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> angle(0.0, 360.0);
  const std::vector<std::string> types = {"highway.primary", "highway.footway", "", "railway.tram"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> bearings;
    const int legs = 1 + trial % 6;
    for (int i = 0; i < legs; ++i) bearings.push_back(angle(rng));
    auto net = star(bearings);
    for (auto& [id, e] : net.edges) e.type_string = types[rng() % types.size()];
    const auto m = map_intersection_edges(net, "C");
    std::multiset<std::string> seen;
    for (const auto& list : m.incoming) seen.insert(list.begin(), list.end());
    for (const auto& s : m.skipped_edges) {
      if (s.edge_id.rfind("in", 0) == 0) seen.insert(s.edge_id);
    }
    const auto& expected = net.junction("C").incoming_edges;
    EXPECT_EQ(seen, std::multiset<std::string>(expected.begin(), expected.end()));
    // no id under two cardinals
    std::set<std::string> unique;
    for (const auto& list : m.outgoing) {
      for (const auto& id : list) EXPECT_TRUE(unique.insert(id).second);
    }
  }
}

TEST(Mapping, IndependentOfEdgeOrderInFile) {
  const auto text = tk::read_fixture("four_way_footway.net.xml");
  // move the first normal edge block to the end of the edge section
  const auto start = text.find("    <edge id=\"e_in\"");
  const auto stop = text.find("</edge>", start) + std::string("</edge>\n").size();
  std::string shuffled = text;
  const std::string block = text.substr(start, stop - start);
  shuffled.erase(start, block.size());
  shuffled.insert(shuffled.find("    <junction id=\"C\""), block);
  ASSERT_NE(shuffled, text);
  EXPECT_EQ(map_intersection_edges(parse_network(text), "C"), map_intersection_edges(parse_network(shuffled), "C"));
}

TEST(Mapping, RejectsUnknownOrInternalJunction) {
  const auto net = parse_network(tk::read_fixture("four_way.net.xml"));
  EXPECT_THROW(map_intersection_edges(net, "nowhere"), Error);
  EXPECT_THROW(map_intersection_edges(net, ":C_0_c"), Error);
}

TEST(Bind, ExactCoordinateGivesFullMapping) {
  const auto net = parse_network(tk::read_fixture("four_way.net.xml"));
  const auto r = bind_intersection(net, "1001", 0.0, 0.0);
  const auto& b = std::get<IntersectionBinding>(r);
  EXPECT_EQ(b.source_id, "1001");
  EXPECT_EQ(b.junction_id, "C");
  EXPECT_EQ(b.match_distance, 0.0);
  for (auto c : kAllCardinals) EXPECT_TRUE(b.mapping.representative_incoming(c));
}

TEST(Bind, FarCoordinateExceedsTolerance) {
  const auto net = parse_network(tk::read_fixture("four_way.net.xml"));
  // 20 m past the east stub in the identity frame
  const auto r = bind_intersection(net, "1001", 120.0, 0.0);
  ASSERT_TRUE(std::holds_alternative<ToleranceExceeded>(r));
  EXPECT_EQ(std::get<ToleranceExceeded>(r).candidate.junction_id, "E");
}

TEST(Bind, SequentialBindingsAreIndependent) {
  const auto net = parse_network(tk::read_fixture("four_way.net.xml"));
  const auto first = std::get<IntersectionBinding>(bind_intersection(net, "a", 0.0, 0.0));
  const auto second = std::get<IntersectionBinding>(bind_intersection(net, "b", 0.0, 90.0, 15.0, {true}));
  const auto again = std::get<IntersectionBinding>(bind_intersection(net, "a", 0.0, 0.0));
  EXPECT_EQ(second.junction_id, "N");
  EXPECT_EQ(first.mapping, again.mapping);
  EXPECT_EQ(first.junction_id, again.junction_id);
}
