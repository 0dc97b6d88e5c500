#include <gtest/gtest.h>

#include <random>

#include "doubles.hpp"
#include "generators.hpp"
#include "json.hpp"
#include "tmcsim/error.hpp"
#include "tmcsim/network.hpp"
#include "tmcsim/validation.hpp"

using namespace tmcsim;
using namespace std::chrono_literals;
namespace tk = tmcsim::testkit;

namespace {

const MovementKey kNorthLeftCar{Cardinal::north, Turn::left, VehicleClass::car};

CountBin real_bin(const std::string& id, int index, std::map<MovementKey, std::int64_t> counts) {
  CountBin b;
  b.intersection_id = id;
  b.bin_start = tk::base_time() + 900s * index;
  b.counts = std::move(counts);
  return b;
}

}  // namespace

TEST(Vehroutes, FixtureRecords) {
  const auto parsed = parse_vehroutes(tk::read_fixture("three_vehicles.vehroutes.xml"));
  ASSERT_EQ(parsed.records.size(), 3u);
  EXPECT_EQ(parsed.records[0].vehicle_id, "f_1001_NL_car_0.0");
  EXPECT_EQ(parsed.records[0].depart, 0.0);
  EXPECT_EQ(parsed.records[1].depart, 300.0);
  EXPECT_EQ(parsed.records[2].depart, 450.0);
  // the final route of a distribution wins
  EXPECT_EQ(parsed.records[1].edges, (std::vector<std::string>{"s_in", "w_out"}));
  EXPECT_TRUE(parsed.diagnostics.empty());
}

TEST(Vehroutes, EmptyAndRouteless) {
  EXPECT_TRUE(parse_vehroutes("<routes/>").records.empty());
  const auto parsed = parse_vehroutes(R"(<routes><vehicle id="a" depart="1"/><vehicle id="b" depart="2"><route edges="x"/></vehicle></routes>)");
  ASSERT_EQ(parsed.records.size(), 1u);
  EXPECT_EQ(parsed.records[0].vehicle_id, "b");
  ASSERT_EQ(parsed.diagnostics.size(), 1u);
  EXPECT_NE(parsed.diagnostics[0].find("'a'"), std::string::npos);
  EXPECT_THROW(parse_vehroutes("<routes><vehicle"), Error);
}

TEST(Reconstruct, DuplicatesCollapse) {
  const auto r = reconstruct_counts({"f_1_NL_car_0.0", "f_1_NL_car_0.1", "f_1_NL_car_0.1"}, 1);
  EXPECT_EQ(r.for_intersection("1").count(kNorthLeftCar, 0), 2);
  EXPECT_TRUE(r.diagnostics.empty());
}

TEST(Reconstruct, ForeignIdsAndRange) {
  const auto r = reconstruct_counts({"veh9", "f_1_NL_car_5.0", "f_1_ET_bus_0.3"}, 2);
  EXPECT_EQ(r.diagnostics.size(), 2u);
  const auto sim = r.for_intersection("1");
  EXPECT_EQ(sim.count({Cardinal::east, Turn::through, VehicleClass::bus}, 0), 1);
  EXPECT_EQ(sim.bins.size(), 2u);
}

TEST(Reconstruct, EmptyInputIsAllZero) {
  const auto r = reconstruct_counts({}, 3);
  const auto sim = r.for_intersection("1001");
  ASSERT_EQ(sim.bins.size(), 3u);
  for (const auto& key : all_movement_keys()) {
    for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(sim.count(key, b), 0);
  }
}

TEST(Compare, IdenticalCountsZeroDiff) {
  const auto sim = reconstruct_counts({"f_7_NL_car_0.0", "f_7_NL_car_0.1"}, 1).for_intersection("7");
  const auto report = compare({real_bin("7", 0, {{kNorthLeftCar, 2}})}, sim);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_TRUE(report.all_zero_diff());
}

TEST(Compare, PercentDifference) {
  SimulatedCounts sim;
  sim.intersection_id = "7";
  sim.bins = {{0, {{kNorthLeftCar, 147}}}};
  const auto report = compare({real_bin("7", 0, {{kNorthLeftCar, 150}})}, sim);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_EQ(report.rows[0].abs_diff, 3);
  ASSERT_TRUE(report.rows[0].pct_diff);
  EXPECT_DOUBLE_EQ(*report.rows[0].pct_diff, 2.0);
  EXPECT_NE(report_to_csv({report}).find("7,north,left,car,0,150,147,3,2.0\n"), std::string::npos);
}

TEST(Compare, SimulationOnlyKeyHasUndefinedPercent) {
  SimulatedCounts sim;
  sim.intersection_id = "7";
  const MovementKey ghost{Cardinal::south, Turn::right, VehicleClass::bus};
  sim.bins = {{0, {{ghost, 4}}}};
  const auto report = compare({real_bin("7", 0, {})}, sim);
  ASSERT_EQ(report.rows.size(), 1u);
  EXPECT_EQ(report.rows[0].real, 0);
  EXPECT_EQ(report.rows[0].simulated, 4);
  EXPECT_FALSE(report.rows[0].pct_diff);
  EXPECT_NE(report_to_csv({report}).find(",n/a\n"), std::string::npos);
  const auto doc = nlohmann::json::parse(report_to_json({report}));
  EXPECT_TRUE(doc[0]["rows"][0]["pct_diff"].is_null());
}

TEST(Compare, StructureMismatches) {
  const auto sim = reconstruct_counts({}, 2).for_intersection("7");
  EXPECT_THROW(compare({real_bin("7", 0, {})}, sim), Error);
  EXPECT_THROW(compare({real_bin("8", 0, {}), real_bin("8", 1, {})}, sim), Error);
  EXPECT_THROW(compare({real_bin("7", 0, {}), real_bin("7", 2, {})}, sim), Error);
}

TEST(FlowCounts, RebuildsBinsFromFlows) {
  const std::vector<FlowSpec> flows = {{"f_1_NL_car_0", "a", "b", 0, 900, 150, "car"},
                                       {"f_1_ET_bus_2", "c", "d", 1800, 2700, 4, "bus"}};
  const auto derived = counts_from_flows(flows, tk::base_time());
  EXPECT_EQ(derived.bin_count, 3u);
  const auto& bins = derived.bins_by_intersection.at("1");
  ASSERT_EQ(bins.size(), 3u);
  EXPECT_EQ(bins[0].count(kNorthLeftCar), 150);
  EXPECT_TRUE(bins[1].counts.empty() || bins[1].count(kNorthLeftCar) == 0);
  EXPECT_EQ(bins[2].count({Cardinal::east, Turn::through, VehicleClass::bus}), 4);
  EXPECT_THROW(counts_from_flows({{"f_1_NL_car_0", "a", "b", 0, 900, 1, "car"},
                                  {"f_1_NL_car_1", "a", "b", 900, 1500, 1, "car"}},
                                 tk::base_time()),
               Error);
}

TEST(EndToEnd, OfflineOracleIsExact) {
  const auto net = parse_network(tk::read_fixture("four_way.net.xml"));
  const auto binding = std::get<IntersectionBinding>(bind_intersection(net, "1001", 0.0, 0.0));
  std::mt19937 rng(1);
  auto bins = tk::random_bins(rng, "1001", 4, tk::base_time(), 40);
  bins[0].counts[kNorthLeftCar] = 150;
  const auto compiled = compile_flows(binding, bins, default_vehicle_types(), tk::base_time());
  const auto routes = parse_routes_xml(emit_routes_xml(compiled.flows, default_vehicle_types()));
  const auto vehroutes = parse_vehroutes(tk::synth_vehroutes(routes.flows));
  std::vector<std::string> ids;
  for (const auto& r : vehroutes.records) ids.push_back(r.vehicle_id);
  const auto sim = reconstruct_counts(ids, bins.size());
  EXPECT_TRUE(sim.diagnostics.empty());
  const auto report = compare(bins, sim.for_intersection("1001"));
  EXPECT_TRUE(report.all_zero_diff());
  EXPECT_EQ(report.totals.abs_diff, 0);
  EXPECT_EQ(sim.for_intersection("1001").count(kNorthLeftCar, 0), 150);
}
