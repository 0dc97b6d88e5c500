#include <gtest/gtest.h>

#include <filesystem>

#include "doubles.hpp"
#include "generators.hpp"
#include "json.hpp"
#include "mock_traci_server.hpp"
#include "tmcsim/error.hpp"
#include "tmcsim/pipeline.hpp"

using namespace tmcsim;
using nlohmann::json;
namespace fs = std::filesystem;
namespace tk = tmcsim::testkit;

namespace {

PipelineManifest fixture_manifest(const std::string& out_dir) {
  auto m = PipelineManifest::from_json(tk::read_fixture("manifest.json"));
  m.resolve_paths(TMCSIM_FIXTURE_DIR);
  m.output_dir = out_dir;
  return m;
}

ErrorCategory category_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  ADD_FAILURE() << "no error";
  return ErrorCategory::io;
}

}  // namespace

TEST(Manifest, ParsesAllSections) {
  const auto m = PipelineManifest::from_json(R"({
    "intersection_ids": [13463414, "2002"],
    "network": {"auto_fetch": true, "buffer_m": 800},
    "data": {"path": "counts.csv"},
    "window": {"start": "2024-03-05T08:00:00", "end": "2024-03-05T09:00:00"},
    "vehicle_types": {"truck": {"length": 9.5, "car_follow_model": "IDM"}},
    "scale": {"all": 1.2, "bus": "0.5"},
    "locations": {"2002": [-79.4, 43.7]},
    "allow_distance_m": 12,
    "simulation": {"step_length": 0.5, "launch": true, "executable": "sumo-gui"}
  })");
  EXPECT_EQ(m.intersection_ids, (std::vector<std::string>{"13463414", "2002"}));
  EXPECT_TRUE(m.auto_fetch_network);
  EXPECT_EQ(m.map_buffer_m, 800);
  EXPECT_EQ(m.vehicle_types[1].length, 9.5);
  EXPECT_EQ(m.vehicle_types[1].car_follow_model, CarFollowModel::IDM);
  EXPECT_EQ(m.scaling.all.numerator * 10, m.scaling.all.denominator * 12);
  EXPECT_EQ(m.locations.at("2002"), (GeoPoint{-79.4, 43.7}));
  EXPECT_EQ(m.allow_distance_m, 12.0);
  EXPECT_TRUE(m.launch_simulator);
  EXPECT_EQ(m.simulator_executable, "sumo-gui");
  // to_json is a faithful echo
  const auto again = PipelineManifest::from_json(m.to_json());
  EXPECT_EQ(again.to_json(), m.to_json());
}

TEST(Manifest, RejectsInvalidDocuments) {
  const std::vector<std::string> bad = {
      R"({"intersection_ids": []})",
      R"({"intersection_ids": ["a_b"]})",
      R"({"intersection_ids": ["1", "1"]})",
      R"({"intersection_ids": ["1"], "window": {"start": "2024-03-05T09:00:00", "end": "2024-03-05T08:00:00"}})",
      R"({"intersection_ids": ["1"], "window": {"start": "soon"}})",
      R"({"intersection_ids": ["1"], "vehicle_types": {"car": {"sigma": 2}}})",
      R"({"intersection_ids": ["1"], "vehicle_types": {"tram": {}}})",
      R"({"intersection_ids": ["1"], "network": {"path": "x", "auto_fetch": true}})",
      R"({"intersection_ids": ["1"], "scale": -1})",
      R"({"intersection_ids": ["1"], "simulation": {"step_length": 0}})",
      R"({"intersection_ids": "1"})",
      R"({})",
  };
  for (const auto& doc : bad) {
    EXPECT_EQ(category_of([&] { PipelineManifest::from_json(doc); }), ErrorCategory::invalid_input) << doc;
  }
  EXPECT_EQ(category_of([&] { PipelineManifest::from_json("{"); }), ErrorCategory::parse);
}

TEST(Build, FixtureWritesThreeFiles) {
  tk::TempDir dir;
  tk::FakeHttpFetcher http;
  tk::FakeProcessRunner runner;
  const auto artifacts = run_build(fixture_manifest(dir.str("out")), http, runner);
  EXPECT_TRUE(fs::exists(artifacts.net_path));
  EXPECT_TRUE(fs::exists(artifacts.route_path));
  EXPECT_TRUE(fs::exists(artifacts.config_path));
  EXPECT_EQ(artifacts.flow_count, 1u);
  EXPECT_EQ(artifacts.vehicle_count, 150);
  const auto routes = read_text_file(artifacts.route_path);
  EXPECT_NE(routes.find(R"(<flow id="f_1001_NL_car_0" from="s_in" to="w_out" begin="0" end="900" number="150" type="car"/>)"),
            std::string::npos);
  const auto cfg = read_text_file(artifacts.config_path);
  EXPECT_NE(cfg.find("<end value=\"900\"/>"), std::string::npos);
  EXPECT_NE(cfg.find("<net-file value=\"scenario.net.xml\"/>"), std::string::npos);
  EXPECT_EQ(read_text_file(artifacts.net_path), tk::read_fixture("four_way.net.xml"));
  // no network or process I/O without opt-in
  EXPECT_TRUE(http.requests.empty());
  EXPECT_TRUE(runner.calls.empty());
}

TEST(Build, ByteIdenticalAcrossRuns) {
  tk::TempDir dir;
  tk::FakeHttpFetcher http;
  tk::FakeProcessRunner runner;
  auto m = fixture_manifest(dir.str("a"));
  m.data_path = tk::fixture_path("four_bins.csv");
  m.window_end = *parse_timestamp("2024-03-05T09:00:00");
  const auto a = run_build(m, http, runner);
  m.output_dir = dir.str("b");
  const auto b = run_build(m, http, runner);
  for (const auto& name : {kNetFileName, kRouteFileName, kConfigFileName}) {
    EXPECT_EQ(read_text_file(dir.str("a/" + std::string(name))), read_text_file(dir.str("b/" + std::string(name))));
  }
  EXPECT_GT(a.flow_count, 100u);
  EXPECT_EQ(a.vehicle_count, b.vehicle_count);
}

TEST(Build, ToleranceNeedsConfirmation) {
  tk::TempDir dir;
  tk::FakeHttpFetcher http;
  tk::FakeProcessRunner runner;
  auto m = fixture_manifest(dir.str("out"));
  m.locations["1001"] = {7.0, 0.0};  // 7 m east of the centre
  try {
    run_build(m, http, runner);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::tolerance);
    EXPECT_NE(std::string(e.what()).find("--allow-distance"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("'C'"), std::string::npos);
  }
  m.allow_distance_m = 6.5;
  EXPECT_EQ(category_of([&] { run_build(m, http, runner); }), ErrorCategory::tolerance);
  m.allow_distance_m = 7.5;
  const auto artifacts = run_build(m, http, runner);
  ASSERT_EQ(artifacts.bindings.size(), 1u);
  EXPECT_DOUBLE_EQ(artifacts.bindings[0].match_distance, 7.0);
}

TEST(Build, MissingSourcesAndWindow) {
  tk::TempDir dir;
  tk::FakeHttpFetcher http;
  tk::FakeProcessRunner runner;
  auto m = fixture_manifest(dir.str("out"));
  m.window_start.reset();
  EXPECT_EQ(category_of([&] { run_build(m, http, runner); }), ErrorCategory::invalid_input);
  m = fixture_manifest(dir.str("out"));
  m.network_path.reset();
  EXPECT_EQ(category_of([&] { run_build(m, http, runner); }), ErrorCategory::invalid_input);
  m = fixture_manifest(dir.str("out"));
  m.window_start = *parse_timestamp("2024-03-06T08:00:00");
  m.window_end = *parse_timestamp("2024-03-06T08:15:00");
  EXPECT_EQ(category_of([&] { run_build(m, http, runner); }), ErrorCategory::no_data);
}

TEST(Build, AutoFetchNetworkAndLaunch) {
  tk::TempDir dir;
  tk::FakeHttpFetcher http;
  http.handler = [](const std::string&) -> HttpResponse { return {200, "<osm/>", "text/xml"}; };
  tk::FakeProcessRunner runner;
  runner.output_flag = "--output-file";
  runner.output_content = tk::read_fixture("four_way.net.xml");
  auto m = fixture_manifest(dir.str("out"));
  m.network_path.reset();
  m.auto_fetch_network = true;
  m.map_buffer_m = 500;
  m.launch_simulator = true;
  const auto artifacts = run_build(m, http, runner);
  ASSERT_EQ(http.requests.size(), 1u);
  ASSERT_EQ(runner.calls.size(), 2u);
  EXPECT_EQ(runner.calls[0][0], "netconvert");
  EXPECT_EQ(runner.calls[1], (std::vector<std::string>{"sumo", "-c", artifacts.config_path}));
  EXPECT_EQ(read_text_file(artifacts.net_path), tk::read_fixture("four_way.net.xml"));
  EXPECT_TRUE(fs::exists(dir.str("out/map.osm.xml")));
}

TEST(Build, LaunchFailureSurfaces) {
  tk::TempDir dir;
  tk::FakeHttpFetcher http;
  tk::FakeProcessRunner runner;
  runner.result = {2, "", "cannot open display"};
  auto m = fixture_manifest(dir.str("out"));
  m.launch_simulator = true;
  EXPECT_EQ(category_of([&] { run_build(m, http, runner); }), ErrorCategory::tool_failed);
}

TEST(Timerange, FixtureAndUnknownIds) {
  tk::FakeHttpFetcher http;
  auto m = fixture_manifest("unused");
  m.intersection_ids = {"1001", "404"};
  const auto r = run_timerange(m, http);
  ASSERT_EQ(r.at("1001").size(), 1u);
  EXPECT_EQ(format_timestamp(r.at("1001")[0].end), "2024-03-05T08:15:00");
  EXPECT_TRUE(r.at("404").empty());
}

TEST(Validation, VehrouteAndTraciPaths) {
  tk::TempDir dir;
  tk::FakeHttpFetcher http;
  tk::FakeProcessRunner runner;
  const auto artifacts = run_build(fixture_manifest(dir.str("out")), http, runner);
  ValidationRequest req;
  req.routes_xml = read_text_file(artifacts.route_path);
  const auto routes = parse_routes_xml(req.routes_xml);
  req.vehroutes_xml = tk::synth_vehroutes(routes.flows);
  const auto offline = run_validation(req);
  ASSERT_EQ(offline.reports.size(), 1u);
  EXPECT_TRUE(offline.reports[0].all_zero_diff());
  EXPECT_EQ(offline.reports[0].totals.real, 150);

  // live path: 147 of the 150 vehicles show up
  tk::MockTraciScript script;
  for (int n = 0; n < 147; ++n) {
    script.steps.push_back({{"s_in", {"f_1001_NL_car_0." + std::to_string(n)}}});
  }
  tk::MockTraciServer server(script);
  ValidationRequest live;
  live.routes_xml = req.routes_xml;
  live.traci = TraciEndpoint{"127.0.0.1", server.port()};
  live.steps = 200;
  const auto online = run_validation(live);
  ASSERT_EQ(online.reports.size(), 1u);
  EXPECT_EQ(online.reports[0].totals.simulated, 147);
  EXPECT_EQ(online.reports[0].totals.abs_diff, 3);
  EXPECT_DOUBLE_EQ(*online.reports[0].totals.pct_diff, 2.0);

  ValidationRequest neither;
  neither.routes_xml = req.routes_xml;
  EXPECT_EQ(category_of([&] { run_validation(neither); }), ErrorCategory::invalid_input);
}
