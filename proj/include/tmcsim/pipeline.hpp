#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tmcsim/demand.hpp"
#include "tmcsim/http.hpp"
#include "tmcsim/junction_mapper.hpp"
#include "tmcsim/osm.hpp"
#include "tmcsim/tmc.hpp"
#include "tmcsim/traci.hpp"
#include "tmcsim/validation.hpp"

namespace tmcsim {

/// Everything needed to turn a list of intersections into a scenario. The
/// JSON form is documented in docs/manifest.md.
struct PipelineManifest {
  std::vector<std::string> intersection_ids;

  std::optional<std::string> network_path;
  bool auto_fetch_network = false;
  double map_buffer_m = kDefaultMapBuffer;

  std::optional<std::string> data_path;
  bool auto_fetch_data = false;
  std::optional<std::string> source_config_path;  // schema + API settings

  std::optional<Timestamp> window_start;
  std::optional<Timestamp> window_end;

  std::vector<VehicleTypeConfig> vehicle_types = default_vehicle_types();
  Scaling scaling;
  std::map<std::string, GeoPoint> locations;  // overrides dataset coordinates

  double match_tolerance_m = kDefaultMatchTolerance;
  std::optional<double> allow_distance_m;
  bool include_untyped_edges = false;

  double step_length = 1.0;
  bool vehroute_output = true;
  bool launch_simulator = false;
  std::string simulator_executable = "sumo";

  std::string output_dir = "out";

  /// Throws Error{parse} for bad JSON and Error{invalid_input} for values
  /// that violate the manifest rules.
  static PipelineManifest from_json(std::string_view json_text);
  std::string to_json() const;

  /// Makes relative file paths relative to `base_dir`.
  void resolve_paths(const std::string& base_dir);
  /// Checks invariants that hold for every command (ids, window order, vtypes).
  void validate() const;
};

/// Source config used when the manifest names none.
std::string default_source_config_path();

/// Loads counts from the manifest's CSV or, with auto-fetch, from the open
/// data API through `http`.
TmcDataset load_dataset(const PipelineManifest& manifest, HttpFetcher& http);

std::map<std::string, std::vector<TimeSpan>> run_timerange(const PipelineManifest& manifest,
                                                           HttpFetcher& http);

struct FetchedMap {
  BoundingBox bbox;
  std::string osm_path;
  std::string net_path;
  std::vector<std::string> diagnostics;
};

/// Downloads the map around the manifest's intersections and converts it.
FetchedMap run_fetch_map(const PipelineManifest& manifest, HttpFetcher& http,
                         ProcessRunner& runner, const std::string& out_dir);

struct BuildArtifacts {
  std::string net_path;
  std::string route_path;
  std::string config_path;
  std::size_t flow_count = 0;
  std::int64_t vehicle_count = 0;
  std::vector<IntersectionBinding> bindings;
  std::vector<std::string> diagnostics;
};

inline constexpr std::string_view kNetFileName = "scenario.net.xml";
inline constexpr std::string_view kRouteFileName = "scenario.rou.xml";
inline constexpr std::string_view kConfigFileName = "scenario.sumocfg";
inline constexpr std::string_view kVehrouteFileName = "vehroutes.xml";

/// Full build: window the counts, bind every intersection, compile flows and
/// write the network, route and configuration files into output_dir.
BuildArtifacts run_build(const PipelineManifest& manifest, HttpFetcher& http, ProcessRunner& runner);

struct ValidationRequest {
  std::string routes_xml;
  std::optional<std::string> vehroutes_xml;
  std::optional<TraciEndpoint> traci;
  std::optional<std::int64_t> steps;  // TraCI only; defaults to the flows' span
};

struct ValidationOutcome {
  std::vector<ComparisonReport> reports;
  std::vector<std::string> diagnostics;
};

/// Compares the counts encoded in a routes document against simulated
/// vehicles read from vehroute output or collected live over TraCI.
ValidationOutcome run_validation(const ValidationRequest& request);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace tmcsim
