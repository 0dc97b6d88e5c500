#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tmcsim/error.hpp"
#include "tmcsim/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using tmcsim::Error;
using tmcsim::ErrorCategory;

namespace {

int exit_code_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::invalid_input:
    case ErrorCategory::parse:
      return 2;
    case ErrorCategory::not_found:
      return 3;
    case ErrorCategory::no_data:
      return 4;
    case ErrorCategory::misaligned:
      return 5;
    case ErrorCategory::tolerance:
      return 6;
    case ErrorCategory::transport:
    case ErrorCategory::http_status:
    case ErrorCategory::rate_limit:
    case ErrorCategory::schema_drift:
      return 7;
    case ErrorCategory::protocol:
    case ErrorCategory::command_failed:
      return 8;
    case ErrorCategory::tool_missing:
    case ErrorCategory::tool_failed:
      return 9;
    case ErrorCategory::io:
      return 10;
    case ErrorCategory::conflict:
      return 11;
  }
  return 1;
}

const char* hint_for(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::invalid_input:
      return "check the manifest fields and command-line flags (docs/manifest.md)";
    case ErrorCategory::parse:
      return "the named input file is malformed; regenerate or fix it";
    case ErrorCategory::not_found:
      return "check that the referenced file, id or junction exists";
    case ErrorCategory::no_data:
      return "run 'tmcsim timerange' to list the windows that have counts";
    case ErrorCategory::misaligned:
      return "move the window bounds onto the listed bin boundaries";
    case ErrorCategory::tolerance:
      return "verify the coordinates, or accept the match with --allow-distance";
    case ErrorCategory::transport:
      return "check network connectivity or the endpoint address";
    case ErrorCategory::http_status:
      return "the upstream service refused the request; check the API settings in the source config";
    case ErrorCategory::rate_limit:
      return "the upstream service is rate limiting; retry later or shrink the map buffer";
    case ErrorCategory::schema_drift:
      return "the upstream columns changed; update the schema mapping in the source config";
    case ErrorCategory::protocol:
      return "the TraCI server broke the protocol or closed early; check the simulator log";
    case ErrorCategory::command_failed:
      return "the TraCI server rejected a command; check that edge ids match the running network";
    case ErrorCategory::tool_missing:
      return "install the simulator tools or put them on PATH";
    case ErrorCategory::tool_failed:
      return "see the tool output above";
    case ErrorCategory::io:
      return "check permissions and free space in the output directory";
    case ErrorCategory::conflict:
      return "wait for the running operation to finish";
  }
  return "";
}

// Refuses to spawn anything; used unless a command opted into processes.
class NoProcessRunner final : public tmcsim::ProcessRunner {
 public:
  tmcsim::ProcessResult run(const std::vector<std::string>& argv) override {
    throw Error(ErrorCategory::invalid_input,
                "running '" + argv.at(0) + "' needs --auto-fetch-network or --launch");
  }
};

struct ManifestFlags {
  std::string manifest_path;
  std::vector<std::string> ids;
  std::string network;
  bool auto_fetch_network = false;
  std::optional<double> buffer_m;
  std::string data;
  bool auto_fetch_data = false;
  std::string source_config;
  std::string start;
  std::string end;
  std::string scale;
  std::vector<std::string> class_scale;
  std::vector<std::string> vtype_settings;
  std::optional<double> tolerance;
  std::optional<double> allow_distance;
  bool include_untyped = false;
  std::optional<double> step_length;
  bool no_vehroute = false;
  bool launch = false;
  std::string simulator;
  std::string out;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--manifest,-m", manifest_path, "Manifest JSON; its values win over flags");
    cmd->add_option("--ids", ids, "Intersection ids")->delimiter(',');
    cmd->add_option("--network", network, "Network file");
    cmd->add_flag("--auto-fetch-network", auto_fetch_network, "Download and convert the map");
    cmd->add_option("--buffer", buffer_m, "Map buffer around the intersections, meters");
    cmd->add_option("--data", data, "Count CSV");
    cmd->add_flag("--auto-fetch-data", auto_fetch_data, "Query the open data API");
    cmd->add_option("--source-config", source_config, "Schema mapping and API settings");
    cmd->add_option("--start", start, "Window start, YYYY-MM-DDTHH:MM:SS");
    cmd->add_option("--end", end, "Window end (exclusive)");
    cmd->add_option("--scale", scale, "Scale factor for every class");
    cmd->add_option("--class-scale", class_scale, "Per-class scale, CLASS=FACTOR")->delimiter(',');
    cmd->add_option("--vtype", vtype_settings, "Vehicle type override, CLASS:KEY=VALUE");
    cmd->add_option("--tolerance", tolerance, "Junction match tolerance, meters");
    cmd->add_option("--allow-distance", allow_distance, "Accept a junction match up to this distance");
    cmd->add_flag("--include-untyped-edges", include_untyped, "Keep edges without a type");
    cmd->add_option("--step-length", step_length, "Simulation step, seconds");
    cmd->add_flag("--no-vehroute-output", no_vehroute, "Do not request vehroute output");
    cmd->add_flag("--launch", launch, "Run the simulator on the built configuration");
    cmd->add_option("--simulator", simulator, "Simulator executable");
    cmd->add_option("--out,-o", out, "Output directory");
  }

  json flags_json() const {
    json doc = json::object();
    if (!ids.empty()) doc["intersection_ids"] = ids;
    if (!network.empty()) doc["network"]["path"] = absolute(network);
    if (auto_fetch_network) doc["network"]["auto_fetch"] = true;
    if (buffer_m) doc["network"]["buffer_m"] = *buffer_m;
    if (!data.empty()) doc["data"]["path"] = absolute(data);
    if (auto_fetch_data) doc["data"]["auto_fetch"] = true;
    if (!source_config.empty()) doc["source_config"] = absolute(source_config);
    if (!start.empty()) doc["window"]["start"] = start;
    if (!end.empty()) doc["window"]["end"] = end;
    if (!scale.empty()) doc["scale"]["all"] = scale;
    for (const auto& item : class_scale) {
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw Error(ErrorCategory::invalid_input, "--class-scale expects CLASS=FACTOR, got '" + item + "'");
      }
      doc["scale"][item.substr(0, eq)] = item.substr(eq + 1);
    }
    for (const auto& setting : vtype_settings) {
      const auto colon = setting.find(':');
      const auto eq = setting.find('=');
      if (colon == std::string::npos || eq == std::string::npos || eq < colon) {
        throw Error(ErrorCategory::invalid_input, "--vtype expects CLASS:KEY=VALUE, got '" + setting + "'");
      }
      const auto vclass = setting.substr(0, colon);
      const auto key = setting.substr(colon + 1, eq - colon - 1);
      const auto value = setting.substr(eq + 1);
      if (key == "length" || key == "sigma") {
        try {
          doc["vehicle_types"][vclass][key] = std::stod(value);
        } catch (const std::exception&) {
          throw Error(ErrorCategory::invalid_input, "--vtype " + key + " must be a number");
        }
      } else {
        doc["vehicle_types"][vclass][key] = value;
      }
    }
    if (tolerance) doc["match_tolerance_m"] = *tolerance;
    if (allow_distance) doc["allow_distance_m"] = *allow_distance;
    if (include_untyped) doc["include_untyped_edges"] = true;
    if (step_length) doc["simulation"]["step_length"] = *step_length;
    if (no_vehroute) doc["simulation"]["vehroute_output"] = false;
    if (launch) doc["simulation"]["launch"] = true;
    if (!simulator.empty()) doc["simulation"]["executable"] = simulator;
    if (!out.empty()) doc["output_dir"] = absolute(out);
    return doc;
  }

  static std::string absolute(const std::string& path) { return fs::absolute(path).string(); }

  tmcsim::PipelineManifest resolve() const {
    json doc = flags_json();
    if (!manifest_path.empty()) {
      json file;
      try {
        file = json::parse(tmcsim::read_text_file(manifest_path));
      } catch (const json::exception& e) {
        throw Error(ErrorCategory::parse, "manifest '" + manifest_path + "' is not valid JSON: " + e.what());
      }
      // paths inside the manifest are relative to the manifest itself
      const auto base = fs::absolute(manifest_path).parent_path();
      auto rebase = [&](json& node, const char* key) {
        if (node.is_object() && node.contains(key) && node[key].is_string()) {
          const fs::path p = node[key].get<std::string>();
          if (p.is_relative()) node[key] = (base / p).lexically_normal().string();
        }
      };
      if (file.contains("network")) rebase(file["network"], "path");
      if (file.contains("data")) rebase(file["data"], "path");
      rebase(file, "source_config");
      rebase(file, "output_dir");
      doc.merge_patch(file);
    }
    if (!doc.contains("output_dir")) doc["output_dir"] = absolute("out");
    return tmcsim::PipelineManifest::from_json(doc.dump());
  }

  bool wants_network() const { return auto_fetch_network || auto_fetch_data; }
};

std::unique_ptr<tmcsim::HttpFetcher> fetcher_for(const tmcsim::PipelineManifest& m, bool force = false) {
  if (force || m.auto_fetch_data || m.auto_fetch_network) return std::make_unique<tmcsim::NetworkHttpFetcher>();
  return std::make_unique<tmcsim::DisabledHttpFetcher>();
}

std::unique_ptr<tmcsim::ProcessRunner> runner_for(const tmcsim::PipelineManifest& m, bool force = false) {
  if (force || m.auto_fetch_network || m.launch_simulator) return std::make_unique<tmcsim::PosixProcessRunner>();
  return std::make_unique<NoProcessRunner>();
}

void print_diagnostics(const std::vector<std::string>& diagnostics) {
  for (const auto& d : diagnostics) std::cerr << "note: " << d << "\n";
}

int cmd_timerange(const ManifestFlags& flags) {
  const auto m = flags.resolve();
  auto http = fetcher_for(m);
  const auto ranges = tmcsim::run_timerange(m, *http);
  bool any = false;
  std::cout << "intersection_id,start,end\n";
  for (const auto& id : m.intersection_ids) {
    const auto& spans = ranges.at(id);
    if (spans.empty()) {
      std::cerr << "note: intersection '" << id << "' has no counts\n";
      continue;
    }
    any = true;
    for (const auto& span : spans) {
      std::cout << id << "," << tmcsim::format_timestamp(span.start) << ","
                << tmcsim::format_timestamp(span.end) << "\n";
    }
  }
  if (!any) throw Error(ErrorCategory::no_data, "no data for any requested intersection");
  return 0;
}

int cmd_build(const ManifestFlags& flags) {
  const auto m = flags.resolve();
  auto http = fetcher_for(m);
  auto runner = runner_for(m);
  const auto artifacts = tmcsim::run_build(m, *http, *runner);
  print_diagnostics(artifacts.diagnostics);
  std::cout << m.to_json() << "\n";
  std::cerr << "wrote " << artifacts.net_path << "\n"
            << "wrote " << artifacts.route_path << " (" << artifacts.flow_count << " flows, "
            << artifacts.vehicle_count << " vehicles)\n"
            << "wrote " << artifacts.config_path << "\n";
  return 0;
}

int cmd_fetch_map(const ManifestFlags& flags) {
  const auto m = flags.resolve();
  auto http = fetcher_for(m, true);
  auto runner = runner_for(m, true);
  const auto fetched = tmcsim::run_fetch_map(m, *http, *runner, m.output_dir);
  print_diagnostics(fetched.diagnostics);
  std::printf("bbox %.6f,%.6f,%.6f,%.6f\n", fetched.bbox.lon_min, fetched.bbox.lat_min, fetched.bbox.lon_max,
              fetched.bbox.lat_max);
  std::cout << "wrote " << fetched.net_path << "\n";
  return 0;
}

struct ValidateFlags {
  std::string routes;
  std::string vehroutes;
  std::string traci;
  std::optional<std::int64_t> steps;
  std::string report = "report.csv";
};

int cmd_validate(const ValidateFlags& flags) {
  tmcsim::ValidationRequest request;
  request.routes_xml = tmcsim::read_text_file(flags.routes);
  if (!flags.vehroutes.empty()) request.vehroutes_xml = tmcsim::read_text_file(flags.vehroutes);
  if (!flags.traci.empty()) {
    tmcsim::TraciEndpoint endpoint;
    const auto colon = flags.traci.rfind(':');
    try {
      if (colon == std::string::npos) {
        endpoint.port = static_cast<std::uint16_t>(std::stoi(flags.traci));
      } else {
        endpoint.host = flags.traci.substr(0, colon);
        endpoint.port = static_cast<std::uint16_t>(std::stoi(flags.traci.substr(colon + 1)));
      }
    } catch (const std::exception&) {
      throw Error(ErrorCategory::invalid_input, "--traci expects HOST:PORT, got '" + flags.traci + "'");
    }
    request.traci = endpoint;
  }
  request.steps = flags.steps;
  const auto outcome = tmcsim::run_validation(request);
  print_diagnostics(outcome.diagnostics);
  const bool as_json = fs::path(flags.report).extension() == ".json";
  tmcsim::write_text_file(flags.report, as_json ? tmcsim::report_to_json(outcome.reports)
                                                : tmcsim::report_to_csv(outcome.reports));
  for (const auto& r : outcome.reports) {
    std::cout << r.intersection_id << ": real " << r.totals.real << ", simulated " << r.totals.simulated
              << ", abs diff " << r.totals.abs_diff << (r.all_zero_diff() ? " (exact match)" : "") << "\n";
  }
  std::cout << "wrote " << flags.report << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Turning movement counts to simulator demand"};
  app.require_subcommand(1);

  ManifestFlags timerange_flags;
  auto* timerange = app.add_subcommand("timerange", "List the windows that have counts");
  timerange_flags.add_to(timerange);

  ManifestFlags build_flags;
  auto* build = app.add_subcommand("build", "Write network, route and configuration files");
  build_flags.add_to(build);

  ManifestFlags fetch_flags;
  auto* fetch = app.add_subcommand("fetch-map", "Download the map around the intersections and convert it");
  fetch_flags.add_to(fetch);

  ValidateFlags validate_flags;
  auto* validate = app.add_subcommand("validate", "Compare simulated vehicles with the route file counts");
  validate->add_option("--routes", validate_flags.routes, "Route file written by build")->required();
  auto* vehroutes = validate->add_option("--vehroutes", validate_flags.vehroutes, "Simulator vehroute output");
  auto* traci = validate->add_option("--traci", validate_flags.traci, "Live TraCI endpoint, HOST:PORT");
  vehroutes->excludes(traci);
  validate->add_option("--steps", validate_flags.steps, "TraCI steps to run (default: flow span)");
  validate->add_option("--report", validate_flags.report, "Report path (.csv or .json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // help and version requests exit 0; usage errors share the invalid-input code
    return app.exit(e) == 0 ? 0 : exit_code_for(ErrorCategory::invalid_input);
  }

  try {
    if (*timerange) return cmd_timerange(timerange_flags);
    if (*build) return cmd_build(build_flags);
    if (*fetch) return cmd_fetch_map(fetch_flags);
    if (*validate) {
      if (validate_flags.vehroutes.empty() == validate_flags.traci.empty()) {
        throw Error(ErrorCategory::invalid_input, "validate needs --vehroutes or --traci");
      }
      return cmd_validate(validate_flags);
    }
  } catch (const Error& e) {
    std::cerr << "error [" << tmcsim::to_string(e.category()) << "]: " << e.what() << "\n"
              << "hint: " << hint_for(e.category()) << "\n";
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
