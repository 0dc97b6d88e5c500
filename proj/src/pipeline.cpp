#include "tmcsim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tmcsim/error.hpp"
#include "tmcsim/network.hpp"
#include "tmcsim/open_data.hpp"
#include "xml_sax.hpp"

#ifndef TMCSIM_CONFIG_DIR
#define TMCSIM_CONFIG_DIR "config"
#endif

namespace tmcsim {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::not_found, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw Error(ErrorCategory::io, "cannot create '" + p.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCategory::io, "cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCategory::io, "short write to '" + path + "'");
}

std::string default_source_config_path() {
  if (const char* dir = std::getenv("TMCSIM_CONFIG_DIR")) {
    return (fs::path(dir) / "toronto_tmc.json").string();
  }
  return (fs::path(TMCSIM_CONFIG_DIR) / "toronto_tmc.json").string();
}

namespace {

[[noreturn]] void manifest_error(const std::string& what) {
  throw Error(ErrorCategory::invalid_input, "manifest: " + what);
}

Timestamp timestamp_field(const json& value, const char* name) {
  if (!value.is_string()) manifest_error(std::string(name) + " must be a timestamp string");
  auto t = parse_timestamp(value.get<std::string>());
  if (!t) manifest_error(std::string(name) + " '" + value.get<std::string>() + "' is not a timestamp");
  return *t;
}

ScaleFactor scale_field(const json& value) {
  if (value.is_string()) return ScaleFactor::parse(value.get<std::string>());
  if (value.is_number()) return ScaleFactor::from_double(value.get<double>());
  manifest_error("scale factors must be numbers or decimal strings");
}

std::string id_text(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer() || value.is_number_unsigned()) return value.dump();
  manifest_error("intersection ids must be strings or integers");
}

std::string format_scale(const ScaleFactor& f) {
  // exact decimal: denominators are powers of ten by construction
  std::string digits = std::to_string(f.numerator / f.denominator);
  std::int64_t frac = f.numerator % f.denominator;
  if (frac == 0) return digits;
  std::string tail;
  for (std::int64_t d = f.denominator / 10; d > 0; d /= 10) {
    tail += static_cast<char>('0' + (frac / d) % 10);
  }
  while (!tail.empty() && tail.back() == '0') tail.pop_back();
  return digits + "." + tail;
}

}  // namespace

PipelineManifest PipelineManifest::from_json(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCategory::parse, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) manifest_error("top level must be an object");

  PipelineManifest m;
  try {
    const auto& ids = doc.at("intersection_ids");
    if (!ids.is_array()) manifest_error("intersection_ids must be a list");
    for (const auto& id : ids) m.intersection_ids.push_back(id_text(id));

    if (doc.contains("network")) {
      const auto& net = doc["network"];
      if (net.contains("path")) m.network_path = net["path"].get<std::string>();
      m.auto_fetch_network = net.value("auto_fetch", false);
      m.map_buffer_m = net.value("buffer_m", m.map_buffer_m);
    }
    if (doc.contains("data")) {
      const auto& data = doc["data"];
      if (data.contains("path")) m.data_path = data["path"].get<std::string>();
      m.auto_fetch_data = data.value("auto_fetch", false);
    }
    if (doc.contains("source_config")) m.source_config_path = doc["source_config"].get<std::string>();
    if (doc.contains("window")) {
      const auto& window = doc["window"];
      if (window.contains("start")) m.window_start = timestamp_field(window["start"], "window.start");
      if (window.contains("end")) m.window_end = timestamp_field(window["end"], "window.end");
    }
    if (doc.contains("vehicle_types")) {
      for (const auto& [name, spec] : doc["vehicle_types"].items()) {
        auto vclass = vehicle_class_from_string(name);
        if (!vclass) manifest_error("unknown vehicle class '" + name + "'");
        auto it = std::find_if(m.vehicle_types.begin(), m.vehicle_types.end(),
                               [&](const auto& vt) { return vt.vclass == *vclass; });
        auto& vt = *it;
        vt.type_id = spec.value("type_id", vt.type_id);
        vt.length = spec.value("length", vt.length);
        vt.sigma = spec.value("sigma", vt.sigma);
        if (spec.contains("car_follow_model")) {
          auto model = car_follow_model_from_string(spec["car_follow_model"].get<std::string>());
          if (!model) manifest_error("unknown car_follow_model for " + name);
          vt.car_follow_model = *model;
        }
      }
    }
    if (doc.contains("scale")) {
      const auto& scale = doc["scale"];
      if (scale.is_object()) {
        for (const auto& [name, value] : scale.items()) {
          if (name == "all") {
            m.scaling.all = scale_field(value);
          } else if (auto vclass = vehicle_class_from_string(name)) {
            m.scaling.per_class[*vclass] = scale_field(value);
          } else {
            manifest_error("unknown scale key '" + name + "'");
          }
        }
      } else {
        m.scaling.all = scale_field(scale);
      }
    }
    if (doc.contains("locations")) {
      for (const auto& [id, point] : doc["locations"].items()) {
        if (!point.is_array() || point.size() != 2) manifest_error("locations." + id + " must be [lon, lat]");
        m.locations[id] = {point[0].get<double>(), point[1].get<double>()};
      }
    }
    m.match_tolerance_m = doc.value("match_tolerance_m", m.match_tolerance_m);
    if (doc.contains("allow_distance_m")) m.allow_distance_m = doc["allow_distance_m"].get<double>();
    m.include_untyped_edges = doc.value("include_untyped_edges", false);
    if (doc.contains("simulation")) {
      const auto& sim = doc["simulation"];
      m.step_length = sim.value("step_length", m.step_length);
      m.vehroute_output = sim.value("vehroute_output", m.vehroute_output);
      m.launch_simulator = sim.value("launch", m.launch_simulator);
      m.simulator_executable = sim.value("executable", m.simulator_executable);
    }
    m.output_dir = doc.value("output_dir", m.output_dir);
  } catch (const json::exception& e) {
    manifest_error(e.what());
  }
  m.validate();
  return m;
}

void PipelineManifest::validate() const {
  if (intersection_ids.empty()) manifest_error("intersection_ids is empty");
  std::set<std::string> seen;
  for (const auto& id : intersection_ids) {
    if (id.empty() || id.find_first_of("_.") != std::string::npos) {
      manifest_error("intersection id '" + id + "' must be non-empty without '_' or '.'");
    }
    if (!seen.insert(id).second) manifest_error("duplicate intersection id '" + id + "'");
  }
  if (window_start && window_end && !(*window_start < *window_end)) {
    manifest_error("window.start must precede window.end");
  }
  if (network_path && auto_fetch_network) manifest_error("network has both a path and auto_fetch");
  if (data_path && auto_fetch_data) manifest_error("data has both a path and auto_fetch");
  if (!(match_tolerance_m >= 0.0)) manifest_error("match_tolerance_m must be non-negative");
  if (allow_distance_m && !(*allow_distance_m >= 0.0)) manifest_error("allow_distance_m must be non-negative");
  if (!(step_length > 0.0)) manifest_error("simulation.step_length must be positive");
  if (!(map_buffer_m >= 0.0)) manifest_error("network.buffer_m must be non-negative");
  for (const auto& vt : vehicle_types) tmcsim::validate(vt);
}

std::string PipelineManifest::to_json() const {
  json doc;
  doc["intersection_ids"] = intersection_ids;
  json net = json::object();
  if (network_path) net["path"] = *network_path;
  if (auto_fetch_network) net["auto_fetch"] = true;
  net["buffer_m"] = map_buffer_m;
  doc["network"] = net;
  json data = json::object();
  if (data_path) data["path"] = *data_path;
  if (auto_fetch_data) data["auto_fetch"] = true;
  doc["data"] = data;
  if (source_config_path) doc["source_config"] = *source_config_path;
  json window = json::object();
  if (window_start) window["start"] = format_timestamp(*window_start);
  if (window_end) window["end"] = format_timestamp(*window_end);
  doc["window"] = window;
  json vtypes = json::object();
  for (const auto& vt : vehicle_types) {
    vtypes[std::string(to_string(vt.vclass))] = {{"type_id", vt.type_id},
                                                 {"length", vt.length},
                                                 {"sigma", vt.sigma},
                                                 {"car_follow_model", to_string(vt.car_follow_model)}};
  }
  doc["vehicle_types"] = vtypes;
  json scale = {{"all", format_scale(scaling.all)}};
  for (const auto& [vclass, f] : scaling.per_class) scale[std::string(to_string(vclass))] = format_scale(f);
  doc["scale"] = scale;
  json locs = json::object();
  for (const auto& [id, p] : locations) locs[id] = {p.lon, p.lat};
  doc["locations"] = locs;
  doc["match_tolerance_m"] = match_tolerance_m;
  if (allow_distance_m) doc["allow_distance_m"] = *allow_distance_m;
  doc["include_untyped_edges"] = include_untyped_edges;
  doc["simulation"] = {{"step_length", step_length},
                       {"vehroute_output", vehroute_output},
                       {"launch", launch_simulator},
                       {"executable", simulator_executable}};
  doc["output_dir"] = output_dir;
  return doc.dump(2);
}

void PipelineManifest::resolve_paths(const std::string& base_dir) {
  auto resolve = [&](std::string& path) {
    if (!path.empty() && fs::path(path).is_relative()) path = (fs::path(base_dir) / path).string();
  };
  if (network_path) resolve(*network_path);
  if (data_path) resolve(*data_path);
  if (source_config_path) resolve(*source_config_path);
  resolve(output_dir);
}

TmcDataset load_dataset(const PipelineManifest& manifest, HttpFetcher& http) {
  const std::string config_path = manifest.source_config_path.value_or(default_source_config_path());
  const std::string config_text = read_text_file(config_path);
  if (manifest.data_path) {
    return parse_tmc_csv(read_text_file(*manifest.data_path), SchemaMapping::from_json(config_text));
  }
  if (manifest.auto_fetch_data) {
    return fetch_toronto_tmc(manifest.intersection_ids, http, OpenDataConfig::from_json(config_text));
  }
  throw Error(ErrorCategory::invalid_input, "manifest: no data source (set data.path or data.auto_fetch)");
}

std::map<std::string, std::vector<TimeSpan>> run_timerange(const PipelineManifest& manifest,
                                                           HttpFetcher& http) {
  manifest.validate();
  return available_time_range(load_dataset(manifest, http), manifest.intersection_ids);
}

namespace {

std::vector<GeoPoint> intersection_points(const PipelineManifest& manifest, const TmcDataset* ds) {
  std::vector<GeoPoint> points;
  for (const auto& id : manifest.intersection_ids) {
    if (auto it = manifest.locations.find(id); it != manifest.locations.end()) {
      points.push_back(it->second);
    } else if (ds != nullptr && ds->locations.contains(id)) {
      points.push_back(ds->locations.at(id));
    } else {
      throw Error(ErrorCategory::no_data, "no coordinates for intersection '" + id +
                                              "' (add it to manifest locations or use data with coordinates)");
    }
  }
  return points;
}

std::optional<TmcDataset> dataset_if_needed(const PipelineManifest& manifest, HttpFetcher& http) {
  const bool all_located = std::all_of(
      manifest.intersection_ids.begin(), manifest.intersection_ids.end(),
      [&](const auto& id) { return manifest.locations.contains(id); });
  if (all_located) return std::nullopt;
  return load_dataset(manifest, http);
}

}  // namespace

FetchedMap run_fetch_map(const PipelineManifest& manifest, HttpFetcher& http, ProcessRunner& runner,
                         const std::string& out_dir) {
  manifest.validate();
  const auto ds = dataset_if_needed(manifest, http);
  FetchedMap out;
  out.bbox = compute_bbox(intersection_points(manifest, ds ? &*ds : nullptr), manifest.map_buffer_m);
  out.osm_path = (fs::path(out_dir) / "map.osm.xml").string();
  out.net_path = (fs::path(out_dir) / kNetFileName).string();
  write_text_file(out.osm_path, fetch_osm(out.bbox, http));
  auto converted = convert_network(out.osm_path, out.net_path, runner);
  out.diagnostics = std::move(converted.diagnostics);
  return out;
}

BuildArtifacts run_build(const PipelineManifest& manifest, HttpFetcher& http, ProcessRunner& runner) {
  manifest.validate();
  if (!manifest.window_start || !manifest.window_end) {
    throw Error(ErrorCategory::invalid_input, "manifest: build needs window.start and window.end");
  }
  const Timestamp t0 = *manifest.window_start;
  const Timestamp t1 = *manifest.window_end;

  BuildArtifacts out;
  const TmcDataset ds = load_dataset(manifest, http);
  if (!ds.diagnostics.empty()) {
    out.diagnostics.push_back(std::to_string(ds.diagnostics.size()) + " data rows rejected; first: row " +
                              std::to_string(ds.diagnostics.front().row) + ": " +
                              ds.diagnostics.front().message);
  }
  const auto bins = scale_counts(slice_window(ds, manifest.intersection_ids, t0, t1), manifest.scaling);
  const auto points = intersection_points(manifest, &ds);

  const fs::path out_dir(manifest.output_dir);
  out.net_path = (out_dir / kNetFileName).string();
  out.route_path = (out_dir / kRouteFileName).string();
  out.config_path = (out_dir / kConfigFileName).string();

  std::string net_text;
  if (manifest.network_path) {
    net_text = read_text_file(*manifest.network_path);
  } else if (manifest.auto_fetch_network) {
    auto fetched = run_fetch_map(manifest, http, runner, manifest.output_dir);
    out.diagnostics.insert(out.diagnostics.end(), fetched.diagnostics.begin(), fetched.diagnostics.end());
    net_text = read_text_file(fetched.net_path);
  } else {
    throw Error(ErrorCategory::invalid_input, "manifest: no network source (set network.path or network.auto_fetch)");
  }
  const RoadNetwork net = parse_network(net_text);

  const EdgeFilterPolicy filter{manifest.include_untyped_edges};
  for (std::size_t i = 0; i < manifest.intersection_ids.size(); ++i) {
    const auto& id = manifest.intersection_ids[i];
    auto result = bind_intersection(net, id, points[i].lon, points[i].lat, manifest.match_tolerance_m, filter);
    if (auto* exceeded = std::get_if<ToleranceExceeded>(&result)) {
      const auto& c = exceeded->candidate;
      if (!manifest.allow_distance_m || c.distance > *manifest.allow_distance_m) {
        char dist[32];
        std::snprintf(dist, sizeof(dist), "%.2f", c.distance);
        throw Error(ErrorCategory::tolerance,
                    "intersection '" + id + "': nearest junction '" + c.junction_id + "' is " + dist +
                        " m away, beyond the " + detail::format_number(exceeded->tolerance) +
                        " m tolerance; confirm with --allow-distance " + dist);
      }
      IntersectionBinding binding{id, c.junction_id, c.distance,
                                  map_intersection_edges(net, c.junction_id, filter)};
      out.diagnostics.push_back("intersection '" + id + "' accepted at " +
                                detail::format_number(c.distance) + " m from junction '" + c.junction_id + "'");
      result = std::move(binding);
    }
    auto& binding = std::get<IntersectionBinding>(result);
    for (const auto& skipped : binding.mapping.skipped_edges) {
      out.diagnostics.push_back("intersection '" + id + "': skipped edge '" + skipped.edge_id + "' (" +
                                skipped.reason + ")");
    }
    out.diagnostics.insert(out.diagnostics.end(), binding.mapping.notes.begin(), binding.mapping.notes.end());
    out.bindings.push_back(std::move(binding));
  }

  // intersections compile independently
  std::vector<std::future<CompiledDemand>> jobs;
  for (const auto& binding : out.bindings) {
    std::vector<CountBin> own;
    for (const auto& bin : bins) {
      if (bin.intersection_id == binding.source_id) own.push_back(bin);
    }
    jobs.push_back(std::async(std::launch::async, [&binding, own = std::move(own), &manifest, t0] {
      return compile_flows(binding, own, manifest.vehicle_types, t0);
    }));
  }
  std::vector<FlowSpec> flows;
  for (auto& job : jobs) {
    auto compiled = job.get();
    flows.insert(flows.end(), compiled.flows.begin(), compiled.flows.end());
    out.diagnostics.insert(out.diagnostics.end(), compiled.diagnostics.begin(), compiled.diagnostics.end());
  }
  out.flow_count = flows.size();
  for (const auto& f : flows) out.vehicle_count += f.count;

  ScenarioConfig sc;
  sc.network_path = std::string(kNetFileName);
  sc.route_path = std::string(kRouteFileName);
  sc.begin = 0.0;
  sc.end = static_cast<double>(std::chrono::duration_cast<std::chrono::seconds>(t1 - t0).count());
  sc.step_length = manifest.step_length;
  sc.vehroute_output = manifest.vehroute_output;
  sc.vehroute_path = std::string(kVehrouteFileName);

  if (!manifest.auto_fetch_network) write_text_file(out.net_path, net_text);
  write_text_file(out.route_path, emit_routes_xml(flows, manifest.vehicle_types));
  write_text_file(out.config_path, emit_sumocfg(sc));

  if (manifest.launch_simulator) {
    const auto result = runner.run({manifest.simulator_executable, "-c", out.config_path});
    if (result.exit_code != 0) {
      throw Error(ErrorCategory::tool_failed, manifest.simulator_executable + " exited with code " +
                                                  std::to_string(result.exit_code) + ": " + result.stderr_text);
    }
  }
  return out;
}

ValidationOutcome run_validation(const ValidationRequest& request) {
  if (request.vehroutes_xml.has_value() == request.traci.has_value()) {
    throw Error(ErrorCategory::invalid_input, "validation needs exactly one of a vehroute file or a TraCI endpoint");
  }
  ValidationOutcome out;
  const auto routes = parse_routes_xml(request.routes_xml);
  // any fixed origin works: comparison is by bin index
  const Timestamp origin{};
  auto derived = counts_from_flows(routes.flows, origin);
  out.diagnostics = derived.diagnostics;

  std::vector<std::string> vehicle_ids;
  if (request.vehroutes_xml) {
    auto parsed = parse_vehroutes(*request.vehroutes_xml);
    out.diagnostics.insert(out.diagnostics.end(), parsed.diagnostics.begin(), parsed.diagnostics.end());
    for (auto& record : parsed.records) vehicle_ids.push_back(std::move(record.vehicle_id));
  } else {
    std::set<std::string> edges;
    double span = 0.0;
    for (const auto& f : routes.flows) {
      edges.insert(f.from_edge);
      edges.insert(f.to_edge);
      span = std::max(span, f.end);
    }
    const auto steps = request.steps.value_or(static_cast<std::int64_t>(std::ceil(span)));
    const auto seen = traci_collect(*request.traci, {edges.begin(), edges.end()}, steps);
    for (const auto& [edge, ids] : seen) vehicle_ids.insert(vehicle_ids.end(), ids.begin(), ids.end());
  }

  auto recon = reconstruct_counts(vehicle_ids, derived.bin_count);
  out.diagnostics.insert(out.diagnostics.end(), recon.diagnostics.begin(), recon.diagnostics.end());
  for (const auto& [id, bins] : derived.bins_by_intersection) {
    out.reports.push_back(compare(bins, recon.for_intersection(id)));
  }
  for (const auto& [id, sim] : recon.by_intersection) {
    if (!derived.bins_by_intersection.contains(id)) {
      out.diagnostics.push_back("simulated vehicles for intersection '" + id + "' that has no flows");
    }
  }
  return out;
}

}  // namespace tmcsim
