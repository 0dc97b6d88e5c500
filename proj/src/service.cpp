#include "tmcsim/service.hpp"

#include <filesystem>
#include <mutex>
#include <random>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "tmcsim/error.hpp"

namespace tmcsim {

namespace fs = std::filesystem;
using nlohmann::json;

int http_status_for(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::invalid_input:
    case ErrorCategory::parse:
      return 400;
    case ErrorCategory::not_found:
      return 404;
    case ErrorCategory::conflict:
      return 409;
    case ErrorCategory::no_data:
    case ErrorCategory::misaligned:
    case ErrorCategory::tolerance:
      return 422;
    case ErrorCategory::transport:
    case ErrorCategory::http_status:
    case ErrorCategory::rate_limit:
    case ErrorCategory::schema_drift:
    case ErrorCategory::protocol:
    case ErrorCategory::command_failed:
    case ErrorCategory::tool_missing:
    case ErrorCategory::tool_failed:
      return 502;
    case ErrorCategory::io:
      return 500;
  }
  return 500;
}

namespace {

constexpr const char* kJson = "application/json";

json error_body(ErrorCategory category, const std::string& message) {
  return {{"error", {{"category", to_string(category)}, {"message", message}}}};
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2), kJson);
}

void reply_error(httplib::Response& res, const Error& e) {
  reply_json(res, http_status_for(e.category()), error_body(e.category(), e.what()));
}

struct Scenario {
  std::string id;
  std::string manifest_json;
  std::string status = "draft";  // draft | built | failed
  bool building = false;
  json error;                      // null unless failed
  std::vector<std::string> diagnostics;
  std::size_t flow_count = 0;
  std::int64_t vehicle_count = 0;
  std::map<std::string, std::string> artifacts;  // kind -> file name
  std::mutex mutex;

  json to_json() const {
    json out = {{"id", id},
                {"status", status},
                {"building", building},
                {"manifest", json::parse(manifest_json)},
                {"diagnostics", diagnostics},
                {"flow_count", flow_count},
                {"vehicle_count", vehicle_count},
                {"artifacts", json::object()}};
    for (const auto& [kind, name] : artifacts) out["artifacts"][kind] = "/scenarios/" + id + "/artifacts/" + kind;
    out["error"] = error;
    return out;
  }
};

std::string new_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(rng()));
  return buf;
}

std::vector<std::string> split_ids(const std::string& text) {
  std::vector<std::string> ids;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!piece.empty()) ids.push_back(piece);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return ids;
}

}  // namespace

struct ScenarioService::Impl {
  ServiceOptions options;
  httplib::Server server;
  std::mutex scenarios_mutex;
  std::map<std::string, std::shared_ptr<Scenario>> scenarios;
  std::mutex threads_mutex;
  std::vector<std::thread> builds;

  explicit Impl(ServiceOptions opts) : options(std::move(opts)) {
    fs::create_directories(options.data_dir);
    load_existing();
    routes();
  }

  ~Impl() {
    std::lock_guard lock(threads_mutex);
    for (auto& t : builds) {
      if (t.joinable()) t.join();
    }
  }

  fs::path dir_of(const std::string& id) const { return fs::path(options.data_dir) / id; }

  void persist(const Scenario& s) const {
    json record = s.to_json();
    record["artifact_files"] = s.artifacts;
    write_text_file((dir_of(s.id) / "record.json").string(), record.dump(2));
  }

  void load_existing() {
    for (const auto& entry : fs::directory_iterator(options.data_dir)) {
      const auto path = entry.path() / "record.json";
      if (!fs::exists(path)) continue;
      try {
        const auto record = json::parse(read_text_file(path.string()));
        auto s = std::make_shared<Scenario>();
        s->id = record.at("id").get<std::string>();
        s->manifest_json = record.at("manifest").dump();
        s->status = record.at("status").get<std::string>();
        s->error = record.value("error", json());
        s->diagnostics = record.value("diagnostics", std::vector<std::string>{});
        s->flow_count = record.value("flow_count", std::size_t{0});
        s->vehicle_count = record.value("vehicle_count", std::int64_t{0});
        s->artifacts = record.value("artifact_files", std::map<std::string, std::string>{});
        if (record.value("building", false)) {
          // the process stopped mid-build
          s->status = "failed";
          s->error = error_body(ErrorCategory::io, "build interrupted by service restart")["error"];
          s->diagnostics.push_back("build interrupted by service restart");
        }
        scenarios[s->id] = s;
      } catch (const std::exception&) {
        // unreadable records are left on disk and ignored
      }
    }
  }

  std::shared_ptr<Scenario> find(const std::string& id) {
    std::lock_guard lock(scenarios_mutex);
    auto it = scenarios.find(id);
    if (it == scenarios.end()) throw Error(ErrorCategory::not_found, "unknown scenario '" + id + "'");
    return it->second;
  }

  template <typename Handler>
  httplib::Server::Handler guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const Error& e) {
        reply_error(res, e);
      } catch (const std::exception& e) {
        reply_json(res, 500, error_body(ErrorCategory::io, e.what()));
      }
    };
  }

  void routes() {
    server.Post("/scenarios", guarded([this](const auto& req, auto& res) { create(req, res); }));
    server.Get(R"(/scenarios/([^/]+))", guarded([this](const auto& req, auto& res) {
                 auto s = find(req.matches[1]);
                 std::lock_guard lock(s->mutex);
                 reply_json(res, 200, s->to_json());
               }));
    server.Post(R"(/scenarios/([^/]+)/build)",
                guarded([this](const auto& req, auto& res) { build(req, res); }));
    server.Get(R"(/scenarios/([^/]+)/artifacts/([^/]+))",
               guarded([this](const auto& req, auto& res) { artifact(req, res); }));
    server.Post(R"(/scenarios/([^/]+)/validate)",
                guarded([this](const auto& req, auto& res) { validate(req, res); }));
    server.Get("/intersections/timerange",
               guarded([this](const auto& req, auto& res) { timerange(req, res); }));
    if (options.static_dir) server.set_mount_point("/", *options.static_dir);
  }

  void create(const httplib::Request& req, httplib::Response& res) {
    auto manifest = PipelineManifest::from_json(req.body);
    auto s = std::make_shared<Scenario>();
    s->id = new_id();
    manifest.output_dir = dir_of(s->id).string();
    s->manifest_json = manifest.to_json();
    fs::create_directories(dir_of(s->id));
    persist(*s);
    {
      std::lock_guard lock(scenarios_mutex);
      scenarios[s->id] = s;
    }
    res.set_header("Location", "/scenarios/" + s->id);
    reply_json(res, 201, {{"id", s->id}, {"status", s->status}});
  }

  void build(const httplib::Request& req, httplib::Response& res) {
    auto s = find(req.matches[1]);
    {
      std::lock_guard lock(s->mutex);
      if (s->building) {
        throw Error(ErrorCategory::conflict, "scenario '" + s->id + "' is already building");
      }
      // status keeps the last completed transition until this build ends
      s->building = true;
      persist(*s);
    }
    std::lock_guard lock(threads_mutex);
    builds.emplace_back([this, s] { run_build_job(s); });
    reply_json(res, 202, {{"id", s->id}, {"status", "building"}});
  }

  void run_build_job(const std::shared_ptr<Scenario>& s) {
    std::string manifest_json;
    {
      std::lock_guard lock(s->mutex);
      manifest_json = s->manifest_json;
    }
    json error;
    BuildArtifacts artifacts;
    try {
      if (!options.build) throw Error(ErrorCategory::invalid_input, "service has no build backend");
      artifacts = options.build(PipelineManifest::from_json(manifest_json));
    } catch (const Error& e) {
      error = error_body(e.category(), e.what())["error"];
    } catch (const std::exception& e) {
      error = error_body(ErrorCategory::io, e.what())["error"];
    }
    std::lock_guard lock(s->mutex);
    s->building = false;
    s->error = error;
    if (error.is_null()) {
      s->status = "built";
      s->diagnostics = artifacts.diagnostics;
      s->flow_count = artifacts.flow_count;
      s->vehicle_count = artifacts.vehicle_count;
      s->artifacts = {{"net", fs::path(artifacts.net_path).filename().string()},
                      {"routes", fs::path(artifacts.route_path).filename().string()},
                      {"config", fs::path(artifacts.config_path).filename().string()}};
    } else {
      s->status = "failed";
      s->flow_count = 0;
      s->vehicle_count = 0;
      s->artifacts.clear();
      s->diagnostics = {error["category"].get<std::string>() + ": " + error["message"].get<std::string>()};
    }
    persist(*s);
  }

  std::string artifact_path(Scenario& s, const std::string& kind) {
    if (s.status != "built") {
      throw Error(ErrorCategory::not_found, "scenario '" + s.id + "' has no artifacts (status " + s.status + ")");
    }
    auto it = s.artifacts.find(kind);
    if (it == s.artifacts.end()) throw Error(ErrorCategory::not_found, "unknown artifact '" + kind + "'");
    return (dir_of(s.id) / it->second).string();
  }

  void artifact(const httplib::Request& req, httplib::Response& res) {
    auto s = find(req.matches[1]);
    std::string path;
    {
      std::lock_guard lock(s->mutex);
      path = artifact_path(*s, req.matches[2]);
    }
    res.status = 200;
    res.set_content(read_text_file(path), "application/xml");
  }

  void validate(const httplib::Request& req, httplib::Response& res) {
    auto s = find(req.matches[1]);
    std::string routes_path;
    {
      std::lock_guard lock(s->mutex);
      if (s->building) throw Error(ErrorCategory::conflict, "scenario '" + s->id + "' is building");
      routes_path = artifact_path(*s, "routes");
    }
    ValidationRequest request;
    request.routes_xml = read_text_file(routes_path);
    const auto first = req.body.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) throw Error(ErrorCategory::invalid_input, "empty validation body");
    if (req.body[first] == '<') {
      request.vehroutes_xml = req.body;
    } else {
      json body;
      try {
        body = json::parse(req.body);
        const auto& t = body.at("traci");
        TraciEndpoint endpoint;
        endpoint.host = t.value("host", endpoint.host);
        endpoint.port = t.value("port", endpoint.port);
        request.traci = endpoint;
        if (body.contains("steps")) request.steps = body["steps"].get<std::int64_t>();
      } catch (const json::exception& e) {
        throw Error(ErrorCategory::invalid_input,
                    std::string("validation body must be vehroute XML or {\"traci\": {...}}: ") + e.what());
      }
    }
    const auto outcome = options.validate(request);
    if (req.get_param_value("format") == "csv") {
      res.status = 200;
      res.set_content(report_to_csv(outcome.reports), "text/csv");
      return;
    }
    reply_json(res, 200,
               {{"reports", json::parse(report_to_json(outcome.reports))}, {"diagnostics", outcome.diagnostics}});
  }

  void timerange(const httplib::Request& req, httplib::Response& res) {
    const auto ids = split_ids(req.get_param_value("ids"));
    if (ids.empty()) throw Error(ErrorCategory::invalid_input, "query parameter 'ids' is required");
    if (!options.timerange) throw Error(ErrorCategory::invalid_input, "service has no count data source");
    const auto ranges = options.timerange(ids);
    json out = json::object();
    for (const auto& id : ids) {
      json spans = json::array();
      if (auto it = ranges.find(id); it != ranges.end()) {
        for (const auto& span : it->second) {
          spans.push_back({{"start", format_timestamp(span.start)}, {"end", format_timestamp(span.end)}});
        }
      }
      out[id] = spans;
    }
    reply_json(res, 200, {{"ranges", out}});
  }
};

ScenarioService::ScenarioService(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

ScenarioService::~ScenarioService() { stop(); }

int ScenarioService::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error(ErrorCategory::io, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ScenarioService::listen() { impl_->server.listen_after_bind(); }

void ScenarioService::stop() {
  if (impl_) impl_->server.stop();
}

void ScenarioService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace tmcsim
