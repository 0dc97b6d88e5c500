#include <csignal>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "tmcsim/error.hpp"
#include "tmcsim/service.hpp"

namespace {

tmcsim::ScenarioService* g_service = nullptr;

void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario service"};
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir = "scenarios";
  std::string static_dir;
  std::string counts;
  std::string source_config;
  bool auto_fetch = false;
  app.add_option("--host", host, "Listen address");
  app.add_option("--port", port, "Listen port (0 picks one)");
  app.add_option("--data-dir", data_dir, "Scenario store directory");
  app.add_option("--static", static_dir, "Front-end assets to serve at /")->check(CLI::ExistingDirectory);
  app.add_option("--counts", counts, "Count CSV answering time-range queries")->check(CLI::ExistingFile);
  app.add_option("--source-config", source_config, "Schema mapping and API settings");
  app.add_flag("--auto-fetch", auto_fetch, "Answer time-range queries from the open data API");
  CLI11_PARSE(app, argc, argv);

  // one fetcher and runner shared by all builds; each build opts in via its manifest
  auto http = std::make_shared<tmcsim::NetworkHttpFetcher>();
  auto runner = std::make_shared<tmcsim::PosixProcessRunner>();

  tmcsim::ServiceOptions options;
  options.data_dir = data_dir;
  if (!static_dir.empty()) options.static_dir = static_dir;
  options.build = [http, runner](const tmcsim::PipelineManifest& m) {
    tmcsim::DisabledHttpFetcher offline;
    tmcsim::HttpFetcher& fetcher = (m.auto_fetch_data || m.auto_fetch_network)
                                       ? static_cast<tmcsim::HttpFetcher&>(*http)
                                       : offline;
    return tmcsim::run_build(m, fetcher, *runner);
  };
  if (!counts.empty() || auto_fetch) {
    options.timerange = [=](const std::vector<std::string>& ids) {
      tmcsim::PipelineManifest m;
      m.intersection_ids = ids;
      if (!counts.empty()) m.data_path = counts;
      m.auto_fetch_data = counts.empty();
      if (!source_config.empty()) m.source_config_path = source_config;
      return tmcsim::run_timerange(m, *http);
    };
  }

  try {
    tmcsim::ScenarioService service(std::move(options));
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    const int bound = service.bind(host, port);
    if (bound <= 0) {
      std::cerr << "error: cannot bind " << host << ":" << port << "\n";
      return 10;
    }
    std::cout << "listening on http://" << host << ":" << bound << std::endl;
    service.listen();
    g_service = nullptr;
  } catch (const tmcsim::Error& e) {
    std::cerr << "error [" << tmcsim::to_string(e.category()) << "]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
