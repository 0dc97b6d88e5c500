#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tmcsim/error.hpp"
#include "tmcsim/pipeline.hpp"

namespace tmcsim {

using BuildFunction = std::function<BuildArtifacts(const PipelineManifest&)>;
using TimerangeFunction =
    std::function<std::map<std::string, std::vector<TimeSpan>>(const std::vector<std::string>&)>;
using ValidateFunction = std::function<ValidationOutcome(const ValidationRequest&)>;

struct ServiceOptions {
  // Scenario records and artifacts live under <data_dir>/<id>/.
  std::string data_dir = "scenarios";
  // Served at / when set (the browser front end).
  std::optional<std::string> static_dir;
  BuildFunction build;
  TimerangeFunction timerange;
  ValidateFunction validate = run_validation;
};

/// HTTP front of the pipeline. Endpoints are documented in docs/api.md.
/// Builds run on background threads; the destructor waits for them.
class ScenarioService {
 public:
  explicit ScenarioService(ServiceOptions options);
  ~ScenarioService();
  ScenarioService(const ScenarioService&) = delete;
  ScenarioService& operator=(const ScenarioService&) = delete;

  /// Binds `host`; port 0 picks a free one. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call after bind().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP status for a failure category.
int http_status_for(ErrorCategory category);

}  // namespace tmcsim
