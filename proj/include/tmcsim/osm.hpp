#pragma once

#include <string>
#include <vector>

#include "tmcsim/http.hpp"
#include "tmcsim/tmc.hpp"

namespace tmcsim {

struct BoundingBox {
  double lon_min = 0.0;
  double lat_min = 0.0;
  double lon_max = 0.0;
  double lat_max = 0.0;

  double area_deg2() const { return (lon_max - lon_min) * (lat_max - lat_min); }
  bool contains(const GeoPoint& p) const {
    return p.lon >= lon_min && p.lon <= lon_max && p.lat >= lat_min && p.lat <= lat_max;
  }
};

inline constexpr double kMetersPerDegreeLat = 111320.0;
inline constexpr double kDefaultMapBuffer = 5000.0;

/// Axis-aligned hull of `points` grown by `buffer_m` on every side
/// (spherical meters-to-degrees; longitude scaled by cos of the mean
/// latitude). Throws Error{invalid_input} for no points, a negative buffer or
/// a zero-area result.
BoundingBox compute_bbox(const std::vector<GeoPoint>& points, double buffer_m = kDefaultMapBuffer);

struct MapApiConfig {
  // {lon_min} {lat_min} {lon_max} {lat_max} are substituted.
  std::string url_template =
      "https://api.openstreetmap.org/api/0.6/map?bbox={lon_min},{lat_min},{lon_max},{lat_max}";
  double max_area_deg2 = 0.25;
};

/// Downloads the map extract for `bbox`, returning the body unmodified.
/// Over-limit boxes fail before any request; 429 maps to Error{rate_limit},
/// other non-2xx statuses to Error{http_status}.
std::string fetch_osm(const BoundingBox& bbox, HttpFetcher& http, const MapApiConfig& config = {});

struct ProcessResult {
  int exit_code = 0;
  std::string stdout_text;
  std::string stderr_text;
};

/// External-process capability. Implementations throw Error{tool_missing}
/// when argv[0] cannot be executed.
class ProcessRunner {
 public:
  virtual ~ProcessRunner() = default;
  virtual ProcessResult run(const std::vector<std::string>& argv) = 0;
};

/// fork/exec runner that resolves argv[0] through PATH and captures both
/// output streams.
class PosixProcessRunner final : public ProcessRunner {
 public:
  ProcessResult run(const std::vector<std::string>& argv) override;
};

struct ConverterConfig {
  std::string executable = "netconvert";
  std::string input_flag = "--osm-files";
  std::string output_flag = "--output-file";
  std::vector<std::string> extra_args = {"--geometry.remove", "--junctions.join",
                                         "--tls.guess-signals", "--output.street-names"};
};

struct ConversionResult {
  std::string net_path;
  std::vector<std::string> diagnostics;  // converter stderr, one entry per line
};

/// Runs the network converter on `osm_path`, writing `net_path`.
/// Missing input is an Error{not_found} raised before spawning; a nonzero exit
/// is Error{tool_failed} carrying stderr.
ConversionResult convert_network(const std::string& osm_path, const std::string& net_path,
                                 ProcessRunner& runner, const ConverterConfig& config = {});

}  // namespace tmcsim
