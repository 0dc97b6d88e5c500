#include "tmcsim/osm.hpp"

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "tmcsim/error.hpp"
#include "xml_sax.hpp"

namespace tmcsim {

BoundingBox compute_bbox(const std::vector<GeoPoint>& points, double buffer_m) {
  if (points.empty()) throw Error(ErrorCategory::invalid_input, "no points for bounding box");
  if (!(buffer_m >= 0.0) || !std::isfinite(buffer_m)) {
    throw Error(ErrorCategory::invalid_input, "buffer must be a non-negative distance");
  }
  BoundingBox box{points.front().lon, points.front().lat, points.front().lon, points.front().lat};
  double lat_sum = 0.0;
  for (const auto& p : points) {
    if (!(p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0)) {
      throw Error(ErrorCategory::invalid_input, "point outside world bounds");
    }
    box.lon_min = std::min(box.lon_min, p.lon);
    box.lon_max = std::max(box.lon_max, p.lon);
    box.lat_min = std::min(box.lat_min, p.lat);
    box.lat_max = std::max(box.lat_max, p.lat);
    lat_sum += p.lat;
  }
  const double mean_lat = lat_sum / static_cast<double>(points.size());
  const double dlat = buffer_m / kMetersPerDegreeLat;
  const double dlon = dlat / std::cos(mean_lat * std::numbers::pi / 180.0);
  box.lon_min = std::max(-180.0, box.lon_min - dlon);
  box.lon_max = std::min(180.0, box.lon_max + dlon);
  box.lat_min = std::max(-90.0, box.lat_min - dlat);
  box.lat_max = std::min(90.0, box.lat_max + dlat);
  if (!(box.lon_min < box.lon_max && box.lat_min < box.lat_max)) {
    throw Error(ErrorCategory::invalid_input, "zero-area box");
  }
  return box;
}

std::string fetch_osm(const BoundingBox& bbox, HttpFetcher& http, const MapApiConfig& config) {
  if (!(bbox.lon_min < bbox.lon_max && bbox.lat_min < bbox.lat_max)) {
    throw Error(ErrorCategory::invalid_input, "invalid bounding box");
  }
  if (bbox.area_deg2() > config.max_area_deg2) {
    std::ostringstream msg;
    msg << "bounding box area " << bbox.area_deg2() << " deg^2 exceeds the map API limit of "
        << config.max_area_deg2 << " deg^2";
    throw Error(ErrorCategory::invalid_input, msg.str());
  }
  std::string url = config.url_template;
  auto substitute = [&url](const std::string& placeholder, double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.7f", value);
    for (auto pos = url.find(placeholder); pos != std::string::npos; pos = url.find(placeholder)) {
      url.replace(pos, placeholder.size(), buf);
    }
  };
  substitute("{lon_min}", bbox.lon_min);
  substitute("{lat_min}", bbox.lat_min);
  substitute("{lon_max}", bbox.lon_max);
  substitute("{lat_max}", bbox.lat_max);

  auto response = http.get(url);
  if (response.status == 429) {
    throw Error(ErrorCategory::rate_limit, "map API rate limit hit (HTTP 429); retry later");
  }
  if (response.status < 200 || response.status >= 300) {
    throw Error(ErrorCategory::http_status,
                "map API answered HTTP " + std::to_string(response.status));
  }
  return std::move(response.body);
}

namespace {

std::optional<std::string> resolve_executable(const std::string& name) {
  namespace fs = std::filesystem;
  if (name.find('/') != std::string::npos) {
    if (::access(name.c_str(), X_OK) == 0) return name;
    return std::nullopt;
  }
  const char* path = std::getenv("PATH");
  std::istringstream dirs(path ? path : "/usr/bin:/bin");
  std::string dir;
  while (std::getline(dirs, dir, ':')) {
    if (dir.empty()) continue;
    const fs::path candidate = fs::path(dir) / name;
    if (::access(candidate.c_str(), X_OK) == 0 && !fs::is_directory(candidate)) {
      return candidate.string();
    }
  }
  return std::nullopt;
}

class Pipe {
 public:
  Pipe() {
    if (::pipe(fds_.data()) != 0) {
      throw Error(ErrorCategory::io, std::string("pipe: ") + std::strerror(errno));
    }
  }
  ~Pipe() {
    close_read();
    close_write();
  }
  Pipe(const Pipe&) = delete;
  Pipe& operator=(const Pipe&) = delete;

  int read_end() const { return fds_[0]; }
  int write_end() const { return fds_[1]; }
  void close_read() { close_fd(0); }
  void close_write() { close_fd(1); }

 private:
  void close_fd(int i) {
    if (fds_[i] >= 0) ::close(fds_[i]);
    fds_[i] = -1;
  }
  std::array<int, 2> fds_{-1, -1};
};

}  // namespace

ProcessResult PosixProcessRunner::run(const std::vector<std::string>& argv) {
  if (argv.empty()) throw Error(ErrorCategory::invalid_input, "empty command line");
  const auto exe = resolve_executable(argv[0]);
  if (!exe) throw Error(ErrorCategory::tool_missing, "executable '" + argv[0] + "' not found");

  Pipe out, err;
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCategory::io, std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    ::dup2(out.write_end(), STDOUT_FILENO);
    ::dup2(err.write_end(), STDERR_FILENO);
    ::close(out.read_end());
    ::close(err.read_end());
    ::execv(exe->c_str(), args.data());
    _exit(127);
  }
  out.close_write();
  err.close_write();

  ProcessResult result;
  std::array<pollfd, 2> fds{{{out.read_end(), POLLIN, 0}, {err.read_end(), POLLIN, 0}}};
  std::array<std::string*, 2> sinks{&result.stdout_text, &result.stderr_text};
  int open_streams = 2;
  char buf[4096];
  while (open_streams > 0) {
    if (::poll(fds.data(), fds.size(), -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (std::size_t i = 0; i < fds.size(); ++i) {
      if (fds[i].fd < 0 || fds[i].revents == 0) continue;
      const ssize_t n = ::read(fds[i].fd, buf, sizeof(buf));
      if (n > 0) {
        sinks[i]->append(buf, static_cast<std::size_t>(n));
      } else {
        fds[i].fd = -1;
        --open_streams;
      }
    }
  }
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return result;
}

ConversionResult convert_network(const std::string& osm_path, const std::string& net_path,
                                 ProcessRunner& runner, const ConverterConfig& config) {
  if (!std::filesystem::exists(osm_path)) {
    throw Error(ErrorCategory::not_found, "map extract '" + osm_path + "' does not exist");
  }
  std::vector<std::string> argv = {config.executable, config.input_flag, osm_path,
                                   config.output_flag, net_path};
  argv.insert(argv.end(), config.extra_args.begin(), config.extra_args.end());
  const auto result = runner.run(argv);

  ConversionResult out;
  out.net_path = net_path;
  std::istringstream lines(result.stderr_text);
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty()) out.diagnostics.push_back(line);
  }
  if (result.exit_code != 0) {
    throw Error(ErrorCategory::tool_failed, config.executable + " exited with code " +
                                                std::to_string(result.exit_code) + ": " +
                                                result.stderr_text);
  }
  if (!std::filesystem::exists(net_path)) {
    throw Error(ErrorCategory::tool_failed,
                config.executable + " reported success but wrote no '" + net_path + "'");
  }
  return out;
}

}  // namespace tmcsim
