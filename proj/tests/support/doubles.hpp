#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tmcsim/http.hpp"
#include "tmcsim/osm.hpp"

namespace tmcsim::testkit {

// Serves canned responses keyed by URL prefix and records every request.
class FakeHttpFetcher final : public HttpFetcher {
 public:
  std::function<HttpResponse(const std::string&)> handler;
  std::vector<std::string> requests;

  HttpResponse get(const std::string& url) override {
    requests.push_back(url);
    if (!handler) return {404, "", "text/plain"};
    return handler(url);
  }
};

// Records invocations and optionally writes the output file a converter would.
class FakeProcessRunner final : public ProcessRunner {
 public:
  std::vector<std::vector<std::string>> calls;
  ProcessResult result;
  // Written to the argument following this flag, when set.
  std::string output_flag;
  std::string output_content;

  ProcessResult run(const std::vector<std::string>& argv) override {
    calls.push_back(argv);
    if (!output_flag.empty()) {
      for (std::size_t i = 0; i + 1 < argv.size(); ++i) {
        if (argv[i] == output_flag) std::ofstream(argv[i + 1]) << output_content;
      }
    }
    return result;
  }
};

inline std::string fixture_path(const std::string& name) {
  return (std::filesystem::path(TMCSIM_FIXTURE_DIR) / name).string();
}

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream(path, std::ios::binary) << content;
}

inline std::string toronto_config() {
  std::ifstream in(TMCSIM_SOURCE_CONFIG, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& child = "") const { return (path_ / child).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace tmcsim::testkit
