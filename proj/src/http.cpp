#include "tmcsim/http.hpp"

#include <cctype>

#include "httplib.h"
#include "tmcsim/error.hpp"

namespace tmcsim {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCategory::invalid_input, "not an absolute URL: '" + url + "'");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

NetworkHttpFetcher::NetworkHttpFetcher(std::chrono::seconds timeout) : timeout_(timeout) {}

HttpResponse NetworkHttpFetcher::get(const std::string& url) {
  const auto parts = split_url(url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_follow_location(true);
  client.set_default_headers({{"User-Agent", "tmcsim/1.0"}});
  auto result = client.Get(parts.path);
  if (!result) {
    throw Error(ErrorCategory::transport,
                "GET " + url + " failed: " + httplib::to_string(result.error()));
  }
  return {result->status, result->body, result->get_header_value("Content-Type")};
}

HttpResponse DisabledHttpFetcher::get(const std::string& url) {
  throw Error(ErrorCategory::invalid_input,
              "network access is disabled (enable auto-fetch to allow GET " + url + ")");
}

std::string url_encode(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

}  // namespace tmcsim
