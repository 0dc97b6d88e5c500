#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace tmcsim {

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string content_type;
};

/// Outbound HTTP capability. Modules never open connections themselves; they
/// receive one of these so tests can substitute canned responses.
class HttpFetcher {
 public:
  virtual ~HttpFetcher() = default;
  /// Throws Error{transport} when no response was obtained. Non-2xx statuses
  /// are returned, not thrown.
  virtual HttpResponse get(const std::string& url) = 0;
};

/// Real fetcher over cpp-httplib (http and https).
class NetworkHttpFetcher final : public HttpFetcher {
 public:
  explicit NetworkHttpFetcher(std::chrono::seconds timeout = std::chrono::seconds{60});
  HttpResponse get(const std::string& url) override;

 private:
  std::chrono::seconds timeout_;
};

/// Refuses every request; installed when auto-fetch is not enabled.
class DisabledHttpFetcher final : public HttpFetcher {
 public:
  HttpResponse get(const std::string& url) override;
};

std::string url_encode(std::string_view text);

}  // namespace tmcsim
