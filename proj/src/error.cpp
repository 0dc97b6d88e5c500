#include "tmcsim/error.hpp"

namespace tmcsim {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::invalid_input: return "invalid input";
    case ErrorCategory::parse: return "parse error";
    case ErrorCategory::not_found: return "not found";
    case ErrorCategory::no_data: return "no data";
    case ErrorCategory::misaligned: return "misaligned window";
    case ErrorCategory::tolerance: return "match tolerance";
    case ErrorCategory::transport: return "transport error";
    case ErrorCategory::http_status: return "http status";
    case ErrorCategory::rate_limit: return "rate limited";
    case ErrorCategory::schema_drift: return "schema drift";
    case ErrorCategory::protocol: return "protocol error";
    case ErrorCategory::command_failed: return "command failed";
    case ErrorCategory::tool_missing: return "tool missing";
    case ErrorCategory::tool_failed: return "tool failed";
    case ErrorCategory::io: return "io error";
    case ErrorCategory::conflict: return "conflict";
  }
  return "unknown";
}

}  // namespace tmcsim
