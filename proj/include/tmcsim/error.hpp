#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tmcsim {

// Every failure the library reports carries one of these categories. The CLI
// maps them to exit codes and the service maps them to HTTP statuses.
enum class ErrorCategory {
  invalid_input,  // caller-supplied value violates a precondition
  parse,          // malformed document (XML, CSV, JSON)
  not_found,      // unknown id or missing file
  no_data,        // requested window or ids have no counts
  misaligned,     // window not on bin boundaries
  tolerance,      // nearest junction farther than the accepted distance
  transport,      // connection / DNS / socket failure
  http_status,    // upstream answered with a non-success status
  rate_limit,     // upstream answered 429
  schema_drift,   // upstream payload lacks an expected column
  protocol,       // TraCI framing violation or premature close
  command_failed, // TraCI server reported an error for a command
  tool_missing,   // external executable not found
  tool_failed,    // external executable exited nonzero
  io,             // local filesystem failure
  conflict,       // operation already in progress
};

std::string_view to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

}  // namespace tmcsim
