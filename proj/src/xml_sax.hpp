#pragma once

// Thin RAII wrapper over expat plus the escaping/number helpers the writers
// share. Internal to the library.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tmcsim::detail {

class XmlAttributes {
 public:
  explicit XmlAttributes(const char** raw);

  std::optional<std::string_view> get(std::string_view name) const;
  std::string_view get_or(std::string_view name, std::string_view fallback) const;

 private:
  std::vector<std::pair<std::string_view, std::string_view>> items_;
};

struct XmlCallbacks {
  std::function<void(std::string_view name, const XmlAttributes& attrs)> on_start;
  std::function<void(std::string_view name)> on_end;
};

/// Streams `text` through expat. Throws Error{parse} with line and column
/// for malformed input; exceptions thrown by callbacks propagate unchanged.
void parse_xml(std::string_view text, const XmlCallbacks& callbacks);

std::string xml_escape(std::string_view text);

/// Shortest decimal representation that parses back to the same double.
std::string format_number(double value);

/// Strict full-string double parse; nullopt on trailing junk or empty input.
std::optional<double> parse_double(std::string_view text);

}  // namespace tmcsim::detail
