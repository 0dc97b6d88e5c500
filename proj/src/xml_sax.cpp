#include "xml_sax.hpp"

#include <expat.h>

#include <charconv>
#include <cmath>
#include <exception>
#include <memory>
#include <sstream>

#include "tmcsim/error.hpp"

namespace tmcsim::detail {

XmlAttributes::XmlAttributes(const char** raw) {
  for (int i = 0; raw != nullptr && raw[i] != nullptr; i += 2) {
    items_.emplace_back(raw[i], raw[i + 1]);
  }
}

std::optional<std::string_view> XmlAttributes::get(std::string_view name) const {
  for (const auto& [key, value] : items_) {
    if (key == name) return value;
  }
  return std::nullopt;
}

std::string_view XmlAttributes::get_or(std::string_view name, std::string_view fallback) const {
  auto value = get(name);
  return value ? *value : fallback;
}

namespace {

struct ParserDeleter {
  void operator()(XML_ParserStruct* p) const { XML_ParserFree(p); }
};

struct SaxState {
  const XmlCallbacks* callbacks = nullptr;
  XML_Parser parser = nullptr;
  std::exception_ptr failure;
};

void on_start(void* user, const XML_Char* name, const XML_Char** attrs) {
  auto* state = static_cast<SaxState*>(user);
  if (state->failure || !state->callbacks->on_start) return;
  try {
    state->callbacks->on_start(name, XmlAttributes(attrs));
  } catch (...) {
    state->failure = std::current_exception();
    XML_StopParser(state->parser, XML_FALSE);
  }
}

void on_end(void* user, const XML_Char* name) {
  auto* state = static_cast<SaxState*>(user);
  if (state->failure || !state->callbacks->on_end) return;
  try {
    state->callbacks->on_end(name);
  } catch (...) {
    state->failure = std::current_exception();
    XML_StopParser(state->parser, XML_FALSE);
  }
}

}  // namespace

void parse_xml(std::string_view text, const XmlCallbacks& callbacks) {
  std::unique_ptr<XML_ParserStruct, ParserDeleter> parser(XML_ParserCreate("UTF-8"));
  if (!parser) throw Error(ErrorCategory::io, "cannot allocate XML parser");

  SaxState state;
  state.callbacks = &callbacks;
  state.parser = parser.get();
  XML_SetUserData(parser.get(), &state);
  XML_SetElementHandler(parser.get(), on_start, on_end);

  // expat takes int lengths; feed in chunks so huge networks still work
  constexpr std::size_t kChunk = 1 << 24;
  std::size_t offset = 0;
  XML_Status status = XML_STATUS_OK;
  do {
    const std::size_t len = std::min(kChunk, text.size() - offset);
    const bool last = offset + len == text.size();
    status = XML_Parse(parser.get(), text.data() + offset, static_cast<int>(len), last);
    offset += len;
  } while (status == XML_STATUS_OK && offset < text.size());

  if (state.failure) std::rethrow_exception(state.failure);
  if (status != XML_STATUS_OK) {
    std::ostringstream msg;
    msg << "malformed XML at line " << XML_GetCurrentLineNumber(parser.get()) << ", column "
        << XML_GetCurrentColumnNumber(parser.get()) << ": "
        << XML_ErrorString(XML_GetErrorCode(parser.get()));
    throw Error(ErrorCategory::parse, msg.str());
  }
}

std::string xml_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string format_number(double value) {
  if (value == 0.0) return "0";  // also folds -0
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return std::to_string(value);
  return std::string(buf, end);
}

std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

}  // namespace tmcsim::detail
