#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tmcsim {

namespace traci {

// Command and variable identifiers from the TraCI protocol.
inline constexpr std::uint8_t kCmdGetVersion = 0x00;
inline constexpr std::uint8_t kCmdSimulationStep = 0x02;
inline constexpr std::uint8_t kCmdClose = 0x7F;
inline constexpr std::uint8_t kCmdGetEdgeVariable = 0xAA;
inline constexpr std::uint8_t kResponseGetEdgeVariable = 0xBA;
inline constexpr std::uint8_t kVarLastStepVehicleIds = 0x12;
inline constexpr std::uint8_t kTypeStringList = 0x0E;
inline constexpr std::uint8_t kResultOk = 0x00;
inline constexpr std::uint8_t kResultNotImplemented = 0x01;
inline constexpr std::uint8_t kResultError = 0xFF;

/// Big-endian (network order) encoder for TraCI payloads.
class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void i32(std::int32_t v);
  void f64(double v);
  void str(std::string_view s);
  void str_list(const std::vector<std::string>& items);
  void raw(std::string_view bytes) { bytes_.append(bytes); }

  const std::string& bytes() const { return bytes_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  std::string bytes_;
};

/// Bounds-checked decoder; overruns throw Error{protocol}.
class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::int32_t i32();
  double f64();
  std::string str();
  std::vector<std::string> str_list();
  std::string_view take(std::size_t n);

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

/// Appends one command with the short or extended length header.
void append_command(Writer& message, std::uint8_t command_id, std::string_view payload);

/// Wraps commands into a message with the 4-byte total length prefix.
std::string frame_message(const Writer& commands);

struct Command {
  std::uint8_t id = 0;
  std::string payload;
};

/// Reads the next command from `reader`; Error{protocol} on bad lengths.
Command read_command(Reader& reader);

}  // namespace traci

struct TraciEndpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 8813;
};

struct TraciVersion {
  std::int32_t api_version = 0;
  std::string identifier;
};

/// Minimal TraCI client: version handshake, simulation step, per-edge
/// last-step vehicle ids, close. One session is strictly sequential.
/// Errors: Error{transport} (connect/socket), Error{protocol} (framing or
/// premature close), Error{command_failed} (server-reported status).
class TraciClient {
 public:
  static TraciClient connect(const TraciEndpoint& endpoint,
                             std::chrono::milliseconds timeout = std::chrono::seconds{30});

  TraciClient(TraciClient&& other) noexcept;
  TraciClient& operator=(TraciClient&& other) noexcept;
  TraciClient(const TraciClient&) = delete;
  TraciClient& operator=(const TraciClient&) = delete;
  ~TraciClient();

  TraciVersion get_version();
  /// target_time 0 advances exactly one step.
  void simulation_step(double target_time = 0.0);
  std::vector<std::string> edge_last_step_vehicle_ids(const std::string& edge_id);
  /// Sends the close command and shuts the socket.
  void close();

 private:
  explicit TraciClient(int fd) : fd_(fd) {}
  // Sends one command and returns the reader positioned after the status.
  std::string exchange(std::uint8_t command_id, std::string_view payload);
  void send_all(std::string_view bytes);
  std::string recv_exact(std::size_t n);
  void reset();

  int fd_ = -1;
};

/// Runs `steps` simulation steps and, after each, reads the vehicles on every
/// monitored edge. Returns the deduplicated union per edge. Any error aborts
/// the session and discards partial results.
std::map<std::string, std::set<std::string>> traci_collect(const TraciEndpoint& endpoint,
                                                           const std::vector<std::string>& edge_ids,
                                                           std::int64_t steps);

}  // namespace tmcsim
