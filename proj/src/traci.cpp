#include "tmcsim/traci.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/time.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>

#include "tmcsim/error.hpp"

namespace tmcsim {

namespace traci {

namespace {

[[noreturn]] void protocol_error(const std::string& what) {
  throw Error(ErrorCategory::protocol, "TraCI protocol violation: " + what);
}

}  // namespace

void Writer::i32(std::int32_t v) {
  const auto u = static_cast<std::uint32_t>(v);
  for (int shift = 24; shift >= 0; shift -= 8) u8(static_cast<std::uint8_t>(u >> shift));
}

void Writer::f64(double v) {
  const auto u = std::bit_cast<std::uint64_t>(v);
  for (int shift = 56; shift >= 0; shift -= 8) u8(static_cast<std::uint8_t>(u >> shift));
}

void Writer::str(std::string_view s) {
  i32(static_cast<std::int32_t>(s.size()));
  raw(s);
}

void Writer::str_list(const std::vector<std::string>& items) {
  i32(static_cast<std::int32_t>(items.size()));
  for (const auto& item : items) str(item);
}

std::string_view Reader::take(std::size_t n) {
  if (n > remaining()) {
    protocol_error("needed " + std::to_string(n) + " bytes, " + std::to_string(remaining()) +
                   " left");
  }
  auto out = bytes_.substr(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t Reader::u8() { return static_cast<std::uint8_t>(take(1)[0]); }

std::int32_t Reader::i32() {
  const auto b = take(4);
  std::uint32_t u = 0;
  for (char c : b) u = (u << 8) | static_cast<std::uint8_t>(c);
  return static_cast<std::int32_t>(u);
}

double Reader::f64() {
  const auto b = take(8);
  std::uint64_t u = 0;
  for (char c : b) u = (u << 8) | static_cast<std::uint8_t>(c);
  return std::bit_cast<double>(u);
}

std::string Reader::str() {
  const auto n = i32();
  if (n < 0) protocol_error("negative string length");
  return std::string(take(static_cast<std::size_t>(n)));
}

std::vector<std::string> Reader::str_list() {
  const auto n = i32();
  if (n < 0) protocol_error("negative list length");
  std::vector<std::string> out;
  for (std::int32_t i = 0; i < n; ++i) out.push_back(str());
  return out;
}

void append_command(Writer& message, std::uint8_t command_id, std::string_view payload) {
  const std::size_t short_len = 1 + 1 + payload.size();
  if (short_len <= 255) {
    message.u8(static_cast<std::uint8_t>(short_len));
  } else {
    message.u8(0);
    message.i32(static_cast<std::int32_t>(1 + 4 + 1 + payload.size()));
  }
  message.u8(command_id);
  message.raw(payload);
}

std::string frame_message(const Writer& commands) {
  Writer framed;
  framed.i32(static_cast<std::int32_t>(4 + commands.size()));
  framed.raw(commands.bytes());
  return framed.bytes();
}

Command read_command(Reader& reader) {
  const std::size_t start = reader.position();
  std::size_t length = reader.u8();
  if (length == 0) {
    const auto extended = reader.i32();
    if (extended < 6) protocol_error("extended command length too small");
    length = static_cast<std::size_t>(extended);
  } else if (length < 2) {
    protocol_error("command length " + std::to_string(length));
  }
  const std::size_t header = reader.position() - start;
  Command cmd;
  cmd.id = reader.u8();
  cmd.payload = std::string(reader.take(length - header - 1));
  return cmd;
}

}  // namespace traci

namespace {

std::string errno_text() { return std::strerror(errno); }

}  // namespace

TraciClient TraciClient::connect(const TraciEndpoint& endpoint, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string port = std::to_string(endpoint.port);
  const int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &found);
  if (rc != 0) {
    throw Error(ErrorCategory::transport,
                "cannot resolve " + endpoint.host + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  int fd = -1;
  for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) {
      last_error = errno_text();
      continue;
    }
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    last_error = errno_text();
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(found);
  if (fd < 0) {
    throw Error(ErrorCategory::transport,
                "cannot connect to TraCI server " + endpoint.host + ":" + port + ": " + last_error);
  }
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TraciClient(fd);
}

TraciClient::TraciClient(TraciClient&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

TraciClient& TraciClient::operator=(TraciClient&& other) noexcept {
  if (this != &other) {
    reset();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

TraciClient::~TraciClient() { reset(); }

void TraciClient::reset() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void TraciClient::send_all(std::string_view bytes) {
  while (!bytes.empty()) {
    const ssize_t n = ::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCategory::transport, "TraCI send failed: " + errno_text());
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::string TraciClient::recv_exact(std::size_t n) {
  std::string out(n, '\0');
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd_, out.data() + got, n - got, 0);
    if (r == 0) {
      throw Error(ErrorCategory::protocol, "TraCI protocol violation: connection closed by server");
    }
    if (r < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCategory::transport, "TraCI receive failed: " + errno_text());
    }
    got += static_cast<std::size_t>(r);
  }
  return out;
}

std::string TraciClient::exchange(std::uint8_t command_id, std::string_view payload) {
  if (fd_ < 0) throw Error(ErrorCategory::transport, "TraCI session is not connected");
  traci::Writer commands;
  traci::append_command(commands, command_id, payload);
  send_all(traci::frame_message(commands));

  const std::string header = recv_exact(4);
  traci::Reader header_reader(header);
  const auto total = header_reader.i32();
  if (total < 4) {
    throw Error(ErrorCategory::protocol,
                "TraCI protocol violation: message length " + std::to_string(total));
  }
  std::string body = recv_exact(static_cast<std::size_t>(total) - 4);
  traci::Reader reader(body);
  const auto status = traci::read_command(reader);
  if (status.id != command_id) {
    throw Error(ErrorCategory::protocol, "TraCI protocol violation: status for command " +
                                             std::to_string(status.id) + ", expected " +
                                             std::to_string(command_id));
  }
  traci::Reader status_reader(status.payload);
  const auto result = status_reader.u8();
  const auto description = status_reader.str();
  if (result != traci::kResultOk) {
    throw Error(ErrorCategory::command_failed,
                "TraCI command " + std::to_string(command_id) + " failed (" +
                    (result == traci::kResultNotImplemented ? "not implemented" : "error") +
                    "): " + description);
  }
  return body.substr(reader.position());
}

TraciVersion TraciClient::get_version() {
  const std::string rest = exchange(traci::kCmdGetVersion, {});
  traci::Reader reader(rest);
  const auto response = traci::read_command(reader);
  if (response.id != traci::kCmdGetVersion) {
    throw Error(ErrorCategory::protocol, "TraCI protocol violation: unexpected version response");
  }
  traci::Reader payload(response.payload);
  TraciVersion version;
  version.api_version = payload.i32();
  version.identifier = payload.str();
  return version;
}

void TraciClient::simulation_step(double target_time) {
  traci::Writer payload;
  payload.f64(target_time);
  const std::string rest = exchange(traci::kCmdSimulationStep, payload.bytes());
  traci::Reader reader(rest);
  const auto subscriptions = reader.i32();
  if (subscriptions < 0) {
    throw Error(ErrorCategory::protocol, "TraCI protocol violation: negative subscription count");
  }
  // no subscriptions are made, but skip any the server sends
  for (std::int32_t i = 0; i < subscriptions; ++i) traci::read_command(reader);
}

std::vector<std::string> TraciClient::edge_last_step_vehicle_ids(const std::string& edge_id) {
  traci::Writer payload;
  payload.u8(traci::kVarLastStepVehicleIds);
  payload.str(edge_id);
  const std::string rest = exchange(traci::kCmdGetEdgeVariable, payload.bytes());
  traci::Reader reader(rest);
  const auto response = traci::read_command(reader);
  if (response.id != traci::kResponseGetEdgeVariable) {
    throw Error(ErrorCategory::protocol, "TraCI protocol violation: response id " +
                                             std::to_string(response.id) + " for edge query");
  }
  traci::Reader body(response.payload);
  if (body.u8() != traci::kVarLastStepVehicleIds) {
    throw Error(ErrorCategory::protocol, "TraCI protocol violation: wrong variable in response");
  }
  const auto object = body.str();
  if (object != edge_id) {
    throw Error(ErrorCategory::protocol,
                "TraCI protocol violation: response for edge '" + object + "'");
  }
  if (body.u8() != traci::kTypeStringList) {
    throw Error(ErrorCategory::protocol, "TraCI protocol violation: expected a string list");
  }
  return body.str_list();
}

void TraciClient::close() {
  if (fd_ < 0) return;
  exchange(traci::kCmdClose, {});
  reset();
}

std::map<std::string, std::set<std::string>> traci_collect(const TraciEndpoint& endpoint,
                                                           const std::vector<std::string>& edge_ids,
                                                           std::int64_t steps) {
  if (steps < 0) throw Error(ErrorCategory::invalid_input, "negative step count");
  auto client = TraciClient::connect(endpoint);
  client.get_version();
  std::map<std::string, std::set<std::string>> seen;
  for (const auto& edge : edge_ids) seen[edge];
  for (std::int64_t step = 0; step < steps; ++step) {
    client.simulation_step();
    for (const auto& edge : edge_ids) {
      for (auto& id : client.edge_last_step_vehicle_ids(edge)) seen[edge].insert(std::move(id));
    }
  }
  client.close();
  return seen;
}

}  // namespace tmcsim
