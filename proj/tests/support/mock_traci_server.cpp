#include "mock_traci_server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <stdexcept>

#include "tmcsim/traci.hpp"

namespace tmcsim::testkit {

namespace {

bool recv_exact(int fd, std::string& out, std::size_t n) {
  out.assign(n, '\0');
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, out.data() + got, n - got, 0);
    if (r <= 0) return false;
    got += static_cast<std::size_t>(r);
  }
  return true;
}

void send_all(int fd, const std::string& bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) return;
    sent += static_cast<std::size_t>(n);
  }
}

void append_status(traci::Writer& w, std::uint8_t id, std::uint8_t result, const std::string& text) {
  traci::Writer status;
  status.u8(result);
  status.str(text);
  traci::append_command(w, id, status.bytes());
}

}  // namespace

MockTraciServer::MockTraciServer(MockTraciScript script) : script_(std::move(script)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error("mock traci: socket failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(listen_fd_, 1) != 0) {
    ::close(listen_fd_);
    throw std::runtime_error("mock traci: bind/listen failed");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  worker_ = std::thread([this] { serve(); });
}

MockTraciServer::~MockTraciServer() {
  if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
  join();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void MockTraciServer::join() {
  if (worker_.joinable()) worker_.join();
}

std::vector<std::uint8_t> MockTraciServer::received() const {
  std::lock_guard lock(mutex_);
  return received_;
}

void MockTraciServer::serve() {
  const int fd = ::accept(listen_fd_, nullptr, nullptr);
  if (fd < 0) return;
  std::size_t step = 0;
  std::string header;
  std::string body;
  while (recv_exact(fd, header, 4)) {
    traci::Reader hr(header);
    const auto total = hr.i32();
    if (total < 4 || !recv_exact(fd, body, static_cast<std::size_t>(total) - 4)) break;
    traci::Reader reader(body);
    const auto cmd = traci::read_command(reader);
    {
      std::lock_guard lock(mutex_);
      received_.push_back(cmd.id);
    }
    traci::Writer reply;
    if (script_.fail_command && *script_.fail_command == cmd.id) {
      append_status(reply, cmd.id, traci::kResultError, "scripted failure");
      send_all(fd, traci::frame_message(reply));
      continue;
    }
    if (cmd.id == traci::kCmdGetVersion) {
      append_status(reply, cmd.id, traci::kResultOk, "");
      traci::Writer payload;
      payload.i32(21);
      payload.str("mock traci");
      traci::append_command(reply, traci::kCmdGetVersion, payload.bytes());
    } else if (cmd.id == traci::kCmdSimulationStep) {
      if (script_.close_after_steps && steps_served_.load() >= *script_.close_after_steps) break;
      ++step;
      ++steps_served_;
      append_status(reply, cmd.id, traci::kResultOk, "");
      reply.i32(script_.extra_subscriptions);
      for (int i = 0; i < script_.extra_subscriptions; ++i) {
        traci::append_command(reply, 0xE4, std::string("\x00\x00\x00\x00", 4));
      }
    } else if (cmd.id == traci::kCmdGetEdgeVariable) {
      traci::Reader req(cmd.payload);
      const auto var = req.u8();
      const auto edge = req.str();
      std::vector<std::string> ids;
      if (step >= 1 && step <= script_.steps.size()) {
        const auto& frame = script_.steps[step - 1];
        if (auto it = frame.find(edge); it != frame.end()) ids = it->second;
      }
      append_status(reply, cmd.id, traci::kResultOk, "");
      traci::Writer payload;
      payload.u8(var);
      payload.str(edge);
      payload.u8(traci::kTypeStringList);
      payload.str_list(ids);
      traci::append_command(reply, traci::kResponseGetEdgeVariable, payload.bytes());
    } else if (cmd.id == traci::kCmdClose) {
      append_status(reply, cmd.id, traci::kResultOk, "");
      send_all(fd, traci::frame_message(reply));
      break;
    } else {
      append_status(reply, cmd.id, traci::kResultNotImplemented, "unsupported command");
    }
    send_all(fd, traci::frame_message(reply));
  }
  ::close(fd);
}

}  // namespace tmcsim::testkit
