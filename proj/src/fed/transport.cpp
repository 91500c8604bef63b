#include "fedboost/fed/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

namespace fedboost::fed {

namespace {

using Clock = std::chrono::steady_clock;

[[noreturn]] void sys_error(const std::string& what) {
  throw ProtocolError(ProtocolCode::connection_closed, what + ": " + std::strerror(errno));
}

// Waits until the fd is readable or the deadline passes.
void wait_readable(int fd, const std::optional<Clock::time_point>& deadline) {
  for (;;) {
    int wait_ms = -1;
    if (deadline) {
      const auto remaining =
          std::chrono::duration_cast<std::chrono::milliseconds>(*deadline - Clock::now()).count();
      if (remaining <= 0) throw ProtocolError(ProtocolCode::timeout, "receive timed out");
      wait_ms = static_cast<int>(remaining);
    }
    pollfd pfd{fd, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, wait_ms);
    if (rc > 0) return;
    if (rc == 0) throw ProtocolError(ProtocolCode::timeout, "receive timed out");
    if (errno != EINTR) sys_error("poll");
  }
}

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
    throw ConfigError("not an IPv4 address: '" + host + "'");
  return addr;
}

}  // namespace

std::string encode_frame_header(std::uint32_t payload_size) {
  std::string header(4, '\0');
  header[0] = static_cast<char>((payload_size >> 24) & 0xff);
  header[1] = static_cast<char>((payload_size >> 16) & 0xff);
  header[2] = static_cast<char>((payload_size >> 8) & 0xff);
  header[3] = static_cast<char>(payload_size & 0xff);
  return header;
}

std::uint32_t decode_frame_header(const unsigned char header[4]) {
  return (static_cast<std::uint32_t>(header[0]) << 24) |
         (static_cast<std::uint32_t>(header[1]) << 16) |
         (static_cast<std::uint32_t>(header[2]) << 8) | static_cast<std::uint32_t>(header[3]);
}

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

Socket Socket::connect(const std::string& host, std::uint16_t port) {
  const sockaddr_in addr = make_addr(host, port);
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) sys_error("socket");
  Socket s(fd);
  if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0)
    sys_error("connect to " + host + ":" + std::to_string(port));
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return s;
}

void Socket::send_all(const void* data, std::size_t size) {
  const char* p = static_cast<const char*>(data);
  while (size > 0) {
    const ssize_t sent = ::send(fd_, p, size, MSG_NOSIGNAL);
    if (sent < 0) {
      if (errno == EINTR) continue;
      sys_error("send");
    }
    p += sent;
    size -= static_cast<std::size_t>(sent);
  }
}

bool Socket::recv_all(void* data, std::size_t size, std::optional<double> timeout_s) {
  std::optional<Clock::time_point> deadline;
  if (timeout_s)
    deadline = Clock::now() + std::chrono::microseconds(static_cast<std::int64_t>(*timeout_s * 1e6));

  char* p = static_cast<char*>(data);
  std::size_t got = 0;
  while (got < size) {
    wait_readable(fd_, deadline);
    const ssize_t n = ::recv(fd_, p + got, size - got, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      sys_error("recv");
    }
    if (n == 0) {
      if (got == 0) return false;  // orderly shutdown between frames
      throw ProtocolError(ProtocolCode::connection_closed, "peer closed mid-frame");
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

void Socket::send_frame(std::string_view payload) {
  if (payload.size() > kMaxFrameBytes)
    throw ProtocolError(ProtocolCode::oversize_frame,
                        "refusing to send frame of " + std::to_string(payload.size()) + " bytes");
  const std::string header = encode_frame_header(static_cast<std::uint32_t>(payload.size()));
  send_all(header.data(), header.size());
  send_all(payload.data(), payload.size());
}

std::optional<std::string> Socket::try_recv_frame(std::optional<double> timeout_s) {
  unsigned char header[4];
  if (!recv_all(header, sizeof(header), timeout_s)) return std::nullopt;
  const std::uint32_t size = decode_frame_header(header);
  if (size > kMaxFrameBytes)
    throw ProtocolError(ProtocolCode::oversize_frame,
                        "incoming frame of " + std::to_string(size) + " bytes exceeds the 64 MiB cap");
  std::string payload(size, '\0');
  if (size > 0 && !recv_all(payload.data(), size, timeout_s))
    throw ProtocolError(ProtocolCode::connection_closed, "peer closed mid-frame");
  return payload;
}

std::string Socket::recv_frame(std::optional<double> timeout_s) {
  auto payload = try_recv_frame(timeout_s);
  if (!payload)
    throw ProtocolError(ProtocolCode::connection_closed, "peer closed the connection");
  return std::move(*payload);
}

Listener::Listener(const std::string& address) {
  const auto [host, port] = parse_address(address);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) sys_error("socket");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = make_addr(host, port);
  if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0)
    sys_error("bind " + address);
  if (::listen(fd_, 16) != 0) sys_error("listen");

  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&bound), &len) != 0) sys_error("getsockname");
  port_ = ntohs(bound.sin_port);
}

Listener::~Listener() {
  if (fd_ >= 0) ::close(fd_);
}

Socket Listener::accept(std::optional<double> timeout_s) {
  std::optional<Clock::time_point> deadline;
  if (timeout_s)
    deadline = Clock::now() + std::chrono::microseconds(static_cast<std::int64_t>(*timeout_s * 1e6));
  wait_readable(fd_, deadline);
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) sys_error("accept");
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return Socket(fd);
}

std::pair<std::string, std::uint16_t> parse_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size())
    throw ConfigError("listen address must be host:port, got '" + address + "'");
  const std::string host = address.substr(0, colon);
  const std::string port_text = address.substr(colon + 1);
  std::uint32_t port = 0;
  for (const char c : port_text) {
    if (c < '0' || c > '9') throw ConfigError("bad port in '" + address + "'");
    port = port * 10 + static_cast<std::uint32_t>(c - '0');
    if (port > 65535) throw ConfigError("port out of range in '" + address + "'");
  }
  return {host, static_cast<std::uint16_t>(port)};
}

}  // namespace fedboost::fed
