#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "fedboost/common.hpp"

namespace fedboost::fed {

// Frame layout: 4-byte big-endian unsigned payload length, then the JSON
// payload. Frames above 64 MiB are a protocol error on both sides.
inline constexpr std::uint32_t kMaxFrameBytes = 64u * 1024u * 1024u;

std::string encode_frame_header(std::uint32_t payload_size);
std::uint32_t decode_frame_header(const unsigned char header[4]);

// Owning POSIX stream socket. Receive operations honor an optional deadline;
// a closed peer raises ProtocolCode::connection_closed, an expired deadline
// ProtocolCode::timeout.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  static Socket connect(const std::string& host, std::uint16_t port);

  bool valid() const { return fd_ >= 0; }
  void close();

  void send_frame(std::string_view payload);
  // timeout_s: no value means block indefinitely.
  std::string recv_frame(std::optional<double> timeout_s = std::nullopt);

  // nullopt on orderly shutdown before any byte of a frame arrives.
  std::optional<std::string> try_recv_frame(std::optional<double> timeout_s = std::nullopt);

 private:
  void send_all(const void* data, std::size_t size);
  // Returns false when the peer closed before the first byte.
  bool recv_all(void* data, std::size_t size, std::optional<double> timeout_s);

  int fd_ = -1;
};

class Listener {
 public:
  // address is "host:port"; port 0 binds an ephemeral port.
  explicit Listener(const std::string& address);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  std::uint16_t port() const { return port_; }
  Socket accept(std::optional<double> timeout_s = std::nullopt);

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

// Splits "host:port". Throws ConfigError on malformed input.
std::pair<std::string, std::uint16_t> parse_address(const std::string& address);

}  // namespace fedboost::fed
