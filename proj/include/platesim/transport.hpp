#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "platesim/rng.hpp"
#include "platesim/telemetry.hpp"

namespace platesim {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Byte-stream endpoint. Single producer, single consumer.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual void write(std::span<const std::uint8_t> bytes) = 0;
  // Blocks until at least one byte is available; returns 0 at end of stream.
  virtual std::size_t read(std::span<std::uint8_t> out) = 0;
  virtual void close() = 0;
};

/// In-process stream backed by a locked deque.
class InProcessStream final : public ByteStream {
 public:
  void write(std::span<const std::uint8_t> bytes) override {
    {
      std::lock_guard lock(mu_);
      if (closed_) throw TransportError("write on closed in-process stream");
      buf_.insert(buf_.end(), bytes.begin(), bytes.end());
    }
    cv_.notify_one();
  }

  std::size_t read(std::span<std::uint8_t> out) override {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !buf_.empty() || closed_; });
    const std::size_t n = std::min(out.size(), buf_.size());
    std::copy_n(buf_.begin(), n, out.begin());
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(n));
    return n;
  }

  void close() override {
    {
      std::lock_guard lock(mu_);
      closed_ = true;
    }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::uint8_t> buf_;
  bool closed_{false};
};

class SocketStream final : public ByteStream {
 public:
  explicit SocketStream(int fd) : fd_(fd) {}
  SocketStream(const SocketStream&) = delete;
  SocketStream& operator=(const SocketStream&) = delete;
  SocketStream(SocketStream&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  ~SocketStream() override { close(); }

  void write(std::span<const std::uint8_t> bytes) override {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
      const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("send: ") + std::strerror(errno));
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::size_t read(std::span<std::uint8_t> out) override {
    for (;;) {
      const ssize_t n = ::recv(fd_, out.data(), out.size(), 0);
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno != EINTR) throw TransportError(std::string("recv: ") + std::strerror(errno));
    }
  }

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_;
};

struct Endpoint {
  std::string host{"127.0.0.1"};
  std::uint16_t port{0};
};

/// Parses "host:port".
inline Endpoint parse_endpoint(const std::string& s) {
  const auto colon = s.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == s.size()) {
    throw std::invalid_argument("expected host:port, got '" + s + "'");
  }
  const int port = std::stoi(s.substr(colon + 1));
  if (port < 0 || port > 65535) throw std::invalid_argument("port out of range in '" + s + "'");
  return Endpoint{s.substr(0, colon), static_cast<std::uint16_t>(port)};
}

namespace detail {

inline sockaddr_in resolve_ipv4(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(ep.host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
    throw TransportError("cannot resolve host '" + ep.host + "'");
  }
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  addr.sin_port = htons(ep.port);
  return addr;
}

}  // namespace detail

/// Listening socket on the simulator side; the mapper connects to it.
class TcpListener {
 public:
  explicit TcpListener(const Endpoint& ep) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) throw TransportError("socket() failed");
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = detail::resolve_ipv4(ep);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      const std::string err = std::strerror(errno);
      ::close(fd_);
      throw TransportError("bind " + ep.host + ":" + std::to_string(ep.port) + ": " + err);
    }
    if (::listen(fd_, 1) != 0) {
      ::close(fd_);
      throw TransportError("listen() failed");
    }
  }
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;
  ~TcpListener() {
    if (fd_ >= 0) ::close(fd_);
  }

  std::uint16_t port() const {
    sockaddr_in addr{};
    socklen_t len = sizeof(addr);
    ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    return ntohs(addr.sin_port);
  }

  SocketStream accept() {
    for (;;) {
      const int c = ::accept(fd_, nullptr, nullptr);
      if (c >= 0) {
        int one = 1;
        ::setsockopt(c, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
        return SocketStream(c);
      }
      if (errno != EINTR) throw TransportError(std::string("accept: ") + std::strerror(errno));
    }
  }

 private:
  int fd_{-1};
};

inline SocketStream tcp_connect(const Endpoint& ep) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("socket() failed");
  sockaddr_in addr = detail::resolve_ipv4(ep);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw TransportError("connect " + ep.host + ":" + std::to_string(ep.port) + ": " + err);
  }
  return SocketStream(fd);
}

/// Drops whole packets with a fixed probability from a seeded stream; one
/// draw per packet whether or not it is dropped.
class DropFilter {
 public:
  DropFilter(double drop_probability, std::uint64_t seed) : p_(drop_probability), rng_(seed) {
    if (!(p_ >= 0.0 && p_ <= 1.0)) throw std::invalid_argument("drop probability must lie in [0, 1]");
  }
  bool keep() { return !(rng_.uniform() < p_); }

 private:
  double p_;
  RngStream rng_;
};

/// Encodes packets onto a byte stream, optionally through a drop filter.
class TelemetrySender {
 public:
  TelemetrySender(ByteStream& out, std::optional<DropFilter> drop = std::nullopt)
      : out_(&out), drop_(std::move(drop)) {}

  // Returns false when the packet was dropped.
  bool send(const TelemetryPacket& p) {
    if (drop_ && !drop_->keep()) return false;
    const Frame f = encode_packet(p);
    out_->write(f);
    return true;
  }

 private:
  ByteStream* out_;
  std::optional<DropFilter> drop_;
};

/// Reassembles 20-byte frames from a byte stream. Bytes that do not start a
/// valid frame are skipped until the next 0xC4 0xAF.
class FrameReceiver {
 public:
  struct Stats {
    std::size_t frames{0};
    std::size_t bad_frames{0};
    std::size_t skipped_bytes{0};
  };

  std::vector<TelemetryPacket> feed(std::span<const std::uint8_t> bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
    std::vector<TelemetryPacket> out;
    std::size_t i = 0;
    while (i < buf_.size()) {
      if (buf_[i] != kMagic0 || (i + 1 < buf_.size() && buf_[i + 1] != kMagic1)) {
        ++i;
        ++stats_.skipped_bytes;
        continue;
      }
      if (buf_.size() - i < kFrameSize) break;
      const auto r = decode_packet(std::span<const std::uint8_t>(buf_.data() + i, kFrameSize));
      if (const auto* p = std::get_if<TelemetryPacket>(&r)) {
        out.push_back(*p);
        ++stats_.frames;
        i += kFrameSize;
      } else {
        ++stats_.bad_frames;
        last_error_ = std::get<DecodeError>(r);
        ++i;
      }
    }
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(i));
    return out;
  }

  // Bytes of an incomplete frame still buffered.
  std::size_t pending() const { return buf_.size(); }
  const Stats& stats() const { return stats_; }
  std::optional<DecodeError> last_error() const { return last_error_; }

 private:
  std::vector<std::uint8_t> buf_;
  Stats stats_{};
  std::optional<DecodeError> last_error_{};
};

class PartialFrameError : public TransportError {
 public:
  explicit PartialFrameError(std::size_t bytes)
      : TransportError("stream closed mid-frame with " + std::to_string(bytes) + " bytes pending"),
        bytes_(bytes) {}
  std::size_t bytes() const { return bytes_; }

 private:
  std::size_t bytes_;
};

/// Drains a stream to its end. Throws PartialFrameError when the stream
/// closes inside a frame.
inline std::vector<TelemetryPacket> receive_all(ByteStream& in, FrameReceiver& rx) {
  std::vector<TelemetryPacket> out;
  std::array<std::uint8_t, 512> chunk{};
  for (;;) {
    const std::size_t n = in.read(chunk);
    if (n == 0) break;
    auto got = rx.feed(std::span<const std::uint8_t>(chunk.data(), n));
    out.insert(out.end(), got.begin(), got.end());
  }
  if (rx.pending() > 0) throw PartialFrameError(rx.pending());
  return out;
}

}  // namespace platesim
