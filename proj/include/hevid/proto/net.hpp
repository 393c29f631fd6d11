// Copyright (C) 2026 hevid contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Minimal POSIX stream-socket transport.  Messages are length-framed:
// a u32 little-endian byte count followed by the body.  recv_message
// distinguishes a clean connection close (nullopt) from mid-message
// truncation (transport error).

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "hevid/common.hpp"

namespace hevid::proto::net {

inline constexpr u32 kMaxMessageBytes = 80u << 20;

struct Addr {
  std::string host;
  u16 port = 0;
};

inline Addr parse_address(std::string_view text) {
  const size_t colon = text.rfind(':');
  require(colon != std::string_view::npos && colon > 0 &&
              colon + 1 < text.size(),
          ErrorKind::config, "address must be host:port, got '" +
                                 std::string(text) + "'");
  Addr a;
  a.host = std::string(text.substr(0, colon));
  const std::string port_str(text.substr(colon + 1));
  unsigned long port = 0;
  try {
    size_t pos = 0;
    port = std::stoul(port_str, &pos);
    require(pos == port_str.size(), ErrorKind::config, "bad port");
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(ErrorKind::config, "invalid port in address '" + std::string(text) + "'");
  }
  require(port >= 1 && port <= 65535, ErrorKind::config,
          "port out of range in address '" + std::string(text) + "'");
  a.port = static_cast<u16>(port);
  return a;
}

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }
  ~Socket() { close(); }

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

  void shutdown_both() {
    if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
  }

  void set_recv_timeout(int ms) {
    timeval tv{};
    tv.tv_sec = ms / 1000;
    tv.tv_usec = (ms % 1000) * 1000;
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  }

  void send_all(const u8* data, size_t len) {
    size_t sent = 0;
    while (sent < len) {
      const ssize_t n =
          ::send(fd_, data + sent, len - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorKind::transport,
             std::string("send failed: ") + std::strerror(errno));
      }
      sent += static_cast<size_t>(n);
    }
  }

  // Returns false only on a clean EOF before the first byte; any other
  // shortfall (timeout, mid-message close) raises a transport error.
  bool recv_exact(u8* data, size_t len) {
    size_t got = 0;
    while (got < len) {
      const ssize_t n = ::recv(fd_, data + got, len - got, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        if (errno == EAGAIN || errno == EWOULDBLOCK)
          fail(ErrorKind::transport, "receive timed out");
        fail(ErrorKind::transport,
             std::string("recv failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        if (got == 0) return false;
        fail(ErrorKind::transport, "connection closed mid-message");
      }
      got += static_cast<size_t>(n);
    }
    return true;
  }

 private:
  int fd_ = -1;
};

inline Socket dial(const Addr& addr, int timeout_ms) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port_str = std::to_string(addr.port);
  const int rc = ::getaddrinfo(addr.host.c_str(), port_str.c_str(), &hints, &res);
  require(rc == 0 && res != nullptr, ErrorKind::transport,
          "cannot resolve " + addr.host + ": " + gai_strerror(rc));
  Error last(ErrorKind::transport, "no usable address for " + addr.host);
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    Socket s(fd);
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) {
      ::freeaddrinfo(res);
      s.set_recv_timeout(timeout_ms);
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return s;
    }
    last = Error(ErrorKind::transport,
                 "connect to " + addr.host + ":" + port_str + " failed: " +
                     std::strerror(errno));
  }
  ::freeaddrinfo(res);
  throw last;
}

class Listener {
 public:
  Listener() = default;
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;
  Listener(Listener&& other) noexcept
      : fd_(other.fd_), port_(other.port_) {
    other.fd_ = -1;
  }
  Listener& operator=(Listener&& other) noexcept {
    if (this != &other) {
      close();
      fd_ = other.fd_;
      port_ = other.port_;
      other.fd_ = -1;
    }
    return *this;
  }
  ~Listener() { close(); }

  static Listener open(const Addr& addr) {
    Listener l;
    l.fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    require(l.fd_ >= 0, ErrorKind::transport,
            std::string("socket failed: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(l.fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in sa{};
    sa.sin_family = AF_INET;
    sa.sin_port = htons(addr.port);
    if (addr.host.empty() || addr.host == "0.0.0.0") {
      sa.sin_addr.s_addr = htonl(INADDR_ANY);
    } else {
      require(::inet_pton(AF_INET, addr.host.c_str(), &sa.sin_addr) == 1,
              ErrorKind::config,
              "listener host must be an IPv4 address, got '" + addr.host + "'");
    }
    // Capture the result and errno before building the message: function
    // arguments are unsequenced, so strerror(errno) inside the require()
    // call could otherwise read a stale value.
    const int bind_rc =
        ::bind(l.fd_, reinterpret_cast<sockaddr*>(&sa), sizeof(sa));
    const int bind_err = errno;
    require(bind_rc == 0, ErrorKind::transport,
            "bind to " + addr.host + ":" + std::to_string(addr.port) +
                " failed: " + std::strerror(bind_err));
    const int listen_rc = ::listen(l.fd_, 16);
    const int listen_err = errno;
    require(listen_rc == 0, ErrorKind::transport,
            std::string("listen failed: ") + std::strerror(listen_err));
    sockaddr_in bound{};
    socklen_t blen = sizeof(bound);
    ::getsockname(l.fd_, reinterpret_cast<sockaddr*>(&bound), &blen);
    l.port_ = ntohs(bound.sin_port);
    return l;
  }

  // Waits up to timeout_ms for one connection; nullopt on timeout.
  std::optional<Socket> accept_for(int timeout_ms) {
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, timeout_ms);
    if (rc == 0) return std::nullopt;
    require(rc > 0, ErrorKind::transport,
            std::string("poll failed: ") + std::strerror(errno));
    const int cfd = ::accept(fd_, nullptr, nullptr);
    if (cfd < 0) {
      if (errno == EINTR || errno == ECONNABORTED) return std::nullopt;
      fail(ErrorKind::transport,
           std::string("accept failed: ") + std::strerror(errno));
    }
    int one = 1;
    ::setsockopt(cfd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return Socket(cfd);
  }

  u16 port() const { return port_; }
  bool valid() const { return fd_ >= 0; }

  void close() {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_ = -1;
  u16 port_ = 0;
};

inline void send_message(Socket& s, const bytes& body) {
  require(body.size() <= kMaxMessageBytes, ErrorKind::transport,
          "outgoing message too large");
  bytes header;
  put_u32(header, static_cast<u32>(body.size()));
  s.send_all(header.data(), header.size());
  s.send_all(body.data(), body.size());
}

inline std::optional<bytes> recv_message(Socket& s) {
  u8 header[4];
  if (!s.recv_exact(header, 4)) return std::nullopt;
  const u32 len = static_cast<u32>(header[0]) |
                  (static_cast<u32>(header[1]) << 8) |
                  (static_cast<u32>(header[2]) << 16) |
                  (static_cast<u32>(header[3]) << 24);
  require(len <= kMaxMessageBytes, ErrorKind::transport,
          "incoming message too large");
  bytes body(len);
  if (len != 0) {
    require(s.recv_exact(body.data(), len), ErrorKind::transport,
            "connection closed mid-message");
  }
  return body;
}

}  // namespace hevid::proto::net
