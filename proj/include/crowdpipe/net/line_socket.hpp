// Copyright 2026 The crowdpipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Newline-framed TCP. Every frame is one canonical JSON message, which
// never contains a raw newline.

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>

namespace crowdpipe::net {

struct Address {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// "host:port" or ":port". Throws kConfigError.
Address parse_address(const std::string& text);

class LineConn {
 public:
  LineConn() = default;
  explicit LineConn(int fd) : fd_(fd) {}
  ~LineConn();
  LineConn(LineConn&& other) noexcept;
  LineConn& operator=(LineConn&& other) noexcept;
  LineConn(const LineConn&) = delete;
  LineConn& operator=(const LineConn&) = delete;

  int fd() const { return fd_; }
  bool open() const { return fd_ >= 0; }
  void close();

  /// Blocking write of frame + '\n'. Throws kProtocolError on failure.
  void send_line(const std::string& frame);

  /// Reads whatever is available without blocking past one recv. Returns
  /// false when the peer has closed the connection.
  bool pump();
  /// Next complete frame from the buffer, if any.
  std::optional<std::string> next_line();

  /// Blocks up to timeout for the next frame. Returns nullopt on timeout;
  /// throws kProtocolError when the peer closes.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);

 private:
  int fd_ = -1;
  std::string buffer_;
};

/// Throws kConnectionRefused.
LineConn connect_to(const Address& address);

class Listener {
 public:
  /// Port 0 picks a free port. Throws kConfigError when binding fails.
  explicit Listener(const Address& address);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  int fd() const { return fd_; }
  std::uint16_t port() const { return port_; }
  LineConn accept();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace crowdpipe::net
