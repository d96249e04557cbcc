#pragma once

// Small blocking clients shared by the socket-level tests.

#include <sys/socket.h>
#include <sys/time.h>

#include <optional>
#include <string>

#include "irrigation/net.hpp"
#include "irrigation/websocket.hpp"

namespace testing_support {

inline void set_receive_timeout(const irrigation::net::Socket& s, int ms) {
  timeval tv{ms / 1000, (ms % 1000) * 1000};
  ::setsockopt(s.fd(), SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
}

// One request line in, one reply line out.
class LineClient {
 public:
  explicit LineClient(std::uint16_t port)
      : socket_(irrigation::net::connect_tcp("127.0.0.1", port)), reader_(socket_, 1 << 20) {
    set_receive_timeout(socket_, 5000);
  }
  std::optional<std::string> send(const std::string& line) {
    socket_.send_all(line + "\n");
    return read();
  }
  std::optional<std::string> read() {
    auto r = reader_.next();
    if (r.status != irrigation::net::LineReader::Status::Line) return std::nullopt;
    return r.line;
  }
  irrigation::net::Socket& socket() { return socket_; }

 private:
  irrigation::net::Socket socket_;
  irrigation::net::LineReader reader_;
};

class StreamClient {
 public:
  explicit StreamClient(std::uint16_t port)
      : conn_(irrigation::ws::connect("127.0.0.1", port, "/stream")), reader_(conn_.socket, conn_.pending) {
    set_receive_timeout(conn_.socket, 5000);
  }
  std::optional<std::string> next_text() {
    while (auto f = reader_.next()) {
      if (f->opcode == irrigation::ws::Opcode::Text) return f->payload;
    }
    return std::nullopt;
  }
  std::optional<irrigation::ws::Frame> next_frame() { return reader_.next(); }
  void send(irrigation::ws::Opcode op, const std::string& payload) {
    conn_.socket.send_all(irrigation::ws::encode_frame(op, payload, 0x12345678u));
  }

 private:
  irrigation::ws::ClientConnection conn_;
  irrigation::ws::FrameReader reader_;
};

}  // namespace testing_support
