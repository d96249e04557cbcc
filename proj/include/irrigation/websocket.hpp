#pragma once

// Minimal RFC 6455 support: enough for the status stream (server pushes text
// frames, answers ping/close) and a blocking client used by tools and tests.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include "irrigation/net.hpp"

namespace irrigation::ws {

enum class Opcode : std::uint8_t {
  Continuation = 0x0,
  Text = 0x1,
  Binary = 0x2,
  Close = 0x8,
  Ping = 0x9,
  Pong = 0xA,
};

struct Frame {
  Opcode opcode = Opcode::Text;
  bool fin = true;
  std::string payload;
};

/// Sec-WebSocket-Accept value for a client key.
[[nodiscard]] std::string accept_key(std::string_view client_key);

/// Server frames are unmasked; clients must pass a mask key.
[[nodiscard]] std::string encode_frame(Opcode opcode, std::string_view payload,
                                       std::optional<std::uint32_t> mask = std::nullopt);

class FrameReader {
 public:
  FrameReader(const net::Socket& socket, std::string pending = {})
      : socket_(socket), buffer_(std::move(pending)) {}

  /// Next frame, unmasked; std::nullopt on close or protocol error.
  std::optional<Frame> next();

 private:
  bool fill(std::size_t want);

  const net::Socket& socket_;
  std::string buffer_;
};

struct HttpRequestHead {
  std::string method;
  std::string path;
  std::string websocket_key;  // empty when absent
  bool upgrade_websocket = false;
};

/// Reads up to the blank line. Bytes past it are returned in leftover.
[[nodiscard]] std::optional<HttpRequestHead> read_request_head(const net::Socket& socket,
                                                               std::string& leftover);

struct ClientConnection {
  net::Socket socket;
  std::string pending;  // bytes received after the handshake response
};

/// Opens a client connection and completes the upgrade handshake. Throws
/// net::NetError on failure.
[[nodiscard]] ClientConnection connect(const std::string& host, std::uint16_t port,
                                       const std::string& path);

/// Fan-out of text messages to connected clients. Each client has its own
/// writer thread and bounded outbox, so a slow client never blocks broadcast().
class BroadcastHub {
 public:
  BroadcastHub() = default;
  BroadcastHub(const BroadcastHub&) = delete;
  BroadcastHub& operator=(const BroadcastHub&) = delete;
  ~BroadcastHub() { stop(); }

  /// Takes over an upgraded socket and queues `greeting` as its first message.
  void add(net::Socket socket, std::string pending, std::string greeting);
  void broadcast(const std::string& message);
  void stop();
  [[nodiscard]] std::size_t client_count();

  static constexpr std::size_t kMaxOutbox = 64;

 private:
  struct Client {
    net::Socket socket;
    std::mutex mutex;
    std::condition_variable cv;
    std::deque<std::string> outbox;  // encoded frames
    bool closed = false;
    std::thread writer;
    std::thread reader;
  };

  static void enqueue(Client& client, std::string frame);
  static void close_client(Client& client);
  void reap_locked();

  std::mutex mutex_;
  std::list<std::unique_ptr<Client>> clients_;
  bool stopped_ = false;
};

}  // namespace irrigation::ws
