#pragma once

// Thin RAII layer over blocking POSIX TCP sockets.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace irrigation::net {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) noexcept : fd_(fd) {}
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  ~Socket() { close(); }

  [[nodiscard]] int fd() const noexcept { return fd_; }
  [[nodiscard]] bool valid() const noexcept { return fd_ >= 0; }
  int release() noexcept {
    const int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void close() noexcept;
  /// Unblocks readers and writers on other threads without closing the fd.
  void shutdown() noexcept;

  /// Writes everything or throws NetError.
  void send_all(std::string_view data) const;
  /// Returns bytes read; 0 on orderly close. Throws NetError on failure.
  std::size_t receive(char* buffer, std::size_t capacity) const;

 private:
  int fd_ = -1;
};

struct Listener {
  Socket socket;
  std::uint16_t port = 0;  // actual bound port
};

/// Binds and listens; port 0 picks an ephemeral port. Throws NetError (for
/// example when the port is in use).
[[nodiscard]] Listener listen_tcp(const std::string& host, std::uint16_t port);

/// Blocks for the next connection; std::nullopt once the listener is shut down.
[[nodiscard]] std::optional<Socket> accept_connection(const Socket& listener);

[[nodiscard]] Socket connect_tcp(const std::string& host, std::uint16_t port);

/// Buffered reader that splits a stream into lines of bounded length.
class LineReader {
 public:
  explicit LineReader(const Socket& socket, std::size_t max_line = 64 * 1024)
      : socket_(socket), max_line_(max_line) {}

  enum class Status { Line, TooLong, Closed };
  struct Result {
    Status status = Status::Closed;
    std::string line;  // without the terminating newline
  };

  /// An over-long line is reported once as TooLong and skipped through its
  /// newline.
  Result next();

 private:
  const Socket& socket_;
  std::size_t max_line_;
  std::string buffer_;
  bool discarding_ = false;
};

}  // namespace irrigation::net
