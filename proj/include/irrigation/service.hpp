#pragma once

// Network front end for a ControlSession.
//
//   sensor port  TCP, one JSON message per line (reading / override / mode);
//                each line is answered with a status or error line
//   http port    GET /status, POST /override, POST /mode, GET /events?from=N
//   ws port      WebSocket /stream, pushes the status JSON after every change
//
// All session mutations run on one worker thread fed by a queue, so event
// sequence numbers form a total order no matter which connection caused them.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "irrigation/controller.hpp"
#include "irrigation/mlp.hpp"
#include "irrigation/net.hpp"
#include "irrigation/protocol.hpp"
#include "irrigation/session.hpp"
#include "irrigation/websocket.hpp"

namespace httplib {
class Server;
}

namespace irrigation::telemetry {

/// Append-only NDJSON event file.
class EventStore {
 public:
  explicit EventStore(std::filesystem::path path);

  /// Existing events (empty if the file does not exist). Throws DecodeError
  /// or SequenceGap on a corrupt log.
  [[nodiscard]] std::vector<Event> load() const;
  void append(std::span<const Event> events);
  void flush();
  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  std::uint16_t http_port = 8080;
  std::uint16_t ws_port = 8081;
  std::uint16_t sensor_port = 7070;
  std::filesystem::path log_path;  // empty: keep the log in memory only
  control::ControllerMode mode = control::RuleOnlyMode{};
  control::CycleConfig cycle;
  std::optional<mlp::Model> model;
  std::chrono::milliseconds tick_interval{100};
  std::function<std::int64_t()> clock;  // defaults to wall-clock milliseconds
};

class Service {
 public:
  /// Loads and replays an existing log if there is one; the configured mode
  /// only applies to a fresh log.
  explicit Service(ServiceConfig config);
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;
  ~Service();

  /// Binds all three ports and starts serving. Throws net::NetError if a port
  /// cannot be bound.
  void start();
  /// Stops accepting, drains queued commands and flushes the log. Idempotent.
  void stop();

  [[nodiscard]] std::uint16_t http_port() const noexcept { return http_port_; }
  [[nodiscard]] std::uint16_t ws_port() const noexcept { return ws_port_; }
  [[nodiscard]] std::uint16_t sensor_port() const noexcept { return sensor_port_; }

  [[nodiscard]] ServerStatus status() const;
  [[nodiscard]] std::string events_ndjson(std::uint64_t from_seq);
  [[nodiscard]] std::size_t stream_clients() { return hub_.client_count(); }

  Outcome submit_reading(const SensorReading& reading);
  Outcome submit_override(PumpDuty duty, const std::string& source);
  Outcome submit_mode(const control::ControllerMode& mode, const std::string& source);

 private:
  template <typename Fn>
  auto run_on_worker(Fn&& fn) -> std::invoke_result_t<Fn, ControlSession&>;
  void post(std::function<void()> task);
  void publish(const Outcome& outcome);
  [[nodiscard]] std::int64_t now_ms() const;

  void worker_loop();
  void ticker_loop();
  void sensor_accept_loop();
  void stream_accept_loop();
  void serve_sensor_connection(const net::Socket& socket);
  [[nodiscard]] std::string handle_line(const std::string& line);
  void install_http_routes();

  ServiceConfig config_;
  std::optional<EventStore> store_;
  std::unique_ptr<ControlSession> session_;  // touched only by the worker

  mutable std::mutex snapshot_mutex_;
  ServerStatus snapshot_;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<std::function<void()>> queue_;
  bool worker_stopping_ = false;
  std::thread worker_;

  std::mutex ticker_mutex_;
  std::condition_variable ticker_cv_;
  bool ticker_stopping_ = false;
  std::thread ticker_;

  std::unique_ptr<httplib::Server> http_;
  std::thread http_thread_;
  net::Listener sensor_listener_;
  net::Listener stream_listener_;
  std::thread sensor_accept_thread_;
  std::thread stream_accept_thread_;

  struct Connection {
    net::Socket socket;
    std::thread thread;
    bool done = false;
  };
  std::mutex connections_mutex_;
  std::list<std::unique_ptr<Connection>> connections_;

  ws::BroadcastHub hub_;

  std::uint16_t http_port_ = 0;
  std::uint16_t ws_port_ = 0;
  std::uint16_t sensor_port_ = 0;
  bool started_ = false;
  bool stopped_ = false;
};

}  // namespace irrigation::telemetry
