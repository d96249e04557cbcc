#include "irrigation/service.hpp"

#include <sstream>

#include "httplib.h"
#include "json.hpp"

namespace irrigation::telemetry {

namespace {

std::int64_t wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

std::string error_line(std::string kind, std::string message) {
  return encode_message(ErrorMessage{std::move(kind), std::move(message)});
}

constexpr const char* kJson = "application/json";

}  // namespace

// --- EventStore -------------------------------------------------------------

EventStore::EventStore(std::filesystem::path path) : path_(std::move(path)) {}

std::vector<Event> EventStore::load() const {
  std::ifstream in(path_, std::ios::binary);
  if (!in) return {};
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ndjson(buf.str());
}

void EventStore::append(std::span<const Event> events) {
  if (events.empty()) return;
  if (!out_.is_open()) {
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw std::runtime_error("cannot open event log " + path_.string());
  }
  out_ << to_ndjson(events);
  out_.flush();
}

void EventStore::flush() {
  if (out_.is_open()) out_.flush();
}

// --- Service ----------------------------------------------------------------

Service::Service(ServiceConfig config) : config_(std::move(config)) {
  if (!config_.clock) config_.clock = wall_clock_ms;
  std::vector<Event> existing;
  if (!config_.log_path.empty()) {
    store_.emplace(config_.log_path);
    existing = store_->load();
  }
  if (existing.empty()) {
    session_ = std::make_unique<ControlSession>(config_.mode, config_.cycle, config_.model, now_ms());
    if (store_) store_->append(session_->events());
  } else {
    session_ = std::make_unique<ControlSession>(
        ControlSession::resume(std::move(existing), config_.cycle, config_.model));
  }
  snapshot_ = session_->status();
}

Service::~Service() { stop(); }

std::int64_t Service::now_ms() const { return config_.clock(); }

void Service::start() {
  if (started_) return;
  sensor_listener_ = net::listen_tcp(config_.host, config_.sensor_port);
  stream_listener_ = net::listen_tcp(config_.host, config_.ws_port);

  http_ = std::make_unique<httplib::Server>();
  // httplib's default also sets SO_REUSEPORT, which would let a second
  // instance share the port silently.
  http_->set_socket_options([](socket_t sock) {
    const int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
  });
  install_http_routes();
  if (config_.http_port == 0) {
    const int port = http_->bind_to_any_port(config_.host);
    if (port <= 0) throw net::NetError("cannot bind HTTP port");
    http_port_ = static_cast<std::uint16_t>(port);
  } else {
    if (!http_->bind_to_port(config_.host, config_.http_port)) {
      throw net::NetError("cannot bind HTTP port " + std::to_string(config_.http_port) +
                          " (in use?)");
    }
    http_port_ = config_.http_port;
  }
  sensor_port_ = sensor_listener_.port;
  ws_port_ = stream_listener_.port;

  started_ = true;
  worker_ = std::thread([this] { worker_loop(); });
  ticker_ = std::thread([this] { ticker_loop(); });
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  sensor_accept_thread_ = std::thread([this] { sensor_accept_loop(); });
  stream_accept_thread_ = std::thread([this] { stream_accept_loop(); });
  http_->wait_until_ready();
}

void Service::stop() {
  if (!started_ || stopped_) return;
  stopped_ = true;

  sensor_listener_.socket.shutdown();
  stream_listener_.socket.shutdown();
  if (sensor_accept_thread_.joinable()) sensor_accept_thread_.join();
  if (stream_accept_thread_.joinable()) stream_accept_thread_.join();
  http_->stop();
  if (http_thread_.joinable()) http_thread_.join();

  {
    std::lock_guard lock(connections_mutex_);
    for (auto& c : connections_) c->socket.shutdown();
  }
  for (auto& c : connections_) {
    if (c->thread.joinable()) c->thread.join();
  }
  connections_.clear();

  {
    std::lock_guard lock(ticker_mutex_);
    ticker_stopping_ = true;
  }
  ticker_cv_.notify_all();
  if (ticker_.joinable()) ticker_.join();

  {
    std::lock_guard lock(queue_mutex_);
    worker_stopping_ = true;
  }
  queue_cv_.notify_all();
  if (worker_.joinable()) worker_.join();

  hub_.stop();
  if (store_) store_->flush();
  sensor_listener_.socket.close();
  stream_listener_.socket.close();
}

ServerStatus Service::status() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

void Service::post(std::function<void()> task) {
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(std::move(task));
  }
  queue_cv_.notify_one();
}

template <typename Fn>
auto Service::run_on_worker(Fn&& fn) -> std::invoke_result_t<Fn, ControlSession&> {
  using R = std::invoke_result_t<Fn, ControlSession&>;
  if (!started_ || stopped_) {
    // No worker thread: the caller is the only user of the session.
    return fn(*session_);
  }
  auto promise = std::make_shared<std::promise<R>>();
  std::future<R> result = promise->get_future();
  post([this, promise, fn = std::forward<Fn>(fn)]() mutable {
    try {
      promise->set_value(fn(*session_));
    } catch (...) {
      promise->set_exception(std::current_exception());
    }
  });
  return result.get();
}

void Service::publish(const Outcome& outcome) {
  if (store_) store_->append(outcome.events);
  if (outcome.events.empty() && !outcome.broadcast) return;
  {
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = session_->status();
  }
  if (outcome.broadcast) hub_.broadcast(encode_status(*outcome.broadcast));
}

Outcome Service::submit_reading(const SensorReading& reading) {
  return run_on_worker([this, reading](ControlSession& s) {
    Outcome out = s.handle_reading(reading, now_ms());
    publish(out);
    return out;
  });
}

Outcome Service::submit_override(PumpDuty duty, const std::string& source) {
  return run_on_worker([this, duty, source](ControlSession& s) {
    Outcome out = s.handle_override(duty, source, now_ms());
    publish(out);
    return out;
  });
}

Outcome Service::submit_mode(const control::ControllerMode& mode, const std::string& source) {
  return run_on_worker([this, mode, source](ControlSession& s) {
    Outcome out = s.handle_mode(mode, source, now_ms());
    publish(out);
    return out;
  });
}

std::string Service::events_ndjson(std::uint64_t from_seq) {
  return run_on_worker([from_seq](ControlSession& s) { return to_ndjson(s.events_from(from_seq)); });
}

void Service::worker_loop() {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock lock(queue_mutex_);
      queue_cv_.wait(lock, [this] { return worker_stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      task = std::move(queue_.front());
      queue_.pop_front();
    }
    task();
  }
}

void Service::ticker_loop() {
  std::unique_lock lock(ticker_mutex_);
  while (!ticker_cv_.wait_for(lock, config_.tick_interval, [this] { return ticker_stopping_; })) {
    post([this] { publish(session_->tick(now_ms())); });
  }
}

void Service::sensor_accept_loop() {
  while (auto socket = net::accept_connection(sensor_listener_.socket)) {
    std::lock_guard lock(connections_mutex_);
    for (auto it = connections_.begin(); it != connections_.end();) {
      if ((*it)->done) {
        (*it)->thread.join();
        it = connections_.erase(it);
      } else {
        ++it;
      }
    }
    auto conn = std::make_unique<Connection>();
    conn->socket = std::move(*socket);
    Connection* c = conn.get();
    c->thread = std::thread([this, c] {
      serve_sensor_connection(c->socket);
      c->socket.shutdown();
      std::lock_guard inner(connections_mutex_);
      c->done = true;
    });
    connections_.push_back(std::move(conn));
  }
}

void Service::serve_sensor_connection(const net::Socket& socket) {
  net::LineReader reader(socket, kMaxLineBytes);
  for (;;) {
    auto next = reader.next();
    if (next.status == net::LineReader::Status::Closed) return;
    std::string reply = next.status == net::LineReader::Status::TooLong
                            ? error_line("malformed_frame", "line exceeds maximum length")
                            : handle_line(next.line);
    if (next.status == net::LineReader::Status::Line &&
        next.line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    reply += '\n';
    try {
      socket.send_all(reply);
    } catch (const net::NetError&) {
      return;
    }
  }
}

std::string Service::handle_line(const std::string& line) {
  Message message;
  try {
    message = decode_message(line);
  } catch (const DecodeError& e) {
    return error_line(std::string(to_string(e.kind())), e.what());
  }
  Outcome out;
  if (const auto* m = std::get_if<ReadingMessage>(&message)) {
    out = submit_reading(m->reading);
    if (!out.accepted()) return error_line("invalid_reading", *out.rejection);
  } else if (const auto* m = std::get_if<OverrideMessage>(&message)) {
    out = submit_override(m->duty, m->source);
  } else if (const auto* m = std::get_if<ModeMessage>(&message)) {
    out = submit_mode(m->mode, "sensor-link");
    if (!out.accepted()) return error_line("rejected", *out.rejection);
  } else {
    return error_line("unsupported_message", "only reading, override and mode are accepted");
  }
  return encode_status(out.broadcast ? *out.broadcast : status());
}

void Service::stream_accept_loop() {
  while (auto socket = net::accept_connection(stream_listener_.socket)) {
    std::string leftover;
    const auto head = ws::read_request_head(*socket, leftover);
    if (!head || head->method != "GET" || head->path != "/stream" || !head->upgrade_websocket ||
        head->websocket_key.empty()) {
      try {
        socket->send_all(
            "HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
      } catch (const net::NetError&) {
      }
      continue;
    }
    try {
      socket->send_all(
          "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
          "Sec-WebSocket-Accept: " +
          ws::accept_key(head->websocket_key) + "\r\n\r\n");
    } catch (const net::NetError&) {
      continue;
    }
    hub_.add(std::move(*socket), std::move(leftover), encode_status(status()));
  }
}

void Service::install_http_routes() {
  using httplib::Request;
  using httplib::Response;
  using nlohmann::json;

  http_->set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  http_->Options(R"(/.*)", [](const Request&, Response& res) { res.status = 204; });

  http_->Get("/status", [this](const Request&, Response& res) {
    res.set_content(encode_status(status()), kJson);
  });

  http_->Get("/events", [this](const Request& req, Response& res) {
    std::uint64_t from = 1;
    if (req.has_param("from")) {
      try {
        std::size_t used = 0;
        const std::string raw = req.get_param_value("from");
        from = std::stoull(raw, &used);
        if (used != raw.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        res.status = 400;
        res.set_content(error_line("schema_violation", "from must be a non-negative integer"), kJson);
        return;
      }
    }
    res.set_content(events_ndjson(from), "application/x-ndjson");
  });

  http_->Post("/override", [this](const Request& req, Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      res.status = 400;
      res.set_content(error_line("malformed_frame", "body is not valid JSON"), kJson);
      return;
    }
    const auto duty_it = body.is_object() ? body.find("duty") : body.end();
    const auto duty = (body.is_object() && duty_it != body.end() && duty_it->is_string())
                          ? parse_duty(duty_it->get<std::string>())
                          : std::nullopt;
    if (!duty) {
      res.status = 400;
      res.set_content(error_line("schema_violation", R"(expected {"duty":"full"|"half"|"off"})"),
                      kJson);
      return;
    }
    std::string source = "http";
    if (const auto s = body.find("source"); s != body.end() && s->is_string()) {
      source = s->get<std::string>();
    }
    const Outcome out = submit_override(*duty, source);
    res.set_content(encode_status(*out.broadcast), kJson);
  });

  http_->Post("/mode", [this](const Request& req, Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      res.status = 400;
      res.set_content(error_line("malformed_frame", "body is not a JSON object"), kJson);
      return;
    }
    const auto mode_it = body.find("mode");
    const std::string name =
        mode_it != body.end() && mode_it->is_string() ? mode_it->get<std::string>() : "";
    control::ControllerMode mode;
    if (name == "auto") {
      mode = control::AutoMode{};
    } else if (name == "rule") {
      mode = control::RuleOnlyMode{};
    } else {
      res.status = 400;
      res.set_content(error_line("schema_violation", R"(expected {"mode":"auto"|"rule"})"), kJson);
      return;
    }
    const Outcome out = submit_mode(mode, "http");
    if (!out.accepted()) {
      res.status = 409;
      res.set_content(error_line("rejected", *out.rejection), kJson);
      return;
    }
    res.set_content(encode_status(*out.broadcast), kJson);
  });
}

}  // namespace irrigation::telemetry
