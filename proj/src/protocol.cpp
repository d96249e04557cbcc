#include "irrigation/protocol.hpp"

#include <limits>

#include "json.hpp"

namespace irrigation::telemetry {

namespace {

using ordered_json = nlohmann::ordered_json;
using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

[[noreturn]] void schema(const std::string& what) {
  throw DecodeError(DecodeErrorKind::SchemaViolation, what);
}

// --- field accessors -------------------------------------------------------

const json& require(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) schema(std::string("missing field \"") + key + "\"");
  return *it;
}

double get_number(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_number()) schema(std::string("field \"") + key + "\" must be a number");
  return v.get<double>();
}

std::int64_t as_int64(const json& v, const char* key) {
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()))
      schema(std::string("field \"") + key + "\" out of range");
    return static_cast<std::int64_t>(u);
  }
  if (!v.is_number_integer()) schema(std::string("field \"") + key + "\" must be an integer");
  return v.get<std::int64_t>();
}

std::int64_t get_int(const json& obj, const char* key) { return as_int64(require(obj, key), key); }

std::uint64_t get_uint(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
  schema(std::string("field \"") + key + "\" must be a non-negative integer");
}

bool get_bool(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_boolean()) schema(std::string("field \"") + key + "\" must be a boolean");
  return v.get<bool>();
}

std::string get_string(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_string()) schema(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

PumpDuty duty_from(const json& v, const char* key) {
  if (!v.is_string()) schema(std::string("field \"") + key + "\" must be a duty string");
  const auto duty = parse_duty(v.get<std::string>());
  if (!duty) schema(std::string("field \"") + key + "\" must be one of off, half, full");
  return *duty;
}

PumpDuty get_duty(const json& obj, const char* key) { return duty_from(require(obj, key), key); }

template <typename T, typename Fn>
std::optional<T> get_optional(const json& obj, const char* key, Fn&& read) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return read(*it, key);
}

// --- pieces shared by several messages -----------------------------------

void put_reading(ordered_json& out, const SensorReading& r) {
  out["t_c"] = r.temperature_c;
  out["h_pct"] = r.humidity_pct;
  out["m_pct"] = r.soil_moisture_pct;
  out["ts_ms"] = r.timestamp_ms;
}

SensorReading read_reading(const json& obj) {
  return SensorReading{get_number(obj, "t_c"), get_number(obj, "h_pct"), get_number(obj, "m_pct"),
                       get_int(obj, "ts_ms")};
}

void put_mode(ordered_json& out, const control::ControllerMode& mode) {
  out["mode"] = std::string(control::mode_name(mode));
  if (const auto* m = std::get_if<control::ManualMode>(&mode)) {
    out["manual_duty"] = std::string(to_string(m->duty));
  }
}

control::ControllerMode read_mode(const json& obj, bool allow_manual) {
  const std::string name = get_string(obj, "mode");
  if (name == "auto") return control::AutoMode{};
  if (name == "rule") return control::RuleOnlyMode{};
  if (name == "manual" && allow_manual) return control::ManualMode{get_duty(obj, "manual_duty")};
  schema("unsupported mode \"" + name + "\"");
}

ordered_json status_json(const ServerStatus& s) {
  ordered_json out;
  out["v"] = kProtocolVersion;
  out["type"] = "status";
  out["seq"] = s.last_seq;
  out["event_count"] = s.event_count;
  out["as_of_ms"] = s.as_of_ms;
  out["phase"] = s.pumping ? "pumping" : "idle";
  out["pump_duty"] = std::string(to_string(s.pump_duty));
  out["remaining_ms"] = s.remaining_ms;
  out["pump_deadline_ms"] = s.pump_deadline_ms ? ordered_json(*s.pump_deadline_ms) : ordered_json();
  out["last_pump_stop_ms"] =
      s.last_pump_stop_ms ? ordered_json(*s.last_pump_stop_ms) : ordered_json();
  put_mode(out, s.mode);
  if (s.latest_reading) {
    ordered_json r;
    put_reading(r, *s.latest_reading);
    out["latest_reading"] = std::move(r);
  } else {
    out["latest_reading"] = nullptr;
  }
  if (s.last_decision) {
    out["last_decision"] = {{"duty", std::string(to_string(s.last_decision->duty))},
                            {"on_time_ms", s.last_decision->on_time_ms}};
  } else {
    out["last_decision"] = nullptr;
  }
  return out;
}

ServerStatus read_status(const json& obj) {
  ServerStatus s;
  s.last_seq = get_uint(obj, "seq");
  s.event_count = get_uint(obj, "event_count");
  s.as_of_ms = get_int(obj, "as_of_ms");
  const std::string phase = get_string(obj, "phase");
  if (phase != "idle" && phase != "pumping") schema("field \"phase\" must be idle or pumping");
  s.pumping = phase == "pumping";
  s.pump_duty = get_duty(obj, "pump_duty");
  s.remaining_ms = get_int(obj, "remaining_ms");
  s.pump_deadline_ms = get_optional<std::int64_t>(obj, "pump_deadline_ms", as_int64);
  s.last_pump_stop_ms = get_optional<std::int64_t>(obj, "last_pump_stop_ms", as_int64);
  s.mode = read_mode(obj, true);
  s.latest_reading = get_optional<SensorReading>(obj, "latest_reading", [](const json& v, const char*) {
    if (!v.is_object()) schema("field \"latest_reading\" must be an object");
    return read_reading(v);
  });
  s.last_decision =
      get_optional<control::Decision>(obj, "last_decision", [](const json& v, const char*) {
        if (!v.is_object()) schema("field \"last_decision\" must be an object");
        return control::Decision{get_duty(v, "duty"), get_int(v, "on_time_ms")};
      });
  return s;
}

ordered_json event_json(const Event& e) {
  ordered_json out;
  out["v"] = kProtocolVersion;
  out["type"] = "event";
  out["seq"] = e.seq;
  out["at_ms"] = e.at_ms;
  std::visit(Overloaded{
                 [&](const ReadingRecorded& b) {
                   out["kind"] = "reading";
                   put_reading(out, b.reading);
                 },
                 [&](const DecisionMade& b) {
                   out["kind"] = "decision";
                   out["duty"] = std::string(to_string(b.duty));
                   out["on_time_ms"] = b.on_time_ms;
                   ordered_json mode;
                   put_mode(mode, b.mode);
                   out["decided_by"] = mode["mode"];
                   if (mode.contains("manual_duty")) out["manual_duty"] = mode["manual_duty"];
                 },
                 [&](const PumpStateChanged& b) {
                   out["kind"] = "pump";
                   out["on"] = b.on;
                   out["duty"] = std::string(to_string(b.duty));
                   out["on_time_ms"] = b.on_time_ms;
                 },
                 [&](const OverrideReceived& b) {
                   out["kind"] = "override";
                   out["duty"] = std::string(to_string(b.duty));
                   out["source"] = b.source;
                 },
                 [&](const ModeChanged& b) {
                   out["kind"] = "mode";
                   put_mode(out, b.mode);
                   out["source"] = b.source;
                 },
             },
             e.body);
  return out;
}

Event read_event(const json& obj) {
  Event e;
  e.seq = get_uint(obj, "seq");
  e.at_ms = get_int(obj, "at_ms");
  const std::string kind = get_string(obj, "kind");
  if (kind == "reading") {
    e.body = ReadingRecorded{read_reading(obj)};
  } else if (kind == "decision") {
    const std::string by = get_string(obj, "decided_by");
    control::ControllerMode mode;
    if (by == "auto") {
      mode = control::AutoMode{};
    } else if (by == "rule") {
      mode = control::RuleOnlyMode{};
    } else if (by == "manual") {
      mode = control::ManualMode{get_duty(obj, "manual_duty")};
    } else {
      schema("unsupported decided_by \"" + by + "\"");
    }
    e.body = DecisionMade{get_duty(obj, "duty"), get_int(obj, "on_time_ms"), mode};
  } else if (kind == "pump") {
    e.body = PumpStateChanged{get_bool(obj, "on"), get_duty(obj, "duty"), get_int(obj, "on_time_ms")};
  } else if (kind == "override") {
    e.body = OverrideReceived{get_duty(obj, "duty"), get_string(obj, "source")};
  } else if (kind == "mode") {
    e.body = ModeChanged{read_mode(obj, true), get_string(obj, "source")};
  } else {
    schema("unknown event kind \"" + kind + "\"");
  }
  return e;
}

ordered_json message_json(const Message& message) {
  return std::visit(
      Overloaded{
          [](const ReadingMessage& m) {
            ordered_json out;
            out["v"] = kProtocolVersion;
            out["type"] = "reading";
            put_reading(out, m.reading);
            return out;
          },
          [](const OverrideMessage& m) {
            ordered_json out;
            out["v"] = kProtocolVersion;
            out["type"] = "override";
            out["duty"] = std::string(to_string(m.duty));
            out["source"] = m.source;
            return out;
          },
          [](const ModeMessage& m) {
            ordered_json out;
            out["v"] = kProtocolVersion;
            out["type"] = "mode";
            put_mode(out, m.mode);
            return out;
          },
          [](const StatusMessage& m) { return status_json(m.status); },
          [](const EventMessage& m) { return event_json(m.event); },
          [](const ErrorMessage& m) {
            ordered_json out;
            out["v"] = kProtocolVersion;
            out["type"] = "error";
            out["kind"] = m.kind;
            out["message"] = m.message;
            return out;
          },
      },
      message);
}

std::string dump(const ordered_json& j) {
  return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace

std::string_view to_string(DecodeErrorKind kind) noexcept {
  switch (kind) {
    case DecodeErrorKind::MalformedFrame:
      return "malformed_frame";
    case DecodeErrorKind::UnknownType:
      return "unknown_type";
    case DecodeErrorKind::SchemaViolation:
      break;
  }
  return "schema_violation";
}

std::string encode_message(const Message& message) { return dump(message_json(message)); }

Message decode_message(std::string_view line) {
  if (line.size() > kMaxLineBytes) {
    throw DecodeError(DecodeErrorKind::MalformedFrame, "line exceeds maximum length");
  }
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

  const json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw DecodeError(DecodeErrorKind::MalformedFrame, "line is not valid JSON");
  if (!doc.is_object()) schema("message must be a JSON object");

  if (const auto v = doc.find("v"); v != doc.end()) {
    if (!v->is_number_integer() || v->get<std::int64_t>() != kProtocolVersion) {
      schema("unsupported protocol version");
    }
  }
  const auto type_it = doc.find("type");
  if (type_it == doc.end()) schema("missing field \"type\"");
  if (!type_it->is_string()) schema("field \"type\" must be a string");
  const std::string type = type_it->get<std::string>();

  if (type == "reading") return ReadingMessage{read_reading(doc)};
  if (type == "override") {
    OverrideMessage m{get_duty(doc, "duty")};
    if (const auto s = get_optional<std::string>(doc, "source", [](const json& v, const char*) {
          if (!v.is_string()) schema("field \"source\" must be a string");
          return v.get<std::string>();
        })) {
      m.source = *s;
    }
    return m;
  }
  if (type == "mode") return ModeMessage{read_mode(doc, false)};
  if (type == "status") return StatusMessage{read_status(doc)};
  if (type == "event") return EventMessage{read_event(doc)};
  if (type == "error") return ErrorMessage{get_string(doc, "kind"), get_string(doc, "message")};
  throw DecodeError(DecodeErrorKind::UnknownType, "unknown message type \"" + type + "\"");
}

std::string encode_event(const Event& event) { return dump(event_json(event)); }

Event decode_event(std::string_view line) {
  Message m = decode_message(line);
  if (auto* e = std::get_if<EventMessage>(&m)) return std::move(e->event);
  schema("line is not an event");
}

std::string encode_status(const ServerStatus& status) { return dump(status_json(status)); }

std::string to_ndjson(std::span<const Event> events) {
  std::string out;
  for (const Event& e : events) {
    out += encode_event(e);
    out += '\n';
  }
  return out;
}

std::vector<Event> parse_ndjson(std::string_view text) {
  std::vector<Event> events;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    const std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    append_event(events, decode_event(line));
  }
  return events;
}

}  // namespace irrigation::telemetry
