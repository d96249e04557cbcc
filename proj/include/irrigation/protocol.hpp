#pragma once

// Newline-delimited JSON messages, version 1. One object per line; "type"
// selects the message, "v" (optional on input) must be 1.
//
//   reading   {"type":"reading","t_c":20.0,"h_pct":30.0,"m_pct":5.0,"ts_ms":1700000000000}
//   override  {"type":"override","duty":"full","source":"dashboard"}   source optional
//   mode      {"type":"mode","mode":"auto"|"rule"}
//   status    {"type":"status",...}  server snapshot
//   event     {"type":"event","seq":N,"at_ms":T,"kind":...}  log entry
//   error     {"type":"error","kind":"malformed_frame","message":"..."}

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

#include "irrigation/events.hpp"

namespace irrigation::telemetry {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxLineBytes = 64 * 1024;

struct ReadingMessage {
  SensorReading reading;
  friend bool operator==(const ReadingMessage&, const ReadingMessage&) = default;
};

struct OverrideMessage {
  PumpDuty duty = PumpDuty::Off;
  std::string source = "remote";
  friend bool operator==(const OverrideMessage&, const OverrideMessage&) = default;
};

struct ModeMessage {
  control::ControllerMode mode;  // Auto or RuleOnly
  friend bool operator==(const ModeMessage&, const ModeMessage&) = default;
};

struct StatusMessage {
  ServerStatus status;
  friend bool operator==(const StatusMessage&, const StatusMessage&) = default;
};

struct EventMessage {
  Event event;
  friend bool operator==(const EventMessage&, const EventMessage&) = default;
};

struct ErrorMessage {
  std::string kind;
  std::string message;
  friend bool operator==(const ErrorMessage&, const ErrorMessage&) = default;
};

using Message = std::variant<ReadingMessage, OverrideMessage, ModeMessage, StatusMessage,
                             EventMessage, ErrorMessage>;

enum class DecodeErrorKind { MalformedFrame, UnknownType, SchemaViolation };

/// "malformed_frame", "unknown_type", "schema_violation".
[[nodiscard]] std::string_view to_string(DecodeErrorKind kind) noexcept;

class DecodeError : public std::runtime_error {
 public:
  DecodeError(DecodeErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] DecodeErrorKind kind() const noexcept { return kind_; }

 private:
  DecodeErrorKind kind_;
};

/// Single line of JSON without the trailing newline.
[[nodiscard]] std::string encode_message(const Message& message);

/// Accepts a line with or without a trailing "\n" / "\r\n". Throws DecodeError.
[[nodiscard]] Message decode_message(std::string_view line);

[[nodiscard]] std::string encode_event(const Event& event);
[[nodiscard]] Event decode_event(std::string_view line);
[[nodiscard]] std::string encode_status(const ServerStatus& status);

/// One encoded event per line, each terminated by "\n".
[[nodiscard]] std::string to_ndjson(std::span<const Event> events);

/// Parses an NDJSON event log; blank lines are skipped. Throws DecodeError on
/// a bad line and SequenceGap if the sequence numbers do not run 1, 2, 3, ...
[[nodiscard]] std::vector<Event> parse_ndjson(std::string_view text);

}  // namespace irrigation::telemetry
