#pragma once

// Append-only event log and the status it folds into. The live service and
// replay share apply_event(), so a status is always a function of a log
// prefix.

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "irrigation/controller.hpp"
#include "irrigation/rulebase.hpp"

namespace irrigation::telemetry {

struct ReadingRecorded {
  SensorReading reading;
  friend bool operator==(const ReadingRecorded&, const ReadingRecorded&) = default;
};

struct DecisionMade {
  PumpDuty duty = PumpDuty::Off;
  std::int64_t on_time_ms = 0;
  control::ControllerMode mode;
  friend bool operator==(const DecisionMade&, const DecisionMade&) = default;
};

struct PumpStateChanged {
  bool on = false;
  PumpDuty duty = PumpDuty::Off;  // Off for a stop
  std::int64_t on_time_ms = 0;    // 0 for a stop
  friend bool operator==(const PumpStateChanged&, const PumpStateChanged&) = default;
};

struct OverrideReceived {
  PumpDuty duty = PumpDuty::Off;
  std::string source;
  friend bool operator==(const OverrideReceived&, const OverrideReceived&) = default;
};

struct ModeChanged {
  control::ControllerMode mode;
  std::string source;
  friend bool operator==(const ModeChanged&, const ModeChanged&) = default;
};

using EventBody =
    std::variant<ReadingRecorded, DecisionMade, PumpStateChanged, OverrideReceived, ModeChanged>;

struct Event {
  std::uint64_t seq = 0;  // first event is 1
  std::int64_t at_ms = 0;
  EventBody body;
  friend bool operator==(const Event&, const Event&) = default;
};

struct ServerStatus {
  std::optional<SensorReading> latest_reading;
  bool pumping = false;
  PumpDuty pump_duty = PumpDuty::Off;
  std::int64_t remaining_ms = 0;  // as of as_of_ms
  std::optional<std::int64_t> pump_deadline_ms;
  std::optional<std::int64_t> last_pump_stop_ms;
  control::ControllerMode mode;
  std::optional<control::Decision> last_decision;
  std::uint64_t event_count = 0;
  std::uint64_t last_seq = 0;
  std::int64_t as_of_ms = 0;

  friend bool operator==(const ServerStatus&, const ServerStatus&) = default;
};

class SequenceGap : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Folds one event into the status. Throws SequenceGap unless
/// event.seq == status.last_seq + 1.
void apply_event(ServerStatus& status, const Event& event);

/// Appends after checking the sequence number continues the log.
void append_event(std::vector<Event>& log, Event event);

/// Status after the whole log; an empty log gives ServerStatus{}.
[[nodiscard]] ServerStatus replay(std::span<const Event> log);

/// Controller state matching a replayed status, for resuming a session.
[[nodiscard]] control::ControllerState restore_controller(const ServerStatus& status);

}  // namespace irrigation::telemetry
