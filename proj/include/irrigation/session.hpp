#pragma once

// Hosted controller plus its event log. Every mutation goes through one of the
// handle_* methods, appends events with consecutive sequence numbers and folds
// them into the status with apply_event(). Not thread-safe: the network
// service serializes access through its command queue.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "irrigation/controller.hpp"
#include "irrigation/events.hpp"
#include "irrigation/mlp.hpp"

namespace irrigation::telemetry {

struct Outcome {
  std::vector<Event> events;
  std::optional<ServerStatus> broadcast;
  std::optional<std::string> rejection;

  [[nodiscard]] bool accepted() const noexcept { return !rejection.has_value(); }
};

class ControlSession {
 public:
  /// Fresh session. Records the starting mode as event 1. Throws
  /// control::ConfigurationError for Auto mode without a model.
  ControlSession(control::ControllerMode mode, control::CycleConfig config,
                 std::optional<mlp::Model> model, std::int64_t start_ms);

  /// Continues an existing log: status and controller are rebuilt by replay.
  static ControlSession resume(std::vector<Event> log, control::CycleConfig config,
                               std::optional<mlp::Model> model);

  /// Invalid readings are rejected with no events and no broadcast.
  Outcome handle_reading(const SensorReading& reading, std::int64_t now_ms);
  Outcome handle_override(PumpDuty duty, const std::string& source, std::int64_t now_ms);
  /// Switch back to an automatic mode (Auto or RuleOnly).
  Outcome handle_mode(const control::ControllerMode& mode, const std::string& source,
                      std::int64_t now_ms);
  /// Advances time without a reading; broadcasts only if something happened.
  Outcome tick(std::int64_t now_ms);

  [[nodiscard]] const ServerStatus& status() const noexcept { return status_; }
  [[nodiscard]] const control::ControllerState& controller() const noexcept { return controller_; }
  [[nodiscard]] const std::vector<Event>& events() const noexcept { return log_; }
  /// Events with seq >= from_seq.
  [[nodiscard]] std::span<const Event> events_from(std::uint64_t from_seq) const noexcept;
  [[nodiscard]] const control::CycleConfig& config() const noexcept { return config_; }

 private:
  ControlSession(control::CycleConfig config, std::optional<mlp::Model> model);

  std::int64_t clamp_time(std::int64_t now_ms) const noexcept;
  void record(Outcome& out, std::int64_t at_ms, EventBody body);
  void record_step(Outcome& out, const control::StepResult& result, std::int64_t at_ms);

  control::CycleConfig config_;
  std::optional<mlp::Model> model_;
  control::ControllerState controller_;
  std::vector<Event> log_;
  ServerStatus status_;
};

}  // namespace irrigation::telemetry
