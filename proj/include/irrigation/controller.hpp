#pragma once

// Sense -> decide -> pump -> idle cycle as a pure transition function. The
// host (simulator or telemetry service) owns the state, feeds it time and
// readings, and executes the emitted pump commands.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

#include "irrigation/mlp.hpp"
#include "irrigation/rulebase.hpp"

namespace irrigation::control {

struct AutoMode {
  friend bool operator==(const AutoMode&, const AutoMode&) = default;
};
struct RuleOnlyMode {
  friend bool operator==(const RuleOnlyMode&, const RuleOnlyMode&) = default;
};
struct ManualMode {
  PumpDuty duty = PumpDuty::Off;
  friend bool operator==(const ManualMode&, const ManualMode&) = default;
};

using ControllerMode = std::variant<AutoMode, RuleOnlyMode, ManualMode>;

/// "auto", "rule" or "manual".
[[nodiscard]] std::string_view mode_name(const ControllerMode& mode) noexcept;

struct CycleConfig {
  double period_s = 10.0;
  double poll_interval_s = 2.0;
  double min_restart_gap_s = 5.0;

  /// Throws std::invalid_argument unless all are positive and poll <= period.
  void validate() const;

  [[nodiscard]] std::int64_t period_ms() const;
  [[nodiscard]] std::int64_t poll_interval_ms() const;
  [[nodiscard]] std::int64_t min_restart_gap_ms() const;
};

struct Idle {
  friend bool operator==(const Idle&, const Idle&) = default;
};
struct Pumping {
  std::int64_t remaining_ms = 0;  // > 0
  PumpDuty duty = PumpDuty::Full;
  friend bool operator==(const Pumping&, const Pumping&) = default;
};

using Phase = std::variant<Idle, Pumping>;

struct Decision {
  PumpDuty duty = PumpDuty::Off;
  std::int64_t on_time_ms = 0;
  friend bool operator==(const Decision&, const Decision&) = default;
};

struct ControllerState {
  Phase phase = Idle{};
  ControllerMode mode = AutoMode{};
  std::optional<std::int64_t> last_pump_stop_ms;
  std::optional<Decision> last_decision;
  std::optional<std::int64_t> last_step_ms;

  [[nodiscard]] bool pumping() const noexcept { return std::holds_alternative<Pumping>(phase); }
  [[nodiscard]] std::int64_t remaining_ms() const noexcept {
    const auto* p = std::get_if<Pumping>(&phase);
    return p ? p->remaining_ms : 0;
  }

  friend bool operator==(const ControllerState&, const ControllerState&) = default;
};

struct PumpCommand {
  bool on = false;
  std::int64_t at_ms = 0;
  friend bool operator==(const PumpCommand&, const PumpCommand&) = default;
};

struct StepResult {
  ControllerState state;
  std::vector<PumpCommand> commands;
  std::optional<Decision> decision;  // set when a reading was evaluated
};

class ConfigurationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class TimeRegression : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Duty fraction of the period, rounded to the nearest millisecond.
[[nodiscard]] std::int64_t on_time_ms(PumpDuty duty, const CycleConfig& config);

/// Auto needs a model (ConfigurationError otherwise). Invalid readings throw
/// InvalidReading.
[[nodiscard]] Decision decide(const SensorReading& reading, const ControllerMode& mode,
                              const std::optional<mlp::Model>& model, const CycleConfig& config);

/// Advances the cycle to now_ms. A pumping cycle runs to completion without
/// re-evaluating; an idle controller evaluates a fresh reading only once the
/// restart gap since the last stop has elapsed.
[[nodiscard]] StepResult step(const ControllerState& state, std::int64_t now_ms,
                              const std::optional<SensorReading>& reading, const CycleConfig& config,
                              const std::optional<mlp::Model>& model);

/// Switches to Manual(duty) and makes the pump match immediately, bypassing
/// the restart gap. A running pump is stopped first, then restarted for a
/// non-Off duty.
[[nodiscard]] StepResult apply_override(const ControllerState& state, PumpDuty duty,
                                        std::int64_t now_ms, const CycleConfig& config);

/// Changes mode without touching the pump; the next step() uses it.
[[nodiscard]] ControllerState set_mode(ControllerState state, const ControllerMode& mode);

}  // namespace irrigation::control
