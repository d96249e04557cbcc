#include "irrigation/controller.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace irrigation::control {

namespace {

std::int64_t to_ms(double seconds) { return std::llround(seconds * 1000.0); }

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

std::string_view mode_name(const ControllerMode& mode) noexcept {
  return std::visit(Overloaded{[](const AutoMode&) { return std::string_view("auto"); },
                               [](const RuleOnlyMode&) { return std::string_view("rule"); },
                               [](const ManualMode&) { return std::string_view("manual"); }},
                    mode);
}

void CycleConfig::validate() const {
  for (double v : {period_s, poll_interval_s, min_restart_gap_s}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("cycle timings must be positive and finite");
    }
  }
  if (poll_interval_s > period_s) {
    throw std::invalid_argument("poll interval must not exceed the period");
  }
}

std::int64_t CycleConfig::period_ms() const { return to_ms(period_s); }
std::int64_t CycleConfig::poll_interval_ms() const { return to_ms(poll_interval_s); }
std::int64_t CycleConfig::min_restart_gap_ms() const { return to_ms(min_restart_gap_s); }

std::int64_t on_time_ms(PumpDuty duty, const CycleConfig& config) {
  return std::llround(numeric_fraction(duty) * config.period_s * 1000.0);
}

Decision decide(const SensorReading& reading, const ControllerMode& mode,
                const std::optional<mlp::Model>& model, const CycleConfig& config) {
  const PumpDuty duty = std::visit(
      Overloaded{[&](const AutoMode&) {
                   if (!model) throw ConfigurationError("auto mode requires trained weights");
                   return mlp::predict_duty(model->weights, reading, model->ranges);
                 },
                 [&](const RuleOnlyMode&) { return rules::classify(reading); },
                 [&](const ManualMode& m) {
                   validate(reading);
                   return m.duty;
                 }},
      mode);
  return Decision{duty, on_time_ms(duty, config)};
}

StepResult step(const ControllerState& state, std::int64_t now_ms,
                const std::optional<SensorReading>& reading, const CycleConfig& config,
                const std::optional<mlp::Model>& model) {
  if (state.last_step_ms && now_ms < *state.last_step_ms) {
    throw TimeRegression("controller time went backwards: " + std::to_string(now_ms) + " < " +
                         std::to_string(*state.last_step_ms));
  }
  StepResult out{state, {}, std::nullopt};
  ControllerState& next = out.state;
  const std::int64_t elapsed = state.last_step_ms ? now_ms - *state.last_step_ms : 0;
  next.last_step_ms = now_ms;

  if (auto* pumping = std::get_if<Pumping>(&next.phase)) {
    pumping->remaining_ms -= elapsed;
    if (pumping->remaining_ms <= 0) {
      next.phase = Idle{};
      next.last_pump_stop_ms = now_ms;
      out.commands.push_back(PumpCommand{false, now_ms});
    }
    return out;
  }

  if (!reading) return out;
  if (next.last_pump_stop_ms && now_ms - *next.last_pump_stop_ms < config.min_restart_gap_ms()) {
    return out;
  }

  const Decision d = decide(*reading, next.mode, model, config);
  out.decision = d;
  next.last_decision = d;
  if (d.duty != PumpDuty::Off && d.on_time_ms > 0) {
    next.phase = Pumping{d.on_time_ms, d.duty};
    out.commands.push_back(PumpCommand{true, now_ms});
  }
  return out;
}

StepResult apply_override(const ControllerState& state, PumpDuty duty, std::int64_t now_ms,
                          const CycleConfig& config) {
  StepResult out{state, {}, std::nullopt};
  ControllerState& next = out.state;
  const std::int64_t now = state.last_step_ms ? std::max(now_ms, *state.last_step_ms) : now_ms;
  next.last_step_ms = now;
  next.mode = ManualMode{duty};

  if (next.pumping()) {
    next.phase = Idle{};
    next.last_pump_stop_ms = now;
    out.commands.push_back(PumpCommand{false, now});
  }
  const Decision d{duty, on_time_ms(duty, config)};
  out.decision = d;
  next.last_decision = d;
  if (duty != PumpDuty::Off && d.on_time_ms > 0) {
    next.phase = Pumping{d.on_time_ms, duty};
    out.commands.push_back(PumpCommand{true, now});
  }
  return out;
}

ControllerState set_mode(ControllerState state, const ControllerMode& mode) {
  state.mode = mode;
  return state;
}

}  // namespace irrigation::control
