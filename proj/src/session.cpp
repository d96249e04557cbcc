#include "irrigation/session.hpp"

#include <algorithm>

namespace irrigation::telemetry {

ControlSession::ControlSession(control::CycleConfig config, std::optional<mlp::Model> model)
    : config_(config), model_(std::move(model)) {
  config_.validate();
}

ControlSession::ControlSession(control::ControllerMode mode, control::CycleConfig config,
                               std::optional<mlp::Model> model, std::int64_t start_ms)
    : ControlSession(config, std::move(model)) {
  if (std::holds_alternative<control::AutoMode>(mode) && !model_) {
    throw control::ConfigurationError("auto mode requires trained weights");
  }
  controller_ = control::set_mode(controller_, mode);
  Outcome ignored;
  record(ignored, start_ms, ModeChanged{mode, "startup"});
}

ControlSession ControlSession::resume(std::vector<Event> log, control::CycleConfig config,
                                      std::optional<mlp::Model> model) {
  ControlSession session(config, std::move(model));
  session.status_ = replay(log);
  session.log_ = std::move(log);
  session.controller_ = restore_controller(session.status_);
  if (std::holds_alternative<control::AutoMode>(session.controller_.mode) && !session.model_) {
    throw control::ConfigurationError("log resumes in auto mode but no weights were given");
  }
  return session;
}

std::int64_t ControlSession::clamp_time(std::int64_t now_ms) const noexcept {
  const std::int64_t floor = std::max(controller_.last_step_ms.value_or(now_ms), status_.as_of_ms);
  return std::max(now_ms, floor);
}

void ControlSession::record(Outcome& out, std::int64_t at_ms, EventBody body) {
  Event e{status_.last_seq + 1, at_ms, std::move(body)};
  apply_event(status_, e);
  append_event(log_, e);
  out.events.push_back(std::move(e));
}

void ControlSession::record_step(Outcome& out, const control::StepResult& result,
                                 std::int64_t at_ms) {
  // Stop precedes the decision that follows it; a start follows its decision.
  for (const control::PumpCommand& c : result.commands) {
    if (!c.on) record(out, c.at_ms, PumpStateChanged{false, PumpDuty::Off, 0});
  }
  if (result.decision) {
    record(out, at_ms,
           DecisionMade{result.decision->duty, result.decision->on_time_ms, result.state.mode});
  }
  for (const control::PumpCommand& c : result.commands) {
    if (c.on) {
      record(out, c.at_ms,
             PumpStateChanged{true, result.state.last_decision->duty, result.state.remaining_ms()});
    }
  }
  controller_ = result.state;
}

Outcome ControlSession::handle_reading(const SensorReading& reading, std::int64_t now_ms) {
  Outcome out;
  try {
    validate(reading);
  } catch (const InvalidReading& e) {
    out.rejection = e.what();
    return out;
  }
  const std::int64_t now = clamp_time(now_ms);
  const control::StepResult result = control::step(controller_, now, reading, config_, model_);
  record(out, now, ReadingRecorded{reading});
  record_step(out, result, now);
  out.broadcast = status_;
  return out;
}

Outcome ControlSession::handle_override(PumpDuty duty, const std::string& source,
                                        std::int64_t now_ms) {
  Outcome out;
  const std::int64_t now = clamp_time(now_ms);
  // Let an expired cycle finish first so its stop is logged at its own step.
  const control::StepResult settled = control::step(controller_, now, std::nullopt, config_, model_);
  record_step(out, settled, now);
  record(out, now, OverrideReceived{duty, source});
  record_step(out, control::apply_override(controller_, duty, now, config_), now);
  out.broadcast = status_;
  return out;
}

Outcome ControlSession::handle_mode(const control::ControllerMode& mode, const std::string& source,
                                    std::int64_t now_ms) {
  Outcome out;
  if (std::holds_alternative<control::ManualMode>(mode)) {
    out.rejection = "manual mode is entered through an override";
    return out;
  }
  if (std::holds_alternative<control::AutoMode>(mode) && !model_) {
    out.rejection = "auto mode requires trained weights";
    return out;
  }
  const std::int64_t now = clamp_time(now_ms);
  record(out, now, ModeChanged{mode, source});
  controller_ = control::set_mode(controller_, mode);
  out.broadcast = status_;
  return out;
}

Outcome ControlSession::tick(std::int64_t now_ms) {
  Outcome out;
  const std::int64_t now = clamp_time(now_ms);
  record_step(out, control::step(controller_, now, std::nullopt, config_, model_), now);
  if (!out.events.empty()) out.broadcast = status_;
  return out;
}

std::span<const Event> ControlSession::events_from(std::uint64_t from_seq) const noexcept {
  const auto it = std::lower_bound(log_.begin(), log_.end(), from_seq,
                                   [](const Event& e, std::uint64_t s) { return e.seq < s; });
  return {it, log_.end()};
}

}  // namespace irrigation::telemetry
