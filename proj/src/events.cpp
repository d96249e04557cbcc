#include "irrigation/events.hpp"

#include <algorithm>

namespace irrigation::telemetry {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

void apply_event(ServerStatus& s, const Event& event) {
  if (event.seq != s.last_seq + 1) {
    throw SequenceGap("event sequence gap: expected " + std::to_string(s.last_seq + 1) + ", got " +
                      std::to_string(event.seq));
  }
  s.last_seq = event.seq;
  ++s.event_count;
  s.as_of_ms = event.at_ms;
  if (s.pumping && s.pump_deadline_ms) {
    s.remaining_ms = std::max<std::int64_t>(0, *s.pump_deadline_ms - event.at_ms);
  }

  std::visit(Overloaded{
                 [&](const ReadingRecorded& e) { s.latest_reading = e.reading; },
                 [&](const DecisionMade& e) {
                   s.last_decision = control::Decision{e.duty, e.on_time_ms};
                 },
                 [&](const PumpStateChanged& e) {
                   s.pumping = e.on;
                   if (e.on) {
                     s.pump_duty = e.duty;
                     s.remaining_ms = e.on_time_ms;
                     s.pump_deadline_ms = event.at_ms + e.on_time_ms;
                   } else {
                     s.pump_duty = PumpDuty::Off;
                     s.remaining_ms = 0;
                     s.pump_deadline_ms.reset();
                     s.last_pump_stop_ms = event.at_ms;
                   }
                 },
                 [&](const OverrideReceived& e) { s.mode = control::ManualMode{e.duty}; },
                 [&](const ModeChanged& e) { s.mode = e.mode; },
             },
             event.body);
}

void append_event(std::vector<Event>& log, Event event) {
  const std::uint64_t expected = log.empty() ? 1 : log.back().seq + 1;
  if (event.seq != expected) {
    throw SequenceGap("append out of order: expected seq " + std::to_string(expected) + ", got " +
                      std::to_string(event.seq));
  }
  log.push_back(std::move(event));
}

ServerStatus replay(std::span<const Event> log) {
  ServerStatus status;
  for (const Event& e : log) apply_event(status, e);
  return status;
}

control::ControllerState restore_controller(const ServerStatus& status) {
  control::ControllerState state;
  state.mode = status.mode;
  state.last_decision = status.last_decision;
  state.last_pump_stop_ms = status.last_pump_stop_ms;
  if (status.event_count > 0) state.last_step_ms = status.as_of_ms;
  if (status.pumping && status.remaining_ms > 0) {
    state.phase = control::Pumping{status.remaining_ms, status.pump_duty};
  } else if (status.pumping) {
    // Deadline already reached when the log ended; the next step stops it.
    state.phase = control::Pumping{1, status.pump_duty};
  }
  return state;
}

}  // namespace irrigation::telemetry
