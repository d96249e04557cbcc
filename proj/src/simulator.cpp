#include "irrigation/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "irrigation/session.hpp"

namespace irrigation::sim {

namespace {

std::int64_t to_ms(double seconds) { return std::llround(seconds * 1000.0); }

}  // namespace

void PlantParams::validate() const {
  if (!(k_infiltration > 0.0)) throw std::invalid_argument("k_infiltration must be positive");
  if (!(k_et >= 0.0)) throw std::invalid_argument("k_et must be non-negative");
  if (!(dt_s > 0.0) || !std::isfinite(dt_s)) throw std::invalid_argument("dt_s must be positive");
  for (double s : {noise.temperature_c, noise.humidity_pct, noise.soil_moisture_pct}) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("noise sigma must be >= 0");
  }
}

SimState initial_state(double soil_moisture_pct, const ClimateProfile& climate,
                       const PlantParams& params) {
  return SimState{std::clamp(soil_moisture_pct, 0.0, 100.0), 0.0, climate, Rng(params.seed)};
}

Ambient ambient(double sim_time_s, const ClimateProfile& p) {
  const double phase = std::sin(2.0 * std::numbers::pi * sim_time_s / kSecondsPerDay);
  return Ambient{
      std::clamp(p.temperature_mean_c + p.temperature_amplitude_c * phase,
                 SensorLimits::kMinTemperatureC, SensorLimits::kMaxTemperatureC),
      std::clamp(p.humidity_mean_pct - p.humidity_amplitude_pct * phase, SensorLimits::kMinPercent,
                 SensorLimits::kMaxPercent)};
}

SimState step_soil(SimState state, bool pump_on, const PlantParams& params) {
  const Ambient air = ambient(state.sim_time_s, state.climate);
  // The temperature factor saturates at 50 degC so a step never removes more
  // than k_et * dt.
  const double heat = std::clamp(air.temperature_c / 50.0, 0.0, 1.0);
  const double dryness = 1.0 - air.humidity_pct / 100.0;
  const double inflow = pump_on ? params.k_infiltration : 0.0;
  const double rate = inflow - params.k_et * heat * dryness;
  state.soil_moisture_true = std::clamp(state.soil_moisture_true + rate * params.dt_s, 0.0, 100.0);
  state.sim_time_s += params.dt_s;
  return state;
}

SensorReading read_sensors(SimState& state, const PlantParams& params) {
  const Ambient air = ambient(state.sim_time_s, state.climate);
  // Fixed draw order: temperature, humidity, soil moisture.
  const double t = state.rng.normal(air.temperature_c, params.noise.temperature_c);
  const double h = state.rng.normal(air.humidity_pct, params.noise.humidity_pct);
  const double m = state.rng.normal(state.soil_moisture_true, params.noise.soil_moisture_pct);
  return SensorReading{
      std::clamp(t, SensorLimits::kMinTemperatureC, SensorLimits::kMaxTemperatureC),
      std::clamp(h, SensorLimits::kMinPercent, SensorLimits::kMaxPercent),
      std::clamp(m, SensorLimits::kMinPercent, SensorLimits::kMaxPercent), to_ms(state.sim_time_s)};
}

SimulationRun run_closed_loop(SimState initial, const PlantParams& params,
                              const ClosedLoopConfig& config, double duration_s) {
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw std::invalid_argument("simulation duration must be positive");
  }
  params.validate();
  config.cycle.validate();

  SimState state = std::move(initial);
  telemetry::ControlSession session(config.mode, config.cycle, config.model,
                                    to_ms(state.sim_time_s));
  const std::int64_t poll_ms = config.cycle.poll_interval_ms();
  std::int64_t next_poll_ms = to_ms(state.sim_time_s);
  const auto steps = static_cast<std::size_t>(std::ceil(duration_s / params.dt_s - 1e-9));

  SimulationRun run;
  run.trace.reserve(steps + 1);
  for (std::size_t n = 0; n < steps; ++n) {
    const std::int64_t now_ms = to_ms(state.sim_time_s);
    if (now_ms >= next_poll_ms) {
      const SensorReading reading = read_sensors(state, params);
      (void)session.handle_reading(reading, now_ms);
      while (next_poll_ms <= now_ms) next_poll_ms += poll_ms;
    } else {
      (void)session.tick(now_ms);
    }
    const bool pump_on = session.controller().pumping();
    run.trace.push_back(PlantSample{state.sim_time_s, state.soil_moisture_true, pump_on});
    state = step_soil(std::move(state), pump_on, params);
  }
  run.trace.push_back(
      PlantSample{state.sim_time_s, state.soil_moisture_true, session.controller().pumping()});
  run.events = session.events();
  run.final_state = std::move(state);
  return run;
}

}  // namespace irrigation::sim
