#pragma once

// Deterministic farm stand-in: first-order soil moisture balance under a
// sinusoidal diurnal climate, Gaussian sensor noise, and a fixed-step loop
// that hosts the controller through a ControlSession.

#include <cstdint>
#include <optional>
#include <vector>

#include "irrigation/controller.hpp"
#include "irrigation/events.hpp"
#include "irrigation/mlp.hpp"
#include "irrigation/random.hpp"
#include "irrigation/rulebase.hpp"

namespace irrigation::sim {

struct NoiseSigma {
  double temperature_c = 0.3;
  double humidity_pct = 1.0;
  double soil_moisture_pct = 0.5;
};

struct PlantParams {
  double k_infiltration = 0.8;  // %/s while the pump runs
  double k_et = 0.05;           // peak evapotranspiration, %/s
  double dt_s = 1.0;
  NoiseSigma noise;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ClimateProfile {
  double temperature_mean_c = 25.0;
  double temperature_amplitude_c = 10.0;
  double humidity_mean_pct = 50.0;
  double humidity_amplitude_pct = 20.0;

  [[nodiscard]] static ClimateProfile constant(double temperature_c, double humidity_pct) {
    return ClimateProfile{temperature_c, 0.0, humidity_pct, 0.0};
  }
};

struct Ambient {
  double temperature_c = 0.0;
  double humidity_pct = 0.0;
};

struct SimState {
  double soil_moisture_true = 30.0;
  double sim_time_s = 0.0;
  ClimateProfile climate;
  Rng rng;
};

inline constexpr double kSecondsPerDay = 86400.0;

[[nodiscard]] SimState initial_state(double soil_moisture_pct, const ClimateProfile& climate,
                                     const PlantParams& params);

/// Temperature peaks a quarter day after t = 0; humidity is in antiphase.
/// Both are clamped to the sensor plausibility window.
[[nodiscard]] Ambient ambient(double sim_time_s, const ClimateProfile& profile);

/// One explicit Euler step of length dt_s using the ambient climate at the
/// current time.
[[nodiscard]] SimState step_soil(SimState state, bool pump_on, const PlantParams& params);

/// True values plus seeded Gaussian noise, clamped into the valid ranges.
/// Advances the state's generator.
[[nodiscard]] SensorReading read_sensors(SimState& state, const PlantParams& params);

struct ClosedLoopConfig {
  control::ControllerMode mode = control::RuleOnlyMode{};
  control::CycleConfig cycle;
  std::optional<mlp::Model> model;
};

struct PlantSample {
  double time_s = 0.0;
  double soil_moisture_pct = 0.0;
  bool pump_on = false;
};

struct SimulationRun {
  std::vector<telemetry::Event> events;
  std::vector<PlantSample> trace;  // one per step plus the final state
  SimState final_state;
};

/// Polls the sensors every poll interval and ticks the controller every step.
/// The pump state after each controller step drives the following soil step.
[[nodiscard]] SimulationRun run_closed_loop(SimState initial, const PlantParams& params,
                                            const ClosedLoopConfig& config, double duration_s);

}  // namespace irrigation::sim
