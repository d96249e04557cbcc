#pragma once

// Crisp three-band rule base for the irrigation pump. This is the ground
// truth the MLP is trained against and the decision path of RuleOnly mode.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace irrigation {

struct SensorReading {
  double temperature_c = 0.0;
  double humidity_pct = 0.0;
  double soil_moisture_pct = 0.0;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const SensorReading&, const SensorReading&) = default;
};

/// Sensor plausibility window. Readings outside it are rejected, not clamped.
struct SensorLimits {
  static constexpr double kMinTemperatureC = -20.0;
  static constexpr double kMaxTemperatureC = 60.0;
  static constexpr double kMinPercent = 0.0;
  static constexpr double kMaxPercent = 100.0;
};

class InvalidReading : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws InvalidReading naming the first offending field.
void validate(const SensorReading& reading);
[[nodiscard]] bool is_valid(const SensorReading& reading) noexcept;

enum class PumpDuty : std::uint8_t { Off, Half, Full };

inline constexpr std::array<PumpDuty, 3> kAllDuties = {PumpDuty::Off, PumpDuty::Half,
                                                      PumpDuty::Full};

[[nodiscard]] constexpr double numeric_fraction(PumpDuty duty) noexcept {
  switch (duty) {
    case PumpDuty::Full:
      return 1.0;
    case PumpDuty::Half:
      return 0.5;
    case PumpDuty::Off:
      break;
  }
  return 0.0;
}

/// Wire names: "off", "half", "full".
[[nodiscard]] std::string_view to_string(PumpDuty duty) noexcept;
[[nodiscard]] std::optional<PumpDuty> parse_duty(std::string_view name) noexcept;

namespace rules {

enum class Level : std::uint8_t { Low, Medium, High };

inline constexpr std::array<Level, 3> kAllLevels = {Level::Low, Level::Medium, Level::High};

[[nodiscard]] std::string_view to_string(Level level) noexcept;

/// Band edges for one variable. Values equal to an edge fall in Medium.
struct Thresholds {
  double low_below;
  double high_above;
};

inline constexpr Thresholds kTemperatureBands{25.0, 35.0};
inline constexpr Thresholds kHumidityBands{40.0, 70.0};
inline constexpr Thresholds kSoilMoistureBands{10.0, 20.0};

struct Bands {
  Level temperature = Level::Low;
  Level humidity = Level::Low;
  Level soil_moisture = Level::Low;

  friend bool operator==(const Bands&, const Bands&) = default;
};

[[nodiscard]] constexpr Level level_of(double value, Thresholds t) noexcept {
  if (value < t.low_below) return Level::Low;
  if (value > t.high_above) return Level::High;
  return Level::Medium;
}

/// Validates, then maps each reading component to its band.
[[nodiscard]] Bands band(const SensorReading& reading);

/// Only three band combinations switch the pump on; everything else is Off.
[[nodiscard]] constexpr PumpDuty classify(const Bands& b) noexcept {
  using enum Level;
  if (b.temperature == Low && b.humidity == Low && b.soil_moisture == Low) return PumpDuty::Full;
  if (b.temperature == Low && b.humidity == Low && b.soil_moisture == Medium)
    return PumpDuty::Half;
  if (b.temperature == Medium && b.humidity == Medium && b.soil_moisture == Medium)
    return PumpDuty::Half;
  return PumpDuty::Off;
}

[[nodiscard]] PumpDuty classify(const SensorReading& reading);

struct TableRow {
  Bands bands;
  PumpDuty duty;
};

/// All 27 band combinations, temperature-major in Low, Medium, High order.
[[nodiscard]] std::array<TableRow, 27> enumerate_table() noexcept;

}  // namespace rules
}  // namespace irrigation
