#include "irrigation/rulebase.hpp"

#include <cmath>
#include <sstream>

namespace irrigation {

namespace {

void check_range(const char* field, double value, double lo, double hi) {
  if (!std::isfinite(value)) {
    throw InvalidReading(std::string(field) + " is not finite");
  }
  if (value < lo || value > hi) {
    std::ostringstream msg;
    msg << field << " = " << value << " outside [" << lo << ", " << hi << "]";
    throw InvalidReading(msg.str());
  }
}

}  // namespace

void validate(const SensorReading& r) {
  check_range("temperature_c", r.temperature_c, SensorLimits::kMinTemperatureC,
              SensorLimits::kMaxTemperatureC);
  check_range("humidity_pct", r.humidity_pct, SensorLimits::kMinPercent,
              SensorLimits::kMaxPercent);
  check_range("soil_moisture_pct", r.soil_moisture_pct, SensorLimits::kMinPercent,
              SensorLimits::kMaxPercent);
}

bool is_valid(const SensorReading& reading) noexcept {
  try {
    validate(reading);
    return true;
  } catch (const InvalidReading&) {
    return false;
  }
}

std::string_view to_string(PumpDuty duty) noexcept {
  switch (duty) {
    case PumpDuty::Full:
      return "full";
    case PumpDuty::Half:
      return "half";
    case PumpDuty::Off:
      break;
  }
  return "off";
}

std::optional<PumpDuty> parse_duty(std::string_view name) noexcept {
  for (PumpDuty d : kAllDuties) {
    if (to_string(d) == name) return d;
  }
  return std::nullopt;
}

namespace rules {

std::string_view to_string(Level level) noexcept {
  switch (level) {
    case Level::Low:
      return "low";
    case Level::Medium:
      return "medium";
    case Level::High:
      break;
  }
  return "high";
}

Bands band(const SensorReading& reading) {
  validate(reading);
  return Bands{level_of(reading.temperature_c, kTemperatureBands),
               level_of(reading.humidity_pct, kHumidityBands),
               level_of(reading.soil_moisture_pct, kSoilMoistureBands)};
}

PumpDuty classify(const SensorReading& reading) { return classify(band(reading)); }

std::array<TableRow, 27> enumerate_table() noexcept {
  std::array<TableRow, 27> rows{};
  std::size_t i = 0;
  for (Level t : kAllLevels) {
    for (Level h : kAllLevels) {
      for (Level m : kAllLevels) {
        const Bands b{t, h, m};
        rows[i++] = TableRow{b, classify(b)};
      }
    }
  }
  return rows;
}

}  // namespace rules
}  // namespace irrigation
