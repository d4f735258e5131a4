#pragma once

// Shared vocabulary: identifiers, device kinds, readings, commands, alerts
// and the validation error type used by every loader and patch routine.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fieldsim {

using SimMinute = std::int64_t;

/// RFID tag identifying a device; unique within a deployment.
struct NodeId {
  std::uint64_t tag = 0;

  friend constexpr auto operator<=>(NodeId, NodeId) = default;
};

inline std::string to_string(NodeId id) { return std::to_string(id.tag); }

enum class SensorKind { Temperature, WaterLevel, Moisture, Humidity, Motion, Ultrasonic, AirQuality };
enum class ActuatorKind { Sprinkler, Motor, Buzzer, Led };

inline constexpr SensorKind kAllSensorKinds[] = {
    SensorKind::Temperature, SensorKind::WaterLevel, SensorKind::Moisture, SensorKind::Humidity,
    SensorKind::Motion,      SensorKind::Ultrasonic, SensorKind::AirQuality};
inline constexpr ActuatorKind kAllActuatorKinds[] = {ActuatorKind::Sprinkler, ActuatorKind::Motor,
                                                     ActuatorKind::Buzzer, ActuatorKind::Led};

constexpr std::string_view name(SensorKind k) {
  switch (k) {
    case SensorKind::Temperature: return "temperature";
    case SensorKind::WaterLevel: return "water_level";
    case SensorKind::Moisture: return "moisture";
    case SensorKind::Humidity: return "humidity";
    case SensorKind::Motion: return "motion";
    case SensorKind::Ultrasonic: return "ultrasonic";
    case SensorKind::AirQuality: return "air_quality";
  }
  return "?";
}

constexpr std::string_view unit(SensorKind k) {
  switch (k) {
    case SensorKind::Temperature: return "C";
    case SensorKind::WaterLevel: return "cm";
    case SensorKind::Moisture: return "fraction";
    case SensorKind::Humidity: return "pct";
    case SensorKind::Motion:
    case SensorKind::Ultrasonic: return "bool";
    case SensorKind::AirQuality: return "ppm";
  }
  return "?";
}

constexpr std::string_view name(ActuatorKind k) {
  switch (k) {
    case ActuatorKind::Sprinkler: return "sprinkler";
    case ActuatorKind::Motor: return "motor";
    case ActuatorKind::Buzzer: return "buzzer";
    case ActuatorKind::Led: return "led";
  }
  return "?";
}

inline std::optional<SensorKind> parse_sensor_kind(std::string_view s) {
  for (auto k : kAllSensorKinds)
    if (name(k) == s) return k;
  return std::nullopt;
}

inline std::optional<ActuatorKind> parse_actuator_kind(std::string_view s) {
  for (auto k : kAllActuatorKinds)
    if (name(k) == s) return k;
  return std::nullopt;
}

constexpr bool is_boolean(SensorKind k) { return k == SensorKind::Motion || k == SensorKind::Ultrasonic; }

/// Readings and logged values carry four decimals; this is the resolution of
/// the exported telemetry, so quantizing at the source keeps replay exact.
inline double quantize(double v) { return std::round(v * 1e4) / 1e4; }

/// Shortest round-trip rendering ("5", "0.5", "37.48").
inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

inline std::string format_fixed4(double v) {
  if (v == 0.0) v = 0.0;  // no "-0.0000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s(buf);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

struct SensorReading {
  NodeId node;
  SensorKind kind = SensorKind::Temperature;
  double value = 0;
  int zone = 0;
  SimMinute timestamp = 0;

  friend bool operator==(const SensorReading&, const SensorReading&) = default;
};

enum class Action { Off, On };

struct ActuatorCommand {
  NodeId target;
  Action action = Action::Off;
  std::string cause;
  SimMinute timestamp = 0;
  int zone = 0;
  NodeId source;  // sensor whose reading triggered the rule; tag 0 for manual

  friend bool operator==(const ActuatorCommand&, const ActuatorCommand&) = default;
};

enum class AlertKind { Fire, LowHumidity, StaleReading, SafetyConflict, AirQuality };

inline constexpr AlertKind kAllAlertKinds[] = {AlertKind::Fire, AlertKind::LowHumidity, AlertKind::StaleReading,
                                               AlertKind::SafetyConflict, AlertKind::AirQuality};

constexpr std::string_view name(AlertKind k) {
  switch (k) {
    case AlertKind::Fire: return "fire";
    case AlertKind::LowHumidity: return "low_humidity";
    case AlertKind::StaleReading: return "stale_reading";
    case AlertKind::SafetyConflict: return "safety_conflict";
    case AlertKind::AirQuality: return "air_quality";
  }
  return "?";
}

/// Stable operator-facing strings; golden logs depend on these.
constexpr std::string_view message(AlertKind k) {
  switch (k) {
    case AlertKind::Fire: return "FIRE !EVACUATE!!";
    case AlertKind::LowHumidity: return "LOW HUMIDITY";
    case AlertKind::StaleReading: return "STALE READING";
    case AlertKind::SafetyConflict: return "SAFETY CONFLICT";
    case AlertKind::AirQuality: return "POOR AIR QUALITY";
  }
  return "?";
}

inline std::optional<AlertKind> alert_kind_from_message(std::string_view msg) {
  for (auto k : kAllAlertKinds)
    if (message(k) == msg) return k;
  return std::nullopt;
}

struct Alert {
  AlertKind kind = AlertKind::Fire;
  NodeId source;
  int zone = 0;
  double value = 0;
  SimMinute timestamp = 0;

  friend bool operator==(const Alert&, const Alert&) = default;
};

/// One violated constraint, named by the offending field path.
struct ValidationError {
  std::string field;
  std::string message;

  std::string to_string() const { return field + ": " + message; }
  friend bool operator==(const ValidationError&, const ValidationError&) = default;
};

using ValidationErrors = std::vector<ValidationError>;

/// Thrown where a single call must either succeed or report named errors.
class ValidationFailure : public std::runtime_error {
 public:
  explicit ValidationFailure(ValidationErrors errors)
      : std::runtime_error(join(errors)), errors_(std::move(errors)) {}

  const ValidationErrors& errors() const { return errors_; }

 private:
  static std::string join(const ValidationErrors& errors) {
    std::string out;
    for (const auto& e : errors) {
      if (!out.empty()) out += "; ";
      out += e.to_string();
    }
    return out;
  }

  ValidationErrors errors_;
};

class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fieldsim

template <>
struct std::hash<fieldsim::NodeId> {
  std::size_t operator()(fieldsim::NodeId id) const noexcept { return std::hash<std::uint64_t>{}(id.tag); }
};
