#pragma once

// Ground truth per field zone: diurnal weather, injected events and the
// physical effect of actuators. Everything here is a pure function over
// value types.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fieldsim/core.hpp"

namespace fieldsim {

struct ZoneState {
  int zone_id = 0;
  double soil_moisture = 0.6;  // fraction
  double water_level = 8.0;    // cm
  double temperature = 25.0;   // C
  double humidity = 70.0;      // percent
  double air_quality = 400.0;  // ppm
  bool intruder_present = false;

  friend bool operator==(const ZoneState&, const ZoneState&) = default;
};

/// Daily range with the defaults: 25..38 C, humidity ~60..95 %, hottest at 14:05.
struct WeatherModel {
  double temp_mean = 31.5;
  double temp_amplitude = 6.5;
  double diurnal_period = 1440;  // minutes
  double peak_minute = 845;      // minute of the period at which temperature peaks
  double humidity_max = 77.5;    // humidity at temp_mean
  double humidity_coupling = 2.7;
  double moisture_decay_rate = 0.02;     // per hour, exponential
  double water_level_decay_rate = 0.03;  // per hour, exponential

  friend bool operator==(const WeatherModel&, const WeatherModel&) = default;
};

inline ValidationErrors validate(const WeatherModel& w, std::string_view path = "weather") {
  ValidationErrors errs;
  auto p = std::string(path);
  if (!(w.temp_amplitude >= 0)) errs.push_back({p + ".temp_amplitude", "must be >= 0"});
  if (!(w.diurnal_period > 0)) errs.push_back({p + ".diurnal_period", "must be > 0"});
  if (!(w.humidity_coupling >= 0)) errs.push_back({p + ".humidity_coupling", "must be >= 0"});
  if (!(w.moisture_decay_rate >= 0)) errs.push_back({p + ".moisture_decay_rate", "must be >= 0"});
  if (!(w.water_level_decay_rate >= 0)) errs.push_back({p + ".water_level_decay_rate", "must be >= 0"});
  return errs;
}

enum class EventKind { Rain, HeatWave, Fire, AnimalIntrusion, SensorFailure };

inline constexpr EventKind kAllEventKinds[] = {EventKind::Rain, EventKind::HeatWave, EventKind::Fire,
                                               EventKind::AnimalIntrusion, EventKind::SensorFailure};

constexpr std::string_view name(EventKind k) {
  switch (k) {
    case EventKind::Rain: return "rain";
    case EventKind::HeatWave: return "heat_wave";
    case EventKind::Fire: return "fire";
    case EventKind::AnimalIntrusion: return "animal_intrusion";
    case EventKind::SensorFailure: return "sensor_failure";
  }
  return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (auto k : kAllEventKinds)
    if (name(k) == s) return k;
  return std::nullopt;
}

struct EnvEvent {
  EventKind kind = EventKind::Rain;
  int zone_id = 0;
  SimMinute start = 0;
  SimMinute duration = 1;
  // Rain: cm/h of water level. HeatWave/Fire: C added. Others: unused.
  double magnitude = 0;
  NodeId target;  // SensorFailure only
  // Fraction of a Fire's offset already put out by sprinklers.
  double suppression = 0;

  SimMinute end() const { return start + duration; }
  bool active_at(SimMinute t) const { return t >= start && t < end(); }

  friend bool operator==(const EnvEvent&, const EnvEvent&) = default;
};

inline double ambient_temperature(const WeatherModel& w, SimMinute t) {
  const double phase = 2.0 * std::numbers::pi * (static_cast<double>(t) - w.peak_minute) / w.diurnal_period;
  return w.temp_mean + w.temp_amplitude * std::cos(phase);
}

/// Highest temperature an event reaches over its window, ignoring suppression.
inline double peak_temperature(const WeatherModel& w, const EnvEvent& e) {
  double peak = -1e300;
  for (SimMinute t = e.start; t < e.end(); ++t) peak = std::max(peak, ambient_temperature(w, t) + e.magnitude);
  return peak;
}

inline ZoneState clamp(ZoneState s) {
  s.soil_moisture = std::clamp(s.soil_moisture, 0.0, 1.0);
  s.humidity = std::clamp(s.humidity, 0.0, 100.0);
  s.water_level = std::max(s.water_level, 0.0);
  s.air_quality = std::max(s.air_quality, 0.0);
  return s;
}

/// Kind-specific offsets of one active event; `dt` scales rate-based effects.
inline ZoneState apply_event(ZoneState s, const EnvEvent& e, SimMinute /*t*/, double dt = 1.0) {
  switch (e.kind) {
    case EventKind::Rain: s.water_level += e.magnitude * dt / 60.0; break;
    case EventKind::HeatWave:
    case EventKind::Fire: s.temperature += e.magnitude * (1.0 - e.suppression); break;
    case EventKind::AnimalIntrusion: s.intruder_present = true; break;
    case EventKind::SensorFailure: break;
  }
  return s;
}

namespace detail {

inline ZoneState derive(ZoneState s, const WeatherModel& w, std::span<const EnvEvent> events, SimMinute t,
                        double dt) {
  s.temperature = ambient_temperature(w, t);
  s.intruder_present = false;
  for (const auto& e : events)
    if (e.zone_id == s.zone_id && e.active_at(t)) s = apply_event(s, e, t, dt);
  s.humidity = w.humidity_max - w.humidity_coupling * (s.temperature - w.temp_mean);
  return clamp(s);
}

}  // namespace detail

/// Zone state at the start of a run: weather and events at `t`, no decay.
inline ZoneState settle_environment(ZoneState s, const WeatherModel& w, std::span<const EnvEvent> events,
                                    SimMinute t) {
  return detail::derive(s, w, events, t, 0.0);
}

/// Forward-Euler step over (t - dt, t].
inline ZoneState step_environment(ZoneState s, const WeatherModel& w, std::span<const EnvEvent> events,
                                  SimMinute t, double dt) {
  s.soil_moisture *= std::exp(-w.moisture_decay_rate * dt / 60.0);
  s.water_level *= std::exp(-w.water_level_decay_rate * dt / 60.0);
  return detail::derive(s, w, events, t, dt);
}

struct ActuationRates {
  double sprinkler_water_rate = 0.2;       // cm/min
  double sprinkler_moisture_rate = 0.005;  // fraction/min
  double pump_moisture_rate = 0.01;        // fraction/min
  double fire_suppression_rate = 0.02;     // fraction of fire offset removed per minute
  int scare_delay = 1;                     // ticks until a buzzed intruder leaves

  friend bool operator==(const ActuationRates&, const ActuationRates&) = default;
};

inline ValidationErrors validate(const ActuationRates& r, std::string_view path = "actuation") {
  ValidationErrors errs;
  auto p = std::string(path);
  if (!(r.sprinkler_water_rate >= 0)) errs.push_back({p + ".sprinkler_water_rate", "must be >= 0"});
  if (!(r.sprinkler_moisture_rate >= 0)) errs.push_back({p + ".sprinkler_moisture_rate", "must be >= 0"});
  if (!(r.pump_moisture_rate >= 0)) errs.push_back({p + ".pump_moisture_rate", "must be >= 0"});
  if (!(r.fire_suppression_rate >= 0)) errs.push_back({p + ".fire_suppression_rate", "must be >= 0"});
  if (r.scare_delay < 1) errs.push_back({p + ".scare_delay", "must be >= 1 tick"});
  return errs;
}

/// Which actuator kinds are running in a zone.
struct ActiveActuators {
  bool sprinkler = false;
  bool motor = false;
  bool buzzer = false;
  bool led = false;

  bool any() const { return sprinkler || motor || buzzer || led; }
};

struct ActuationResult {
  ZoneState zone;
  std::vector<EnvEvent> events;
};

/// Physical effect of running actuators over `dt` minutes ending at `t`.
/// Sprinklers fill, wet the soil and put out fires; the pump wets the soil;
/// the buzzer truncates any intrusion in the zone to end `scare_delay` ticks
/// from now.
inline ActuationResult apply_actuation(ZoneState s, ActiveActuators on, const ActuationRates& rates, double dt,
                                       SimMinute t, std::vector<EnvEvent> events) {
  if (on.sprinkler) {
    s.water_level += rates.sprinkler_water_rate * dt;
    s.soil_moisture += rates.sprinkler_moisture_rate * dt;
    for (auto& e : events) {
      if (e.kind != EventKind::Fire || e.zone_id != s.zone_id || !e.active_at(t)) continue;
      const double step = std::min(1.0 - e.suppression, rates.fire_suppression_rate * dt);
      e.suppression += step;
      s.temperature -= e.magnitude * step;
    }
  }
  if (on.motor) s.soil_moisture += rates.pump_moisture_rate * dt;
  if (on.buzzer) {
    const auto leave_at = t + static_cast<SimMinute>(rates.scare_delay * dt);
    for (auto& e : events) {
      if (e.kind != EventKind::AnimalIntrusion || e.zone_id != s.zone_id || !e.active_at(t)) continue;
      if (leave_at < e.end()) e.duration = leave_at - e.start;
    }
  }
  return {clamp(s), std::move(events)};
}

}  // namespace fieldsim
