#pragma once

// Base-station rule engine.
//
// Per sprinkler group the fire rule dominates hysteresis irrigation; the
// pump follows soil moisture, the buzzer follows the motion detectors and
// the alarm LED follows any active fire. Manual overrides are applied last
// and mask rule verdicts while held. Commands are emitted only when an
// actuator's commanded state actually changes; alerts only when a condition
// becomes active.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fieldsim/core.hpp"

namespace fieldsim {

struct RuleConfig {
  double water_on_below = 5;    // cm
  double water_off_at = 10;     // cm
  double temp_on_at = 35;       // C
  double temp_off_below = 25;   // C
  double fire_at = 75;          // C
  double moisture_on_below = 0.5;
  double humidity_warn_below = 50;  // percent
  std::optional<double> air_warn_above;  // ppm; disabled when empty

  friend bool operator==(const RuleConfig&, const RuleConfig&) = default;
};

inline ValidationErrors validate(const RuleConfig& r, std::string_view path = "rules") {
  ValidationErrors errs;
  auto p = std::string(path);
  auto num = [](double v) { return format_number(v); };
  if (!(r.water_on_below < r.water_off_at))
    errs.push_back({p + ".water_on_below", "must be < water_off_at (" + num(r.water_on_below) +
                                               " >= " + num(r.water_off_at) + ")"});
  if (!(r.temp_off_below < r.temp_on_at))
    errs.push_back({p + ".temp_off_below", "must be < temp_on_at (" + num(r.temp_off_below) +
                                               " >= " + num(r.temp_on_at) + ")"});
  if (!(r.temp_on_at < r.fire_at))
    errs.push_back(
        {p + ".temp_on_at", "must be < fire_at (" + num(r.temp_on_at) + " >= " + num(r.fire_at) + ")"});
  if (!(r.moisture_on_below > 0 && r.moisture_on_below < 1))
    errs.push_back({p + ".moisture_on_below", "must be in (0, 1)"});
  if (!(r.humidity_warn_below >= 0 && r.humidity_warn_below <= 100))
    errs.push_back({p + ".humidity_warn_below", "must be in [0, 100]"});
  if (r.air_warn_above && !(*r.air_warn_above >= 0))
    errs.push_back({p + ".air_warn_above", "must be >= 0"});
  return errs;
}

/// A partial set of thresholds; unset fields keep their current value.
struct RulePatch {
  std::optional<double> water_on_below;
  std::optional<double> water_off_at;
  std::optional<double> temp_on_at;
  std::optional<double> temp_off_below;
  std::optional<double> fire_at;
  std::optional<double> moisture_on_below;
  std::optional<double> humidity_warn_below;
  std::optional<double> air_warn_above;
};

/// Merged config, or ValidationFailure naming every violated field.
inline RuleConfig update_rules(const RuleConfig& rules, const RulePatch& patch) {
  RuleConfig merged = rules;
  if (patch.water_on_below) merged.water_on_below = *patch.water_on_below;
  if (patch.water_off_at) merged.water_off_at = *patch.water_off_at;
  if (patch.temp_on_at) merged.temp_on_at = *patch.temp_on_at;
  if (patch.temp_off_below) merged.temp_off_below = *patch.temp_off_below;
  if (patch.fire_at) merged.fire_at = *patch.fire_at;
  if (patch.moisture_on_below) merged.moisture_on_below = *patch.moisture_on_below;
  if (patch.humidity_warn_below) merged.humidity_warn_below = *patch.humidity_warn_below;
  if (patch.air_warn_above) merged.air_warn_above = *patch.air_warn_above;
  if (auto errs = validate(merged); !errs.empty()) throw ValidationFailure(std::move(errs));
  return merged;
}

struct PairingGroup {
  int group = 0;
  NodeId temperature_monitor;
  NodeId water_level_monitor;
  std::vector<NodeId> sprinklers;

  friend bool operator==(const PairingGroup&, const PairingGroup&) = default;
};

using PairingMap = std::vector<PairingGroup>;

struct SensorInfo {
  SensorKind kind = SensorKind::Temperature;
  int zone = 0;
};

struct ActuatorInfo {
  ActuatorKind kind = ActuatorKind::Sprinkler;
  int zone = 0;
};

/// What the base station knows about the deployment.
struct ControlTopology {
  PairingMap pairing;
  std::map<NodeId, SensorInfo> sensors;
  std::map<NodeId, ActuatorInfo> actuators;
};

enum class OverrideMode { ForcedOn, ForcedOff, Released };

constexpr std::string_view name(OverrideMode m) {
  switch (m) {
    case OverrideMode::ForcedOn: return "forced_on";
    case OverrideMode::ForcedOff: return "forced_off";
    case OverrideMode::Released: return "released";
  }
  return "?";
}

inline std::optional<OverrideMode> parse_override_mode(std::string_view s) {
  for (auto m : {OverrideMode::ForcedOn, OverrideMode::ForcedOff, OverrideMode::Released})
    if (name(m) == s) return m;
  return std::nullopt;
}

struct SensorMemory {
  std::optional<double> value;
  SimMinute timestamp = 0;
  int missed = 0;  // consecutive scheduled cycles without a fresh reading

  friend bool operator==(const SensorMemory&, const SensorMemory&) = default;
};

/// An alert is identified by its kind and the device it concerns.
using AlertKey = std::pair<AlertKind, NodeId>;

struct ControllerState {
  std::map<int, bool> sprinkler_latch;
  std::map<int, bool> fire_active;
  bool motor_latch = false;
  bool buzzer_on = false;
  std::map<NodeId, OverrideMode> overrides;  // held overrides only
  std::map<NodeId, bool> outputs;            // last commanded state per actuator
  std::map<NodeId, SensorMemory> memory;
  std::map<AlertKey, Alert> active_alerts;

  friend bool operator==(const ControllerState&, const ControllerState&) = default;
};

inline constexpr int kStaleAfterMissedCycles = 2;

inline ControllerState apply_override(ControllerState state, const ControlTopology& topo, NodeId target,
                                      OverrideMode mode) {
  if (!topo.actuators.contains(target)) throw NotFound("unknown actuator " + to_string(target));
  if (mode == OverrideMode::Released)
    state.overrides.erase(target);
  else
    state.overrides[target] = mode;
  return state;
}

enum class EvaluationKind { Scheduled, OffSchedule };

struct Evaluation {
  ControllerState state;
  std::vector<ActuatorCommand> commands;
  std::vector<Alert> alerts;  // newly raised this cycle
};

namespace detail {

struct Verdict {
  bool on = false;
  std::string cause;
  NodeId source;
};

class AlertTracker {
 public:
  AlertTracker(std::map<AlertKey, Alert>& active, std::vector<Alert>& raised, SimMinute t)
      : active_(active), raised_(raised), t_(t) {}

  void set(AlertKind kind, NodeId subject, bool condition, int zone, double value) {
    const AlertKey key{kind, subject};
    if (!condition) {
      active_.erase(key);
      return;
    }
    if (active_.contains(key)) return;
    Alert a{kind, subject, zone, quantize(value), t_};
    active_.emplace(key, a);
    raised_.push_back(a);
  }

 private:
  std::map<AlertKey, Alert>& active_;
  std::vector<Alert>& raised_;
  SimMinute t_;
};

}  // namespace detail

/// One control cycle. `readings` are the values delivered since the last
/// cycle; sensors without one reuse their last known value. Scheduled cycles
/// also advance the stale-sensor counters.
inline Evaluation evaluate(std::span<const SensorReading> readings, ControllerState state, const RuleConfig& rules,
                           const ControlTopology& topo, SimMinute t,
                           EvaluationKind kind = EvaluationKind::Scheduled) {
  Evaluation out;
  detail::AlertTracker alerts(state.active_alerts, out.alerts, t);

  std::set<NodeId> fresh;
  for (const auto& r : readings) {
    if (!topo.sensors.contains(r.node)) throw std::logic_error("reading from unregistered sensor " + to_string(r.node));
    auto& mem = state.memory[r.node];
    mem.value = r.value;
    mem.timestamp = r.timestamp;
    mem.missed = 0;
    fresh.insert(r.node);
  }
  for (const auto& [id, info] : topo.sensors) {
    auto& mem = state.memory[id];
    if (kind == EvaluationKind::Scheduled && !fresh.contains(id)) ++mem.missed;
    alerts.set(AlertKind::StaleReading, id, mem.missed >= kStaleAfterMissedCycles, info.zone, mem.missed);
  }

  auto known = [&](NodeId id) -> std::optional<double> {
    auto it = state.memory.find(id);
    return it == state.memory.end() ? std::nullopt : it->second.value;
  };
  auto num = [](double v) { return format_number(v); };

  std::map<NodeId, detail::Verdict> verdicts;

  for (const auto& g : topo.pairing) {
    const auto temp = known(g.temperature_monitor);
    const auto water = known(g.water_level_monitor);
    const int zone = topo.sensors.contains(g.temperature_monitor) ? topo.sensors.at(g.temperature_monitor).zone : 0;

    bool& fire = state.fire_active[g.group];
    if (temp && *temp >= rules.fire_at)
      fire = true;
    else if (fire && temp && *temp < rules.temp_off_below)
      fire = false;
    alerts.set(AlertKind::Fire, g.temperature_monitor, fire, zone, temp.value_or(0));

    bool& latch = state.sprinkler_latch[g.group];
    detail::Verdict v{latch, "latched", {}};
    if (fire) {
      v = {true, "temp>=" + num(rules.fire_at), g.temperature_monitor};
    } else if (water && *water < rules.water_on_below) {
      v = {true, "water<" + num(rules.water_on_below), g.water_level_monitor};
    } else if (temp && *temp >= rules.temp_on_at) {
      v = {true, "temp>=" + num(rules.temp_on_at), g.temperature_monitor};
    } else if (water && temp && *water >= rules.water_off_at && *temp <= rules.temp_off_below) {
      v = {false, "water>=" + num(rules.water_off_at) + "&temp<=" + num(rules.temp_off_below),
           g.water_level_monitor};
    }
    latch = v.on;
    for (NodeId s : g.sprinklers) verdicts[s] = v;
  }

  std::optional<std::pair<double, NodeId>> driest;
  std::optional<NodeId> moving;
  bool any_motion_known = false;
  bool any_fire = std::any_of(state.fire_active.begin(), state.fire_active.end(),
                              [](const auto& kv) { return kv.second; });
  for (const auto& [id, info] : topo.sensors) {
    const auto value = known(id);
    if (!value) continue;
    switch (info.kind) {
      case SensorKind::Moisture:
        if (!driest || *value < driest->first) driest = {*value, id};
        break;
      case SensorKind::Motion:
      case SensorKind::Ultrasonic:
        any_motion_known = true;
        if (*value >= 1.0 && !moving) moving = id;
        break;
      case SensorKind::Humidity:
        alerts.set(AlertKind::LowHumidity, id, *value < rules.humidity_warn_below, info.zone, *value);
        break;
      case SensorKind::AirQuality:
        alerts.set(AlertKind::AirQuality, id, rules.air_warn_above && *value > *rules.air_warn_above, info.zone,
                   *value);
        break;
      default: break;
    }
  }

  detail::Verdict motor{state.motor_latch, "latched", {}};
  if (driest) {
    motor = driest->first < rules.moisture_on_below
                ? detail::Verdict{true, "moisture<" + num(rules.moisture_on_below), driest->second}
                : detail::Verdict{false, "moisture>=" + num(rules.moisture_on_below), driest->second};
  }
  state.motor_latch = motor.on;

  detail::Verdict buzzer{state.buzzer_on, "latched", {}};
  if (moving)
    buzzer = {true, "motion", *moving};
  else if (any_motion_known)
    buzzer = {false, "no motion", {}};
  state.buzzer_on = buzzer.on;

  const detail::Verdict led{any_fire, any_fire ? "fire" : "no fire", {}};

  for (const auto& [id, info] : topo.actuators) {
    if (info.kind == ActuatorKind::Motor) verdicts[id] = motor;
    if (info.kind == ActuatorKind::Buzzer) verdicts[id] = buzzer;
    if (info.kind == ActuatorKind::Led) verdicts[id] = led;
  }

  for (const auto& g : topo.pairing) {
    for (NodeId s : g.sprinklers) {
      auto it = state.overrides.find(s);
      const bool conflict =
          state.fire_active[g.group] && it != state.overrides.end() && it->second == OverrideMode::ForcedOff;
      alerts.set(AlertKind::SafetyConflict, s, conflict, topo.actuators.at(s).zone, 1.0);
    }
  }

  for (const auto& [id, info] : topo.actuators) {
    detail::Verdict v = verdicts.count(id) ? verdicts.at(id) : detail::Verdict{};
    if (auto it = state.overrides.find(id); it != state.overrides.end())
      v = {it->second == OverrideMode::ForcedOn, "manual", {}};
    bool& current = state.outputs[id];
    if (v.on == current) continue;
    current = v.on;
    out.commands.push_back({id, v.on ? Action::On : Action::Off, v.cause, t, info.zone, v.source});
  }

  out.state = std::move(state);
  return out;
}

}  // namespace fieldsim
