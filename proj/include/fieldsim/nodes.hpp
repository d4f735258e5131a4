#pragma once

// Sensor and actuator devices: duty cycling, sampling and battery accounting.

#include <algorithm>
#include <optional>
#include <random>
#include <span>
#include <string_view>

#include "fieldsim/core.hpp"
#include "fieldsim/environment.hpp"

namespace fieldsim {

struct Position {
  double x = 0;
  double y = 0;

  friend bool operator==(const Position&, const Position&) = default;
};

enum class NodeState { Standby, Active, Transmitting, Dead };

constexpr std::string_view name(NodeState s) {
  switch (s) {
    case NodeState::Standby: return "standby";
    case NodeState::Active: return "active";
    case NodeState::Transmitting: return "transmitting";
    case NodeState::Dead: return "dead";
  }
  return "?";
}

struct SensorNode {
  NodeId id;
  SensorKind kind = SensorKind::Temperature;
  int zone_id = 0;
  Position position;
  double battery = 5000;  // joules
  NodeState state = NodeState::Standby;
  std::optional<double> wake_threshold;
  double noise_sigma = 0;
  // Set while the wake condition holds so one crossing wakes the node once.
  bool wake_tripped = false;

  bool alive() const { return state != NodeState::Dead; }

  friend bool operator==(const SensorNode&, const SensorNode&) = default;
};

struct ActuatorNode {
  NodeId id;
  ActuatorKind kind = ActuatorKind::Sprinkler;
  int zone_id = 0;
  Position position;
  bool is_on = false;

  friend bool operator==(const ActuatorNode&, const ActuatorNode&) = default;
};

/// Powers in milliwatts, per-packet energies in millijoules.
struct EnergyModel {
  double standby_power = 0.05;
  double active_power = 20.0;
  double tx_energy_per_packet = 2.0;
  double relay_energy_per_packet = 2.0;

  friend bool operator==(const EnergyModel&, const EnergyModel&) = default;
};

inline ValidationErrors validate(const EnergyModel& m, std::string_view path = "energy") {
  ValidationErrors errs;
  auto p = std::string(path);
  if (!(m.standby_power > 0)) errs.push_back({p + ".standby_power", "must be > 0"});
  if (!(m.active_power > m.standby_power)) errs.push_back({p + ".active_power", "must exceed standby_power"});
  if (!(m.tx_energy_per_packet >= 0)) errs.push_back({p + ".tx_energy_per_packet", "must be >= 0"});
  if (!(m.relay_energy_per_packet >= 0)) errs.push_back({p + ".relay_energy_per_packet", "must be >= 0"});
  return errs;
}

/// Joules drawn by `power_mw` over `minutes`.
inline double dwell_energy(double power_mw, double minutes) { return power_mw * minutes * 60.0 / 1000.0; }

inline double packet_energy(const EnergyModel& m, std::int64_t sent, std::int64_t relayed) {
  return (m.tx_energy_per_packet * static_cast<double>(sent) +
          m.relay_energy_per_packet * static_cast<double>(relayed)) /
         1000.0;
}

inline double state_power(const EnergyModel& m, NodeState s) {
  return s == NodeState::Standby ? m.standby_power : m.active_power;
}

inline SensorNode drain(SensorNode node, double dwell_minutes, std::int64_t packets_sent,
                        std::int64_t packets_relayed, const EnergyModel& model) {
  if (!node.alive()) return node;
  const double used =
      dwell_energy(state_power(model, node.state), dwell_minutes) + packet_energy(model, packets_sent, packets_relayed);
  node.battery = std::max(0.0, node.battery - used);
  if (node.battery == 0.0) node.state = NodeState::Dead;
  return node;
}

/// Integer usage counters; energy is recomputed from them in one expression
/// so long runs do not accumulate per-tick rounding.
struct EnergyLedger {
  std::int64_t standby_minutes = 0;
  std::int64_t active_minutes = 0;
  std::int64_t packets_sent = 0;
  std::int64_t packets_relayed = 0;

  double consumed(const EnergyModel& m) const {
    return dwell_energy(m.standby_power, static_cast<double>(standby_minutes)) +
           dwell_energy(m.active_power, static_cast<double>(active_minutes)) +
           packet_energy(m, packets_sent, packets_relayed);
  }

  friend bool operator==(const EnergyLedger&, const EnergyLedger&) = default;
};

inline double truth_value(SensorKind kind, const ZoneState& z) {
  switch (kind) {
    case SensorKind::Temperature: return z.temperature;
    case SensorKind::WaterLevel: return z.water_level;
    case SensorKind::Moisture: return z.soil_moisture;
    case SensorKind::Humidity: return z.humidity;
    case SensorKind::Motion:
    case SensorKind::Ultrasonic: return z.intruder_present ? 1.0 : 0.0;
    case SensorKind::AirQuality: return z.air_quality;
  }
  return 0;
}

/// Kinds that signal trouble by dropping (dry soil, low water, dry air).
constexpr bool wakes_below(SensorKind k) {
  return k == SensorKind::Moisture || k == SensorKind::WaterLevel || k == SensorKind::Humidity;
}

inline std::optional<double> default_wake_threshold(SensorKind k) {
  if (k == SensorKind::Moisture) return 0.5;
  return std::nullopt;
}

struct DutyCycleResult {
  SensorNode node;
  bool wake = false;
};

inline DutyCycleResult tick_duty_cycle(SensorNode node, const ZoneState& truth, SimMinute sampling_interval,
                                       SimMinute t) {
  if (!node.alive()) return {node, false};
  const bool scheduled = sampling_interval > 0 && t % sampling_interval == 0;
  bool triggered = false;
  if (node.wake_threshold) {
    const double v = truth_value(node.kind, truth);
    const bool condition = wakes_below(node.kind) ? v < *node.wake_threshold : v >= *node.wake_threshold;
    triggered = condition && !node.wake_tripped;
    node.wake_tripped = condition;
  }
  const bool wake = scheduled || triggered;
  node.state = wake ? NodeState::Active : NodeState::Standby;
  return {node, wake};
}

inline bool has_failed(const SensorNode& node, std::span<const EnvEvent> events, SimMinute t) {
  return std::any_of(events.begin(), events.end(), [&](const EnvEvent& e) {
    return e.kind == EventKind::SensorFailure && e.target == node.id && e.active_at(t);
  });
}

/// Reads the zone's ground truth. Returns nothing for dead or failed nodes.
template <class Rng>
std::optional<SensorReading> sample(const SensorNode& node, const ZoneState& truth,
                                    std::span<const EnvEvent> events, SimMinute t, Rng& rng) {
  if (!node.alive() || has_failed(node, events, t)) return std::nullopt;
  double value = truth_value(node.kind, truth);
  if (!is_boolean(node.kind) && node.noise_sigma > 0) {
    std::normal_distribution<double> noise(0.0, node.noise_sigma);
    value += noise(rng);
  }
  return SensorReading{node.id, node.kind, quantize(value), node.zone_id, t};
}

}  // namespace fieldsim
