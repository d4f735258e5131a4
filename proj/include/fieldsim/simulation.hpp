#pragma once

// Deterministic tick engine. Each tick t (0, tick, ..., duration):
//
//   1. advance every zone's weather and active events
//   2. apply the physical effect of running actuators
//   3. duty-cycle the sensors; woken ones sample
//   4. readings travel over the mesh to the gateway
//   5. the controller evaluates on sampling boundaries, on delivered
//      off-schedule wakes and after operator mutations
//   6. commands travel back; delivered ones switch actuators, lost ones
//      are retried on the next tick
//   7. batteries drain; energy is logged on sampling boundaries
//
// A single RNG stream seeded from the scenario is consumed in ascending
// node-id order, so a scenario and seed fully determine the telemetry.

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "fieldsim/controller.hpp"
#include "fieldsim/environment.hpp"
#include "fieldsim/mesh.hpp"
#include "fieldsim/nodes.hpp"
#include "fieldsim/scenario.hpp"
#include "fieldsim/telemetry.hpp"

namespace fieldsim {

struct RunDiagnostics {
  std::int64_t scheduled_rounds = 0;
  std::int64_t evaluations = 0;
  std::int64_t uplink_sent = 0;
  std::int64_t uplink_delivered = 0;
  std::int64_t uplink_dropped = 0;
  std::int64_t downlink_dropped = 0;
  std::int64_t missed_samples = 0;  // woken but failed or dead
  std::vector<NodeId> dead_nodes;

  friend bool operator==(const RunDiagnostics&, const RunDiagnostics&) = default;
};

/// Immutable view of the field at a tick boundary.
struct Snapshot {
  SimMinute tick = 0;  // last processed tick; negative before the first
  bool finished = false;
  std::vector<ZoneState> zones;
  std::vector<ActuatorNode> actuators;
  std::map<NodeId, OverrideMode> overrides;
  std::map<NodeId, SensorReading> latest_readings;
  std::vector<Alert> active_alerts;
  std::vector<SensorNode> sensors;
  RuleConfig rules;
};

struct SimResult {
  TelemetryStore telemetry;
  std::vector<ZoneState> zones;
  std::vector<SensorNode> sensors;
  std::vector<ActuatorNode> actuators;
  ControllerState controller;
  std::vector<ActuatorCommand> commands;  // every emitted command, with its cause sensor
  SdgMetricsReport report;
  RunDiagnostics diagnostics;
};

class Simulation {
 public:
  explicit Simulation(ScenarioConfig config)
      : cfg_(std::move(config)),
        rules_(cfg_.rules),
        topo_(control_topology(cfg_)),
        store_(cfg_.run_id()),
        rng_(cfg_.seed),
        events_(cfg_.events),
        sensors_(cfg_.sensors),
        actuators_(cfg_.actuators) {
    std::sort(sensors_.begin(), sensors_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::sort(actuators_.begin(), actuators_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (const auto& z : cfg_.zones) zones_.push_back(z.initial);
    for (const auto& s : sensors_) initial_battery_[s.id] = s.battery;
  }

  const ScenarioConfig& config() const { return cfg_; }
  const TelemetryStore& telemetry() const { return store_; }
  const RuleConfig& rules() const { return rules_; }
  const std::vector<ActuatorCommand>& commands() const { return commands_; }
  const RunDiagnostics& diagnostics() const { return diag_; }
  const std::vector<EnvEvent>& events() const { return events_; }

  bool finished() const { return next_t_ > cfg_.duration; }
  SimMinute next_tick() const { return next_t_; }
  SimMinute last_tick() const { return next_t_ - cfg_.tick; }

  /// Processes one tick; returns the half-open range of records it appended.
  std::pair<std::size_t, std::size_t> step() {
    if (finished()) return {store_.size(), store_.size()};
    const std::size_t first = store_.size();
    const SimMinute t = next_t_;
    const double dt = static_cast<double>(cfg_.tick);
    const bool scheduled = t % cfg_.sampling_interval == 0;

    advance_environment(t, dt);

    std::vector<SensorReading> produced;
    std::set<NodeId> woke;
    for (auto& s : sensors_) {
      if (!s.alive()) continue;
      auto duty = tick_duty_cycle(s, zone_state(s.zone_id), cfg_.sampling_interval, t);
      s = duty.node;
      if (!duty.wake) continue;
      woke.insert(s.id);
      if (auto r = sample(s, zone_state(s.zone_id), std::span<const EnvEvent>(events_), t, rng_))
        produced.push_back(*r);
      else
        ++diag_.missed_samples;
    }

    for (const auto& r : produced) {
      Packet p{++packet_seq_, r.node, cfg_.gateway.id, r, {}};
      const auto result = transmit(p, routes(), cfg_.link, rng_);
      charge(result);
      ++diag_.uplink_sent;
      const auto* d = std::get_if<Delivered>(&result.outcome);
      store_.append(t, DeliveryRecord{r.node, r.zone, Direction::Up, d != nullptr,
                                      d ? d->hop_count() : std::get<Dropped>(result.outcome).at_hop});
      if (!d) {
        ++diag_.uplink_dropped;
        continue;
      }
      ++diag_.uplink_delivered;
      store_.append(t, r);
      latest_[r.node] = r;
      inbox_.push_back(r);
    }

    if (scheduled) ++diag_.scheduled_rounds;
    if (scheduled || !inbox_.empty() || evaluate_next_tick_) {
      auto eval = evaluate(inbox_, std::move(controller_), rules_, topo_, t,
                           scheduled ? EvaluationKind::Scheduled : EvaluationKind::OffSchedule);
      ++diag_.evaluations;
      controller_ = std::move(eval.state);
      for (const auto& c : eval.commands) {
        store_.append(t, c);
        commands_.push_back(c);
        pending_[c.target] = c;
      }
      for (const auto& a : eval.alerts) store_.append(t, a);
      inbox_.clear();
      evaluate_next_tick_ = false;
    }

    deliver_commands(t);

    for (auto& s : sensors_) {
      if (!s.alive()) continue;
      auto& ledger = ledgers_[s.id];
      (woke.contains(s.id) ? ledger.active_minutes : ledger.standby_minutes) += cfg_.tick;
      s.battery = std::max(0.0, initial_battery_.at(s.id) - ledger.consumed(cfg_.energy));
      if (s.battery == 0.0) {
        s.state = NodeState::Dead;
        diag_.dead_nodes.push_back(s.id);
        store_.append(t, NodeDown{s.id, s.zone_id});
        routes_.reset();
      }
    }

    if (scheduled || t + cfg_.tick > cfg_.duration) {
      for (const auto& s : sensors_) {
        const double used = std::min(initial_battery_.at(s.id), ledgers_[s.id].consumed(cfg_.energy));
        store_.append(t, EnergySample{s.id, s.zone_id, quantize(used)});
      }
    }

    next_t_ += cfg_.tick;
    return {first, store_.size()};
  }

  void run_to_end() {
    while (!finished()) step();
  }

  // Operator mutations. They take effect before the next tick is processed
  // and trigger a control evaluation on that tick.

  void override_actuator(NodeId target, OverrideMode mode) {
    controller_ = apply_override(controller_, topo_, target, mode);
    const auto& info = topo_.actuators.at(target);
    store_.append(mutation_time(), MutationNote{target, info.zone, 0, "override:" + std::string(name(mode))});
    evaluate_next_tick_ = true;
  }

  void patch_rules(const RulePatch& patch) {
    rules_ = update_rules(rules_, patch);
    store_.append(mutation_time(), MutationNote{{}, 0, 0, "rules"});
    evaluate_next_tick_ = true;
  }

  void inject_event(const EnvEvent& e) {
    ScenarioConfig view = cfg_;
    view.rules = rules_;
    auto errs = validate_event(e, view, "event");
    if (e.start < next_t_)
      errs.push_back({"event.start", "must be >= next tick " + std::to_string(next_t_)});
    if (!errs.empty()) throw ValidationFailure(std::move(errs));
    events_.push_back(e);
    store_.append(mutation_time(),
                  MutationNote{e.target, e.zone_id, quantize(e.magnitude), "injected:" + std::string(name(e.kind))});
  }

  Snapshot snapshot() const {
    Snapshot s;
    s.tick = next_t_ - cfg_.tick;
    s.finished = finished();
    s.zones = zones_;
    s.actuators = actuators_;
    s.overrides = controller_.overrides;
    s.latest_readings = latest_;
    for (const auto& [key, alert] : controller_.active_alerts) s.active_alerts.push_back(alert);
    s.sensors = sensors_;
    s.rules = rules_;
    return s;
  }

  SimResult result() const {
    SimResult r;
    r.telemetry = store_;
    r.zones = zones_;
    r.sensors = sensors_;
    r.actuators = actuators_;
    r.controller = controller_;
    r.commands = commands_;
    r.report = summarize(store_.records(), metrics_context(cfg_));
    r.diagnostics = diag_;
    return r;
  }

 private:
  // Mutations are stamped with the tick they take effect on; after the run
  // ends they land on the final tick.
  SimMinute mutation_time() const { return finished() ? last_tick() : next_t_; }

  ZoneState& zone_state(int id) {
    for (auto& z : zones_)
      if (z.zone_id == id) return z;
    throw std::logic_error("unknown zone " + std::to_string(id));
  }

  const ZoneConfig& zone_config(int id) const {
    if (const auto* z = cfg_.zone(id)) return *z;
    throw std::logic_error("unknown zone " + std::to_string(id));
  }

  void advance_environment(SimMinute t, double dt) {
    for (auto& z : zones_) {
      const auto& weather = zone_config(z.zone_id).weather;
      z = t == 0 ? settle_environment(z, weather, events_, t) : step_environment(z, weather, events_, t, dt);
    }
    if (t == 0) return;
    // Motor, buzzer and LED serve the whole field; sprinklers only their zone.
    ActiveActuators field;
    for (const auto& a : actuators_) {
      if (!a.is_on) continue;
      if (a.kind == ActuatorKind::Motor) field.motor = true;
      if (a.kind == ActuatorKind::Buzzer) field.buzzer = true;
      if (a.kind == ActuatorKind::Led) field.led = true;
    }
    for (auto& z : zones_) {
      ActiveActuators on = field;
      on.sprinkler = std::any_of(actuators_.begin(), actuators_.end(), [&](const ActuatorNode& a) {
        return a.is_on && a.kind == ActuatorKind::Sprinkler && a.zone_id == z.zone_id;
      });
      if (!on.any()) continue;
      auto out = apply_actuation(z, on, cfg_.actuation, dt, t, std::move(events_));
      z = out.zone;
      events_ = std::move(out.events);
    }
  }

  const RoutingTable& routes() {
    if (!routes_) {
      std::vector<MeshNode> nodes;
      for (const auto& s : sensors_)
        if (s.alive()) nodes.push_back({s.id, s.position});
      for (const auto& a : actuators_) nodes.push_back({a.id, a.position});
      routes_ = compute_routes(build_topology(nodes, cfg_.gateway, cfg_.link), cfg_.gateway.id);
    }
    return *routes_;
  }

  void charge(const DeliveryResult& result) {
    for (const auto& [node, c] : result.charges) {
      if (!initial_battery_.contains(node)) continue;  // gateway and actuators are mains powered
      auto& ledger = ledgers_[node];
      ledger.packets_sent += c.sent;
      ledger.packets_relayed += c.relayed;
    }
  }

  void deliver_commands(SimMinute t) {
    for (auto it = pending_.begin(); it != pending_.end();) {
      const ActuatorCommand& c = it->second;
      Packet p{++packet_seq_, cfg_.gateway.id, c.target, c, {}};
      const auto result = transmit(p, routes(), cfg_.link, rng_);
      charge(result);
      const auto* d = std::get_if<Delivered>(&result.outcome);
      store_.append(t, DeliveryRecord{c.target, c.zone, Direction::Down, d != nullptr,
                                      d ? d->hop_count() : std::get<Dropped>(result.outcome).at_hop});
      if (!d) {
        ++diag_.downlink_dropped;
        ++it;
        continue;
      }
      auto act = std::find_if(actuators_.begin(), actuators_.end(), [&](const auto& a) { return a.id == c.target; });
      const bool on = c.action == Action::On;
      if (act->is_on != on) {
        act->is_on = on;
        store_.append(t, ActuatorChange{c.target, c.zone, on, c.cause});
      }
      it = pending_.erase(it);
    }
  }

  ScenarioConfig cfg_;
  RuleConfig rules_;
  ControlTopology topo_;
  TelemetryStore store_;
  std::mt19937_64 rng_;
  std::vector<EnvEvent> events_;
  std::vector<SensorNode> sensors_;
  std::vector<ActuatorNode> actuators_;
  std::vector<ZoneState> zones_;
  std::map<NodeId, double> initial_battery_;
  std::map<NodeId, EnergyLedger> ledgers_;
  std::optional<RoutingTable> routes_;
  ControllerState controller_;
  std::vector<SensorReading> inbox_;
  std::map<NodeId, ActuatorCommand> pending_;
  std::map<NodeId, SensorReading> latest_;
  std::vector<ActuatorCommand> commands_;
  RunDiagnostics diag_;
  std::uint64_t packet_seq_ = 0;
  SimMinute next_t_ = 0;
  bool evaluate_next_tick_ = false;
};

inline SimResult run(const ScenarioConfig& config) {
  Simulation sim(config);
  sim.run_to_end();
  return sim.result();
}

/// Commands as they appear in an exported log (no cause sensor).
template <class Range>
std::vector<ActuatorCommand> recorded_commands(const Range& records) {
  std::vector<ActuatorCommand> out;
  for (const TelemetryRecord& r : records)
    if (const auto* c = std::get_if<ActuatorCommand>(&r.payload)) {
      out.push_back(*c);
      out.back().source = {};
    }
  return out;
}

/// Re-derives controller decisions from recorded readings. Evaluations are
/// replayed on every sampling boundary and at every off-schedule timestamp
/// that carries readings; for mutation-free runs with unchanged rules the
/// trace equals the recorded one. Cause sensors are not part of the trace.
template <class Range>
std::vector<ActuatorCommand> replay(const Range& records, const RuleConfig& rules, const ScenarioConfig& config) {
  const auto topo = control_topology(config);
  std::map<SimMinute, std::vector<SensorReading>> by_time;
  for (SimMinute t = 0; t <= config.duration; t += config.tick)
    if (t % config.sampling_interval == 0) by_time[t];
  for (const TelemetryRecord& r : records)
    if (const auto* reading = std::get_if<SensorReading>(&r.payload)) {
      if (!topo.sensors.contains(reading->node))
        throw std::runtime_error("reading from sensor " + to_string(reading->node) + " not in scenario registry");
      by_time[r.timestamp].push_back(*reading);
    }

  ControllerState state;
  std::vector<ActuatorCommand> trace;
  for (const auto& [t, readings] : by_time) {
    const bool scheduled = t % config.sampling_interval == 0;
    auto eval = evaluate(readings, std::move(state), rules, topo, t,
                         scheduled ? EvaluationKind::Scheduled : EvaluationKind::OffSchedule);
    state = std::move(eval.state);
    for (auto& c : eval.commands) {
      c.source = {};
      trace.push_back(std::move(c));
    }
  }
  return trace;
}

}  // namespace fieldsim
