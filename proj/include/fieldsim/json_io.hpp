#pragma once

// JSON shapes shared by the CLI exports and the gateway API.

#include <string>

#include "fieldsim/controller.hpp"
#include "fieldsim/simulation.hpp"
#include "fieldsim/telemetry.hpp"
#include "json.hpp"

namespace fieldsim {

using ojson = nlohmann::ordered_json;

inline ojson to_json(const ZoneState& z) {
  return {{"zone_id", z.zone_id},
          {"soil_moisture", quantize(z.soil_moisture)},
          {"soil_moisture_pct", quantize(z.soil_moisture * 100)},
          {"water_level", quantize(z.water_level)},
          {"temperature", quantize(z.temperature)},
          {"humidity", quantize(z.humidity)},
          {"air_quality", quantize(z.air_quality)},
          {"intruder_present", z.intruder_present}};
}

inline ojson to_json(const SensorReading& r) {
  return {{"timestamp", r.timestamp}, {"node_id", r.node.tag}, {"zone_id", r.zone},
          {"kind", name(r.kind)},     {"value", r.value},      {"unit", unit(r.kind)}};
}

inline ojson to_json(const ActuatorCommand& c) {
  return {{"timestamp", c.timestamp}, {"target", c.target.tag}, {"zone_id", c.zone},
          {"action", c.action == Action::On ? "on" : "off"}, {"cause", c.cause}, {"source", c.source.tag}};
}

inline ojson to_json(const Alert& a) {
  return {{"timestamp", a.timestamp}, {"source", a.source.tag}, {"zone_id", a.zone},
          {"alert", name(a.kind)},    {"message", message(a.kind)}, {"value", a.value}};
}

inline ojson to_json(const RuleConfig& r) {
  ojson j = {{"water_on_below", r.water_on_below},       {"water_off_at", r.water_off_at},
             {"temp_on_at", r.temp_on_at},               {"temp_off_below", r.temp_off_below},
             {"fire_at", r.fire_at},                     {"moisture_on_below", r.moisture_on_below},
             {"humidity_warn_below", r.humidity_warn_below}};
  j["air_warn_above"] = r.air_warn_above ? ojson(*r.air_warn_above) : ojson(nullptr);
  return j;
}

inline ojson to_json(const Snapshot& s) {
  ojson zones = ojson::array();
  for (const auto& z : s.zones) zones.push_back(to_json(z));
  ojson actuators = ojson::array();
  for (const auto& a : s.actuators) {
    auto it = s.overrides.find(a.id);
    actuators.push_back({{"id", a.id.tag},
                         {"kind", name(a.kind)},
                         {"zone_id", a.zone_id},
                         {"is_on", a.is_on},
                         {"override", it == s.overrides.end() ? "none" : std::string(name(it->second))}});
  }
  ojson readings = ojson::array();
  for (const auto& [id, r] : s.latest_readings) readings.push_back(to_json(r));
  ojson alerts = ojson::array();
  for (const auto& a : s.active_alerts) alerts.push_back(to_json(a));
  ojson nodes = ojson::array();
  for (const auto& n : s.sensors)
    nodes.push_back({{"id", n.id.tag},
                     {"kind", name(n.kind)},
                     {"zone_id", n.zone_id},
                     {"state", name(n.state)},
                     {"battery", quantize(n.battery)}});
  return {{"tick", s.tick},          {"finished", s.finished}, {"zones", zones},     {"actuators", actuators},
          {"latest_readings", readings}, {"active_alerts", alerts}, {"nodes", nodes}, {"rules", to_json(s.rules)}};
}

/// Commands as exported to commands.csv / commands.json.
inline constexpr std::string_view kCommandsCsvHeader = "timestamp,run_id,target,zone_id,action,cause,source";
inline constexpr std::string_view kAlertsCsvHeader = "timestamp,run_id,source,zone_id,alert,message,value";

template <class Range>
std::string commands_csv(const Range& records, const std::vector<ActuatorCommand>& live = {}) {
  // Cause sensors only exist in the live command list; exported logs lack them.
  std::string out(kCommandsCsvHeader);
  out += '\n';
  std::size_t i = 0;
  for (const TelemetryRecord& r : records) {
    const auto* c = std::get_if<ActuatorCommand>(&r.payload);
    if (!c) continue;
    const NodeId source = i < live.size() ? live[i].source : c->source;
    ++i;
    out += std::to_string(r.timestamp) + ',' + csv::escape(r.run_id) + ',' + to_string(c->target) + ',' +
           std::to_string(c->zone) + ',' + (c->action == Action::On ? "on" : "off") + ',' + csv::escape(c->cause) +
           ',' + to_string(source) + '\n';
  }
  return out;
}

template <class Range>
std::string alerts_csv(const Range& records) {
  std::string out(kAlertsCsvHeader);
  out += '\n';
  for (const TelemetryRecord& r : records) {
    const auto* a = std::get_if<Alert>(&r.payload);
    if (!a) continue;
    out += std::to_string(r.timestamp) + ',' + csv::escape(r.run_id) + ',' + to_string(a->source) + ',' +
           std::to_string(a->zone) + ',' + std::string(name(a->kind)) + ',' + csv::escape(message(a->kind)) + ',' +
           format_fixed4(a->value) + '\n';
  }
  return out;
}

}  // namespace fieldsim
