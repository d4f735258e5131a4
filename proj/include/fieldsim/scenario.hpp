#pragma once

// Scenario files: JSON documents describing one reproducible run. Every key
// is optional; a document holding only {"seed": N} yields the reference
// deployment (two zones, 4 sprinklers, 2 temperature monitors, 2 water
// level monitors, 2 motion detectors, 1 buzzer). Loading collects every
// violated constraint instead of stopping at the first.

#include <algorithm>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fieldsim/controller.hpp"
#include "fieldsim/core.hpp"
#include "fieldsim/environment.hpp"
#include "fieldsim/mesh.hpp"
#include "fieldsim/nodes.hpp"
#include "fieldsim/telemetry.hpp"
#include "json.hpp"

namespace fieldsim {

struct ZoneConfig {
  int id = 0;
  WeatherModel weather;
  ZoneState initial;
};

struct ScenarioConfig {
  std::string name = "default";
  std::uint64_t seed = 0;
  SimMinute duration = 1440;
  SimMinute tick = 1;
  SimMinute sampling_interval = 30;
  std::vector<ZoneConfig> zones;
  MeshNode gateway{NodeId{1}, {0, 0}};
  std::vector<SensorNode> sensors;
  std::vector<ActuatorNode> actuators;
  LinkModel link;
  RuleConfig rules;
  PairingMap pairing;
  EnergyModel energy;
  std::vector<EnvEvent> events;
  ActuationRates actuation;
  BaselinePolicy baseline;
  double flow_rate_lpm = 8;

  std::string run_id() const { return name + "-" + std::to_string(seed); }

  const ZoneConfig* zone(int id) const {
    auto it = std::find_if(zones.begin(), zones.end(), [&](const ZoneConfig& z) { return z.id == id; });
    return it == zones.end() ? nullptr : &*it;
  }
};

struct LoadResult {
  std::optional<ScenarioConfig> config;
  ValidationErrors errors;

  bool ok() const { return config.has_value(); }
};

inline std::vector<ZoneConfig> default_zones(const WeatherModel& w = {}) {
  std::vector<ZoneConfig> zones;
  for (int id : {1, 2}) {
    ZoneState s;
    s.zone_id = id;
    zones.push_back({id, w, s});
  }
  return zones;
}

/// Reference field: zone 1 west of the gateway, zone 2 east; motion
/// detectors sit beyond direct radio range so they reach the gateway in two hops.
inline std::vector<SensorNode> default_sensors() {
  auto s = [](std::uint64_t id, SensorKind k, int zone, double x, double y) {
    SensorNode n;
    n.id = NodeId{id};
    n.kind = k;
    n.zone_id = zone;
    n.position = {x, y};
    n.wake_threshold = default_wake_threshold(k);
    return n;
  };
  return {s(101, SensorKind::Temperature, 1, -60, 20), s(102, SensorKind::Temperature, 2, 60, 20),
          s(201, SensorKind::WaterLevel, 1, -60, -20), s(202, SensorKind::WaterLevel, 2, 60, -20),
          s(301, SensorKind::Motion, 1, -150, 0),      s(302, SensorKind::Motion, 2, 150, 0)};
}

inline std::vector<ActuatorNode> default_actuators() {
  auto a = [](std::uint64_t id, ActuatorKind k, int zone, double x, double y) {
    return ActuatorNode{NodeId{id}, k, zone, {x, y}, false};
  };
  return {a(401, ActuatorKind::Sprinkler, 1, -100, 30), a(402, ActuatorKind::Sprinkler, 1, -100, -30),
          a(403, ActuatorKind::Sprinkler, 2, 100, 30),  a(404, ActuatorKind::Sprinkler, 2, 100, -30),
          a(501, ActuatorKind::Buzzer, 1, 0, 80)};
}

inline ControlTopology control_topology(const ScenarioConfig& c) {
  ControlTopology topo;
  topo.pairing = c.pairing;
  for (const auto& s : c.sensors) topo.sensors[s.id] = {s.kind, s.zone_id};
  for (const auto& a : c.actuators) topo.actuators[a.id] = {a.kind, a.zone_id};
  return topo;
}

inline MetricsContext metrics_context(const ScenarioConfig& c) {
  MetricsContext ctx;
  for (const auto& a : c.actuators)
    if (a.kind == ActuatorKind::Sprinkler) ctx.sprinklers.push_back(a.id);
  ctx.flow_rate_lpm = c.flow_rate_lpm;
  ctx.baseline = c.baseline;
  return ctx;
}

/// Checks one event against the deployment; shared by the loader and the
/// gateway's event injection.
inline ValidationErrors validate_event(const EnvEvent& e, const ScenarioConfig& c, const std::string& path) {
  ValidationErrors errs;
  const ZoneConfig* zone = c.zone(e.zone_id);
  if (!zone) errs.push_back({path + ".zone", "zone " + std::to_string(e.zone_id) + " not defined"});
  if (e.start < 0) errs.push_back({path + ".start", "must be >= 0"});
  if (e.duration <= 0) errs.push_back({path + ".duration", "must be > 0"});
  switch (e.kind) {
    case EventKind::Rain:
    case EventKind::HeatWave:
      if (!(e.magnitude >= 0)) errs.push_back({path + ".magnitude", "must be >= 0"});
      break;
    case EventKind::Fire:
      if (zone && e.duration > 0) {
        const double peak = peak_temperature(zone->weather, e);
        if (!(peak >= c.rules.fire_at))
          errs.push_back({path + ".magnitude", "fire peaks at " + format_number(quantize(peak)) +
                                                   " C, below fire_at " + format_number(c.rules.fire_at)});
      }
      break;
    case EventKind::SensorFailure: {
      const bool known = std::any_of(c.sensors.begin(), c.sensors.end(), [&](const SensorNode& s) {
        return s.id == e.target;
      });
      if (!known) errs.push_back({path + ".target", "sensor " + to_string(e.target) + " not in registry"});
      break;
    }
    case EventKind::AnimalIntrusion: break;
  }
  return errs;
}

/// Every constraint that spans more than one section of the file.
inline ValidationErrors validate(const ScenarioConfig& c) {
  ValidationErrors errs;
  auto add = [&](ValidationErrors more) { errs.insert(errs.end(), more.begin(), more.end()); };
  if (c.tick < 1) errs.push_back({"tick", "must be >= 1"});
  if (c.sampling_interval < 1) errs.push_back({"sampling_interval", "must be >= 1"});
  if (c.tick >= 1 && c.sampling_interval >= 1 && c.sampling_interval % c.tick != 0)
    errs.push_back({"sampling_interval", "must be a multiple of tick (" + std::to_string(c.sampling_interval) +
                                             " % " + std::to_string(c.tick) + " != 0)"});
  if (c.duration < c.sampling_interval) errs.push_back({"duration", "must be >= sampling_interval"});
  if (c.zones.empty()) errs.push_back({"zones", "at least one zone required"});
  std::set<int> zone_ids;
  for (std::size_t i = 0; i < c.zones.size(); ++i) {
    const auto& z = c.zones[i];
    const std::string p = "zones[" + std::to_string(i) + "]";
    if (!zone_ids.insert(z.id).second) errs.push_back({p + ".id", "duplicate zone " + std::to_string(z.id)});
    add(validate(z.weather, p + ".weather"));
  }
  add(validate(c.link));
  add(validate(c.rules));
  add(validate(c.energy));
  add(validate(c.actuation));
  if (!(c.flow_rate_lpm >= 0)) errs.push_back({"flow_rate_lpm", "must be >= 0"});
  for (std::size_t i = 0; i < c.baseline.daily_schedule.size(); ++i) {
    const auto& w = c.baseline.daily_schedule[i];
    const std::string p = "baseline.daily_schedule[" + std::to_string(i) + "]";
    if (w.start < 0 || w.start >= 1440) errs.push_back({p + ".start", "must be a minute of day in [0, 1440)"});
    if (w.duration < 0) errs.push_back({p + ".duration", "must be >= 0"});
  }

  // Registry: ids unique across every device, including the gateway.
  std::map<NodeId, std::vector<std::string>> declared;
  declared[c.gateway.id].push_back("gateway");
  for (std::size_t i = 0; i < c.sensors.size(); ++i)
    declared[c.sensors[i].id].push_back("sensors[" + std::to_string(i) + "]");
  for (std::size_t i = 0; i < c.actuators.size(); ++i)
    declared[c.actuators[i].id].push_back("actuators[" + std::to_string(i) + "]");
  for (const auto& [id, where] : declared) {
    if (id.tag == 0) errs.push_back({where.front() + ".id", "id 0 is reserved"});
    if (where.size() < 2) continue;
    std::string list;
    for (const auto& w : where) list += (list.empty() ? "" : ", ") + w;
    errs.push_back({"registry", "duplicate id " + to_string(id) + " (" + list + ")"});
  }
  for (std::size_t i = 0; i < c.sensors.size(); ++i) {
    const auto& s = c.sensors[i];
    const std::string p = "sensors[" + std::to_string(i) + "]";
    if (!zone_ids.contains(s.zone_id)) errs.push_back({p + ".zone", "zone " + std::to_string(s.zone_id) + " not defined"});
    if (!(s.battery >= 0)) errs.push_back({p + ".battery", "must be >= 0"});
    if (!(s.noise_sigma >= 0)) errs.push_back({p + ".noise_sigma", "must be >= 0"});
  }
  for (std::size_t i = 0; i < c.actuators.size(); ++i) {
    const auto& a = c.actuators[i];
    if (!zone_ids.contains(a.zone_id))
      errs.push_back({"actuators[" + std::to_string(i) + "].zone", "zone " + std::to_string(a.zone_id) + " not defined"});
  }

  auto sensor_kind = [&](NodeId id) -> std::optional<SensorKind> {
    for (const auto& s : c.sensors)
      if (s.id == id) return s.kind;
    return std::nullopt;
  };
  auto actuator_kind = [&](NodeId id) -> std::optional<ActuatorKind> {
    for (const auto& a : c.actuators)
      if (a.id == id) return a.kind;
    return std::nullopt;
  };
  std::set<int> groups;
  std::map<NodeId, int> owner;
  for (const auto& g : c.pairing) {
    const std::string p = "pairing.group" + std::to_string(g.group);
    if (!groups.insert(g.group).second) errs.push_back({p, "duplicate group"});
    auto check_sensor = [&](NodeId id, SensorKind want, const char* role) {
      auto k = sensor_kind(id);
      if (!k)
        errs.push_back({p + "." + role, role + std::string(" ") + to_string(id) + " not in registry"});
      else if (*k != want)
        errs.push_back({p + "." + role, to_string(id) + " is a " + std::string(name(*k)) + " sensor"});
    };
    check_sensor(g.temperature_monitor, SensorKind::Temperature, "temperature");
    check_sensor(g.water_level_monitor, SensorKind::WaterLevel, "water_level");
    for (NodeId s : g.sprinklers) {
      auto k = actuator_kind(s);
      if (!k) {
        errs.push_back({p + ".sprinkler", "sprinkler " + to_string(s) + " not in registry"});
        continue;
      }
      if (*k != ActuatorKind::Sprinkler) {
        errs.push_back({p + ".sprinkler", to_string(s) + " is a " + std::string(name(*k))});
        continue;
      }
      if (auto [it, fresh] = owner.emplace(s, g.group); !fresh)
        errs.push_back({p + ".sprinkler", "sprinkler " + to_string(s) + " already in group" +
                                              std::to_string(it->second)});
    }
  }
  for (const auto& a : c.actuators)
    if (a.kind == ActuatorKind::Sprinkler && !owner.contains(a.id))
      errs.push_back({"pairing", "sprinkler " + to_string(a.id) + " has no group"});

  for (std::size_t i = 0; i < c.events.size(); ++i) add(validate_event(c.events[i], c, "events[" + std::to_string(i) + "]"));
  return errs;
}

/// One group per zone that has sprinklers, wired to that zone's first
/// temperature and water-level monitors.
inline PairingMap derive_pairing(const ScenarioConfig& c, ValidationErrors& errs) {
  PairingMap pairing;
  for (const auto& z : c.zones) {
    PairingGroup g{z.id, {}, {}, {}};
    for (const auto& a : c.actuators)
      if (a.zone_id == z.id && a.kind == ActuatorKind::Sprinkler) g.sprinklers.push_back(a.id);
    if (g.sprinklers.empty()) continue;
    std::sort(g.sprinklers.begin(), g.sprinklers.end());
    std::optional<NodeId> temp, water;
    for (const auto& s : c.sensors) {
      if (s.zone_id != z.id) continue;
      if (s.kind == SensorKind::Temperature && (!temp || s.id < *temp)) temp = s.id;
      if (s.kind == SensorKind::WaterLevel && (!water || s.id < *water)) water = s.id;
    }
    if (!temp) errs.push_back({"pairing", "zone " + std::to_string(z.id) + " has sprinklers but no temperature monitor"});
    if (!water) errs.push_back({"pairing", "zone " + std::to_string(z.id) + " has sprinklers but no water_level monitor"});
    if (!temp || !water) continue;
    g.temperature_monitor = *temp;
    g.water_level_monitor = *water;
    pairing.push_back(std::move(g));
  }
  return pairing;
}

namespace detail {

using nlohmann::json;

/// Typed field access that records an error instead of throwing.
class JsonReader {
 public:
  explicit JsonReader(ValidationErrors& errs) : errs_(errs) {}

  bool object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      errs_.push_back({path.empty() ? "document" : path, "expected an object"});
      return false;
    }
    for (const auto& [key, _] : j.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        errs_.push_back({join(path, key), "unknown key"});
    }
    return true;
  }

  bool array(const json& j, const std::string& path) {
    if (j.is_array()) return true;
    errs_.push_back({path, "expected an array"});
    return false;
  }

  template <class T>
  void number(const json& obj, const std::string& path, const char* key, T& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    const bool integral = std::is_integral_v<T>;
    if (!it->is_number() || (integral && !it->is_number_integer())) {
      errs_.push_back({join(path, key), integral ? "expected an integer" : "expected a number"});
      return;
    }
    if constexpr (std::is_unsigned_v<T>) {
      if (it->is_number_unsigned())
        out = it->template get<T>();
      else if (it->template get<std::int64_t>() >= 0)
        out = static_cast<T>(it->template get<std::int64_t>());
      else
        errs_.push_back({join(path, key), "must be >= 0"});
    } else {
      out = it->template get<T>();
    }
  }

  void optional_number(const json& obj, const std::string& path, const char* key, std::optional<double>& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (it->is_null()) {
      out.reset();
      return;
    }
    double v = 0;
    number(obj, path, key, v);
    if (it->is_number()) out = v;
  }

  void string(const json& obj, const std::string& path, const char* key, std::string& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_string()) {
      errs_.push_back({join(path, key), "expected a string"});
      return;
    }
    out = it->get<std::string>();
  }

  void node_id(const json& obj, const std::string& path, const char* key, NodeId& out) {
    number(obj, path, key, out.tag);
  }

  void position(const json& obj, const std::string& path, const char* key, Position& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
      errs_.push_back({join(path, key), "expected [x, y]"});
      return;
    }
    out = {(*it)[0].get<double>(), (*it)[1].get<double>()};
  }

  void error(const std::string& field, const std::string& msg) { errs_.push_back({field, msg}); }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  ValidationErrors& errs_;
};

inline void read_weather(JsonReader& rd, const json& j, const std::string& p, WeatherModel& w) {
  if (!rd.object(j, p, {"temp_mean", "temp_amplitude", "diurnal_period", "peak_minute", "humidity_max",
                        "humidity_coupling", "moisture_decay_rate", "water_level_decay_rate"}))
    return;
  rd.number(j, p, "temp_mean", w.temp_mean);
  rd.number(j, p, "temp_amplitude", w.temp_amplitude);
  rd.number(j, p, "diurnal_period", w.diurnal_period);
  rd.number(j, p, "peak_minute", w.peak_minute);
  rd.number(j, p, "humidity_max", w.humidity_max);
  rd.number(j, p, "humidity_coupling", w.humidity_coupling);
  rd.number(j, p, "moisture_decay_rate", w.moisture_decay_rate);
  rd.number(j, p, "water_level_decay_rate", w.water_level_decay_rate);
}

inline void read_rules(JsonReader& rd, const json& j, const std::string& p, RulePatch& r) {
  if (!rd.object(j, p, {"water_on_below", "water_off_at", "temp_on_at", "temp_off_below", "fire_at",
                        "moisture_on_below", "humidity_warn_below", "air_warn_above"}))
    return;
  rd.optional_number(j, p, "water_on_below", r.water_on_below);
  rd.optional_number(j, p, "water_off_at", r.water_off_at);
  rd.optional_number(j, p, "temp_on_at", r.temp_on_at);
  rd.optional_number(j, p, "temp_off_below", r.temp_off_below);
  rd.optional_number(j, p, "fire_at", r.fire_at);
  rd.optional_number(j, p, "moisture_on_below", r.moisture_on_below);
  rd.optional_number(j, p, "humidity_warn_below", r.humidity_warn_below);
  rd.optional_number(j, p, "air_warn_above", r.air_warn_above);
}

inline void read_event(JsonReader& rd, const json& j, const std::string& p, EnvEvent& e) {
  if (!rd.object(j, p, {"kind", "zone", "start", "duration", "magnitude", "target"})) return;
  std::string kind;
  rd.string(j, p, "kind", kind);
  if (auto k = parse_event_kind(kind))
    e.kind = *k;
  else
    rd.error(p + ".kind", "unknown event kind '" + kind + "'");
  rd.number(j, p, "zone", e.zone_id);
  rd.number(j, p, "start", e.start);
  rd.number(j, p, "duration", e.duration);
  rd.number(j, p, "magnitude", e.magnitude);
  rd.node_id(j, p, "target", e.target);
}

}  // namespace detail

/// Shared by the scenario loader and the gateway's POST /rules.
inline RulePatch parse_rule_patch(const nlohmann::json& j, ValidationErrors& errs, const std::string& path = "rules") {
  detail::JsonReader rd(errs);
  RulePatch patch;
  detail::read_rules(rd, j, path, patch);
  return patch;
}

inline EnvEvent parse_event(const nlohmann::json& j, ValidationErrors& errs, const std::string& path = "event") {
  detail::JsonReader rd(errs);
  EnvEvent e;
  detail::read_event(rd, j, path, e);
  return e;
}

inline LoadResult load_scenario(const nlohmann::json& doc) {
  using detail::json;
  LoadResult result;
  ValidationErrors& errs = result.errors;
  detail::JsonReader rd(errs);
  ScenarioConfig c;
  if (!rd.object(doc, "", {"name", "seed", "duration", "tick", "sampling_interval", "weather", "zones", "gateway",
                           "sensors", "actuators", "link", "rules", "pairing", "energy", "events", "actuation",
                           "baseline", "flow_rate_lpm"}))
    return result;

  rd.string(doc, "", "name", c.name);
  rd.number(doc, "", "seed", c.seed);
  rd.number(doc, "", "duration", c.duration);
  rd.number(doc, "", "tick", c.tick);
  rd.number(doc, "", "sampling_interval", c.sampling_interval);
  rd.number(doc, "", "flow_rate_lpm", c.flow_rate_lpm);

  WeatherModel weather;
  if (doc.contains("weather")) detail::read_weather(rd, doc["weather"], "weather", weather);

  if (doc.contains("zones")) {
    if (rd.array(doc["zones"], "zones")) {
      for (std::size_t i = 0; i < doc["zones"].size(); ++i) {
        const auto& zj = doc["zones"][i];
        const std::string p = "zones[" + std::to_string(i) + "]";
        ZoneConfig z{0, weather, {}};
        if (!rd.object(zj, p, {"id", "weather", "initial"})) continue;
        rd.number(zj, p, "id", z.id);
        if (zj.contains("weather")) detail::read_weather(rd, zj["weather"], p + ".weather", z.weather);
        if (zj.contains("initial")) {
          const auto& ij = zj["initial"];
          const std::string ip = p + ".initial";
          if (rd.object(ij, ip, {"soil_moisture", "water_level", "air_quality"})) {
            rd.number(ij, ip, "soil_moisture", z.initial.soil_moisture);
            rd.number(ij, ip, "water_level", z.initial.water_level);
            rd.number(ij, ip, "air_quality", z.initial.air_quality);
          }
        }
        z.initial.zone_id = z.id;
        c.zones.push_back(z);
      }
    }
  } else {
    c.zones = default_zones(weather);
  }

  if (doc.contains("gateway")) {
    const auto& g = doc["gateway"];
    if (rd.object(g, "gateway", {"id", "position"})) {
      rd.node_id(g, "gateway", "id", c.gateway.id);
      rd.position(g, "gateway", "position", c.gateway.position);
    }
  }

  if (doc.contains("sensors")) {
    if (rd.array(doc["sensors"], "sensors")) {
      for (std::size_t i = 0; i < doc["sensors"].size(); ++i) {
        const auto& sj = doc["sensors"][i];
        const std::string p = "sensors[" + std::to_string(i) + "]";
        if (!rd.object(sj, p, {"id", "kind", "zone", "position", "battery", "noise_sigma", "wake_threshold"}))
          continue;
        SensorNode s;
        std::string kind;
        rd.string(sj, p, "kind", kind);
        if (auto k = parse_sensor_kind(kind))
          s.kind = *k;
        else
          rd.error(p + ".kind", "unknown sensor kind '" + kind + "'");
        s.wake_threshold = default_wake_threshold(s.kind);
        rd.node_id(sj, p, "id", s.id);
        rd.number(sj, p, "zone", s.zone_id);
        rd.position(sj, p, "position", s.position);
        rd.number(sj, p, "battery", s.battery);
        rd.number(sj, p, "noise_sigma", s.noise_sigma);
        rd.optional_number(sj, p, "wake_threshold", s.wake_threshold);
        c.sensors.push_back(s);
      }
    }
  } else {
    c.sensors = default_sensors();
  }

  if (doc.contains("actuators")) {
    if (rd.array(doc["actuators"], "actuators")) {
      for (std::size_t i = 0; i < doc["actuators"].size(); ++i) {
        const auto& aj = doc["actuators"][i];
        const std::string p = "actuators[" + std::to_string(i) + "]";
        if (!rd.object(aj, p, {"id", "kind", "zone", "position"})) continue;
        ActuatorNode a;
        std::string kind;
        rd.string(aj, p, "kind", kind);
        if (auto k = parse_actuator_kind(kind))
          a.kind = *k;
        else
          rd.error(p + ".kind", "unknown actuator kind '" + kind + "'");
        rd.node_id(aj, p, "id", a.id);
        rd.number(aj, p, "zone", a.zone_id);
        rd.position(aj, p, "position", a.position);
        c.actuators.push_back(a);
      }
    }
  } else {
    c.actuators = default_actuators();
  }

  if (doc.contains("link")) {
    const auto& l = doc["link"];
    if (rd.object(l, "link", {"radio_range", "loss_probability", "per_hop_latency", "max_retries", "radio_band",
                              "tx_power_dbm"})) {
      rd.number(l, "link", "radio_range", c.link.radio_range);
      rd.number(l, "link", "loss_probability", c.link.loss_probability);
      rd.number(l, "link", "per_hop_latency", c.link.per_hop_latency);
      rd.number(l, "link", "max_retries", c.link.max_retries);
      rd.string(l, "link", "radio_band", c.link.radio_band);
      rd.number(l, "link", "tx_power_dbm", c.link.tx_power_dbm);
    }
  }

  if (doc.contains("rules")) {
    RulePatch patch;
    detail::read_rules(rd, doc["rules"], "rules", patch);
    // Merge without validating here; validate(ScenarioConfig) reports every field.
    RuleConfig& r = c.rules;
    if (patch.water_on_below) r.water_on_below = *patch.water_on_below;
    if (patch.water_off_at) r.water_off_at = *patch.water_off_at;
    if (patch.temp_on_at) r.temp_on_at = *patch.temp_on_at;
    if (patch.temp_off_below) r.temp_off_below = *patch.temp_off_below;
    if (patch.fire_at) r.fire_at = *patch.fire_at;
    if (patch.moisture_on_below) r.moisture_on_below = *patch.moisture_on_below;
    if (patch.humidity_warn_below) r.humidity_warn_below = *patch.humidity_warn_below;
    r.air_warn_above = patch.air_warn_above;
  }

  if (doc.contains("energy")) {
    const auto& e = doc["energy"];
    if (rd.object(e, "energy", {"standby_power", "active_power", "tx_energy_per_packet", "relay_energy_per_packet"})) {
      rd.number(e, "energy", "standby_power", c.energy.standby_power);
      rd.number(e, "energy", "active_power", c.energy.active_power);
      rd.number(e, "energy", "tx_energy_per_packet", c.energy.tx_energy_per_packet);
      rd.number(e, "energy", "relay_energy_per_packet", c.energy.relay_energy_per_packet);
    }
  }

  if (doc.contains("actuation")) {
    const auto& a = doc["actuation"];
    if (rd.object(a, "actuation", {"sprinkler_water_rate", "sprinkler_moisture_rate", "pump_moisture_rate",
                                   "fire_suppression_rate", "scare_delay"})) {
      rd.number(a, "actuation", "sprinkler_water_rate", c.actuation.sprinkler_water_rate);
      rd.number(a, "actuation", "sprinkler_moisture_rate", c.actuation.sprinkler_moisture_rate);
      rd.number(a, "actuation", "pump_moisture_rate", c.actuation.pump_moisture_rate);
      rd.number(a, "actuation", "fire_suppression_rate", c.actuation.fire_suppression_rate);
      rd.number(a, "actuation", "scare_delay", c.actuation.scare_delay);
    }
  }

  if (doc.contains("baseline")) {
    const auto& b = doc["baseline"];
    if (rd.object(b, "baseline", {"daily_schedule"}) && b.contains("daily_schedule") &&
        rd.array(b["daily_schedule"], "baseline.daily_schedule")) {
      c.baseline.daily_schedule.clear();
      for (std::size_t i = 0; i < b["daily_schedule"].size(); ++i) {
        const auto& wj = b["daily_schedule"][i];
        const std::string p = "baseline.daily_schedule[" + std::to_string(i) + "]";
        ScheduleWindow w;
        if (!rd.object(wj, p, {"start", "duration"})) continue;
        rd.number(wj, p, "start", w.start);
        rd.number(wj, p, "duration", w.duration);
        c.baseline.daily_schedule.push_back(w);
      }
    }
  }

  if (doc.contains("events") && rd.array(doc["events"], "events")) {
    for (std::size_t i = 0; i < doc["events"].size(); ++i) {
      EnvEvent e;
      detail::read_event(rd, doc["events"][i], "events[" + std::to_string(i) + "]", e);
      c.events.push_back(e);
    }
  }

  if (doc.contains("pairing")) {
    if (rd.array(doc["pairing"], "pairing")) {
      for (std::size_t i = 0; i < doc["pairing"].size(); ++i) {
        const auto& gj = doc["pairing"][i];
        const std::string p = "pairing[" + std::to_string(i) + "]";
        if (!rd.object(gj, p, {"group", "temperature", "water_level", "sprinklers"})) continue;
        PairingGroup g;
        rd.number(gj, p, "group", g.group);
        rd.node_id(gj, p, "temperature", g.temperature_monitor);
        rd.node_id(gj, p, "water_level", g.water_level_monitor);
        if (gj.contains("sprinklers") && rd.array(gj["sprinklers"], p + ".sprinklers")) {
          for (const auto& s : gj["sprinklers"]) {
            if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() > 0)) {
              rd.error(p + ".sprinklers", "expected node ids");
              continue;
            }
            g.sprinklers.push_back(NodeId{s.get<std::uint64_t>()});
          }
        }
        c.pairing.push_back(g);
      }
    }
  } else {
    c.pairing = derive_pairing(c, errs);
  }

  auto more = validate(c);
  errs.insert(errs.end(), more.begin(), more.end());
  if (!errs.empty()) return result;

  // Iteration order everywhere downstream is ascending id.
  std::sort(c.sensors.begin(), c.sensors.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(c.actuators.begin(), c.actuators.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(c.pairing.begin(), c.pairing.end(), [](const auto& a, const auto& b) { return a.group < b.group; });
  result.config = std::move(c);
  return result;
}

inline LoadResult load_scenario(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    return {std::nullopt, {{"document", e.what()}}};
  }
  return load_scenario(doc);
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
  auto result = load_scenario(std::string_view(read_file(path)));
  if (!result.ok()) throw ValidationFailure(result.errors);
  return *result.config;
}

}  // namespace fieldsim
