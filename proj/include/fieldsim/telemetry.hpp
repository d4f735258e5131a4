#pragma once

// Append-only run log, its CSV/JSON exports and the resource-usage summary.
//
// CSV schema (one row per record, log order):
//
//   timestamp,run_id,node_id,zone_id,kind,value,unit
//
// kind is the sensor name for readings ("temperature", "water_level", ...)
// or one of: command, actuator, alert, delivery, drop, energy, dead,
// mutation. For commands and actuator switches `value` is 1/0 and `unit`
// carries the cause; for alerts `unit` carries the alert message; for
// delivery/drop rows `value` is the hop count (or failing hop) and `unit`
// is the direction ("up" toward the gateway, "down" toward an actuator);
// energy rows carry cumulative joules consumed by the node. Values are
// rendered with four decimals.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fieldsim/core.hpp"
#include "json.hpp"

namespace fieldsim {

enum class Direction { Up, Down };

struct DeliveryRecord {
  NodeId node;  // source of an uplink, destination of a downlink
  int zone = 0;
  Direction direction = Direction::Up;
  bool delivered = true;
  int hops = 0;  // hop count when delivered, failing hop when dropped

  friend bool operator==(const DeliveryRecord&, const DeliveryRecord&) = default;
};

struct ActuatorChange {
  NodeId node;
  int zone = 0;
  bool on = false;
  std::string cause;

  friend bool operator==(const ActuatorChange&, const ActuatorChange&) = default;
};

struct EnergySample {
  NodeId node;
  int zone = 0;
  double consumed = 0;  // joules since the start of the run

  friend bool operator==(const EnergySample&, const EnergySample&) = default;
};

struct NodeDown {
  NodeId node;
  int zone = 0;

  friend bool operator==(const NodeDown&, const NodeDown&) = default;
};

/// Operator or injected change applied at a tick boundary.
struct MutationNote {
  NodeId node;
  int zone = 0;
  double value = 0;
  std::string what;  // "override:forced_on", "rules", "injected:fire", ...

  friend bool operator==(const MutationNote&, const MutationNote&) = default;
};

using RecordPayload = std::variant<SensorReading, ActuatorCommand, Alert, DeliveryRecord, ActuatorChange,
                                   EnergySample, NodeDown, MutationNote>;

enum class RecordKind { Reading, Command, Alert, Delivery, Actuator, Energy, Status, Mutation };

inline constexpr RecordKind kAllRecordKinds[] = {RecordKind::Reading,  RecordKind::Command, RecordKind::Alert,
                                                 RecordKind::Delivery, RecordKind::Actuator, RecordKind::Energy,
                                                 RecordKind::Status,   RecordKind::Mutation};

constexpr std::string_view name(RecordKind k) {
  switch (k) {
    case RecordKind::Reading: return "reading";
    case RecordKind::Command: return "command";
    case RecordKind::Alert: return "alert";
    case RecordKind::Delivery: return "delivery";
    case RecordKind::Actuator: return "actuator";
    case RecordKind::Energy: return "energy";
    case RecordKind::Status: return "status";
    case RecordKind::Mutation: return "mutation";
  }
  return "?";
}

inline std::optional<RecordKind> parse_record_kind(std::string_view s) {
  for (auto k : kAllRecordKinds)
    if (name(k) == s) return k;
  return std::nullopt;
}

struct TelemetryRecord {
  SimMinute timestamp = 0;
  std::uint64_t sequence = 0;
  std::string run_id;
  RecordPayload payload;

  RecordKind kind() const { return static_cast<RecordKind>(payload.index()); }
};

/// Flat CSV projection of a record.
struct TelemetryRow {
  SimMinute timestamp = 0;
  std::string run_id;
  NodeId node;
  int zone = 0;
  std::string kind;
  double value = 0;
  std::string unit;

  friend bool operator==(const TelemetryRow&, const TelemetryRow&) = default;
};

inline NodeId record_node(const TelemetryRecord& r) {
  return std::visit(
      [](const auto& p) -> NodeId {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ActuatorCommand>)
          return p.target;
        else if constexpr (std::is_same_v<T, Alert>)
          return p.source;
        else
          return p.node;
      },
      r.payload);
}

inline int record_zone(const TelemetryRecord& r) {
  return std::visit([](const auto& p) { return p.zone; }, r.payload);
}

inline TelemetryRow to_row(const TelemetryRecord& r) {
  TelemetryRow row{r.timestamp, r.run_id, record_node(r), record_zone(r), {}, 0, {}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SensorReading>) {
          row.kind = name(p.kind);
          row.value = p.value;
          row.unit = unit(p.kind);
        } else if constexpr (std::is_same_v<T, ActuatorCommand>) {
          row.kind = "command";
          row.value = p.action == Action::On ? 1 : 0;
          row.unit = p.cause;
        } else if constexpr (std::is_same_v<T, Alert>) {
          row.kind = "alert";
          row.value = p.value;
          row.unit = message(p.kind);
        } else if constexpr (std::is_same_v<T, DeliveryRecord>) {
          row.kind = p.delivered ? "delivery" : "drop";
          row.value = p.hops;
          row.unit = p.direction == Direction::Up ? "up" : "down";
        } else if constexpr (std::is_same_v<T, ActuatorChange>) {
          row.kind = "actuator";
          row.value = p.on ? 1 : 0;
          row.unit = p.cause;
        } else if constexpr (std::is_same_v<T, EnergySample>) {
          row.kind = "energy";
          row.value = p.consumed;
          row.unit = "J";
        } else if constexpr (std::is_same_v<T, NodeDown>) {
          row.kind = "dead";
        } else if constexpr (std::is_same_v<T, MutationNote>) {
          row.kind = "mutation";
          row.value = p.value;
          row.unit = p.what;
        }
      },
      r.payload);
  return row;
}

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Inverse of to_row; `line` is only used for error messages.
inline TelemetryRecord from_row(const TelemetryRow& row, std::size_t line = 0) {
  TelemetryRecord r{row.timestamp, 0, row.run_id, {}};
  const double v = quantize(row.value);
  auto as_bool = [&] {
    if (v != 0 && v != 1) throw ParseError(line, "expected 0 or 1 in value column for " + row.kind);
    return v == 1;
  };
  auto direction = [&] {
    if (row.unit == "up") return Direction::Up;
    if (row.unit == "down") return Direction::Down;
    throw ParseError(line, "unknown direction '" + row.unit + "'");
  };
  if (auto sk = parse_sensor_kind(row.kind)) {
    r.payload = SensorReading{row.node, *sk, v, row.zone, row.timestamp};
  } else if (row.kind == "command") {
    r.payload = ActuatorCommand{row.node, as_bool() ? Action::On : Action::Off, row.unit, row.timestamp, row.zone, {}};
  } else if (row.kind == "alert") {
    auto ak = alert_kind_from_message(row.unit);
    if (!ak) throw ParseError(line, "unknown alert message '" + row.unit + "'");
    r.payload = Alert{*ak, row.node, row.zone, v, row.timestamp};
  } else if (row.kind == "delivery" || row.kind == "drop") {
    r.payload = DeliveryRecord{row.node, row.zone, direction(), row.kind == "delivery", static_cast<int>(v)};
  } else if (row.kind == "actuator") {
    r.payload = ActuatorChange{row.node, row.zone, as_bool(), row.unit};
  } else if (row.kind == "energy") {
    r.payload = EnergySample{row.node, row.zone, v};
  } else if (row.kind == "dead") {
    r.payload = NodeDown{row.node, row.zone};
  } else if (row.kind == "mutation") {
    r.payload = MutationNote{row.node, row.zone, v, row.unit};
  } else {
    throw ParseError(line, "unknown record kind '" + row.kind + "'");
  }
  return r;
}

class OrderViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidRange : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RecordFilter {
  std::optional<RecordKind> kind;
  std::optional<NodeId> node;
  std::optional<int> zone;
  std::optional<AlertKind> alert;  // narrows Alert records

  bool matches(const TelemetryRecord& r) const {
    if (kind && r.kind() != *kind) return false;
    if (node && record_node(r) != *node) return false;
    if (zone && record_zone(r) != *zone) return false;
    if (alert) {
      const auto* a = std::get_if<Alert>(&r.payload);
      if (!a || a->kind != *alert) return false;
    }
    return true;
  }
};

/// Single-writer log. Records are ordered by (timestamp, sequence).
class TelemetryStore {
 public:
  TelemetryStore() = default;
  explicit TelemetryStore(std::string run_id) : run_id_(std::move(run_id)) {}

  const std::string& run_id() const { return run_id_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const std::vector<TelemetryRecord>& records() const { return records_; }

  /// Stamps the sequence number and, if unset, the run id.
  const TelemetryRecord& append(TelemetryRecord record) {
    if (!records_.empty() && record.timestamp < records_.back().timestamp)
      throw OrderViolation("record at t=" + std::to_string(record.timestamp) + " after t=" +
                           std::to_string(records_.back().timestamp));
    record.sequence = records_.size();
    if (record.run_id.empty()) record.run_id = run_id_;
    records_.push_back(std::move(record));
    return records_.back();
  }

  const TelemetryRecord& append(SimMinute t, RecordPayload payload) {
    return append(TelemetryRecord{t, 0, run_id_, std::move(payload)});
  }

  /// Records with from <= timestamp <= to that match `filter`.
  std::vector<TelemetryRecord> query(SimMinute from, SimMinute to, const RecordFilter& filter = {}) const {
    if (from > to)
      throw InvalidRange("from (" + std::to_string(from) + ") > to (" + std::to_string(to) + ")");
    auto first = std::lower_bound(records_.begin(), records_.end(), from,
                                  [](const TelemetryRecord& r, SimMinute t) { return r.timestamp < t; });
    std::vector<TelemetryRecord> out;
    for (auto it = first; it != records_.end() && it->timestamp <= to; ++it)
      if (filter.matches(*it)) out.push_back(*it);
    return out;
  }

 private:
  std::string run_id_;
  std::vector<TelemetryRecord> records_;
};

inline constexpr std::string_view kCsvHeader = "timestamp,run_id,node_id,zone_id,kind,value,unit";

namespace csv {

inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Splits one line; returns nullopt on an unterminated quote.
inline std::optional<std::vector<std::string>> split(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) return std::nullopt;
  return fields;
}

template <class T>
bool parse_number(const std::string& s, T& out) {
  if (s.empty()) return false;
  std::size_t used = 0;
  try {
    if constexpr (std::is_floating_point_v<T>)
      out = static_cast<T>(std::stod(s, &used));
    else if constexpr (std::is_unsigned_v<T>)
      out = static_cast<T>(std::stoull(s, &used));
    else
      out = static_cast<T>(std::stoll(s, &used));
  } catch (const std::exception&) {
    return false;
  }
  return used == s.size();
}

}  // namespace csv

inline std::string to_csv_line(const TelemetryRow& row) {
  std::string line = std::to_string(row.timestamp);
  line += ',' + csv::escape(row.run_id);
  line += ',' + to_string(row.node);
  line += ',' + std::to_string(row.zone);
  line += ',' + csv::escape(row.kind);
  line += ',' + format_fixed4(row.value);
  line += ',' + csv::escape(row.unit);
  return line;
}

/// Record kinds to include in an export; empty means all.
using RecordSelector = std::set<RecordKind>;

template <class Range>
std::string export_csv(const Range& records, const RecordSelector& selector = {}) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const TelemetryRecord& r : records) {
    if (!selector.empty() && !selector.contains(r.kind())) continue;
    out += to_csv_line(to_row(r));
    out += '\n';
  }
  return out;
}

inline std::string export_csv(const TelemetryStore& store, const RecordSelector& selector = {}) {
  return export_csv(store.records(), selector);
}

inline nlohmann::ordered_json to_json(const TelemetryRow& row) {
  return {{"timestamp", row.timestamp}, {"run_id", row.run_id}, {"node_id", row.node.tag},
          {"zone_id", row.zone},        {"kind", row.kind},     {"value", quantize(row.value)},
          {"unit", row.unit}};
}

template <class Range>
nlohmann::ordered_json export_json(const Range& records, const RecordSelector& selector = {}) {
  auto out = nlohmann::ordered_json::array();
  for (const TelemetryRecord& r : records)
    if (selector.empty() || selector.contains(r.kind())) out.push_back(to_json(to_row(r)));
  return out;
}

inline std::vector<TelemetryRecord> parse_csv(std::string_view text) {
  std::vector<TelemetryRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    const bool terminated = nl != std::string_view::npos;
    std::string_view line = text.substr(pos, terminated ? nl - pos : std::string_view::npos);
    pos = terminated ? nl + 1 : text.size();
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!saw_header) {
      if (line != kCsvHeader) throw ParseError(line_no, "expected header '" + std::string(kCsvHeader) + "'");
      saw_header = true;
      continue;
    }
    if (line.empty()) {
      if (pos >= text.size()) break;
      throw ParseError(line_no, "empty row");
    }
    auto fields = csv::split(line);
    if (!fields) throw ParseError(line_no, "unterminated quoted field");
    if (fields->size() != 7)
      throw ParseError(line_no, "expected 7 fields, found " + std::to_string(fields->size()));
    TelemetryRow row;
    const auto& f = *fields;
    if (!csv::parse_number(f[0], row.timestamp)) throw ParseError(line_no, "bad timestamp '" + f[0] + "'");
    row.run_id = f[1];
    if (!csv::parse_number(f[2], row.node.tag)) throw ParseError(line_no, "bad node_id '" + f[2] + "'");
    if (!csv::parse_number(f[3], row.zone)) throw ParseError(line_no, "bad zone_id '" + f[3] + "'");
    row.kind = f[4];
    if (!csv::parse_number(f[5], row.value)) throw ParseError(line_no, "bad value '" + f[5] + "'");
    row.unit = f[6];
    auto record = from_row(row, line_no);
    if (!out.empty() && record.timestamp < out.back().timestamp)
      throw ParseError(line_no, "timestamp goes backwards");
    record.sequence = out.size();
    out.push_back(std::move(record));
  }
  if (!saw_header) throw ParseError(1, "missing header");
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Resource-usage summary

struct ScheduleWindow {
  SimMinute start = 0;  // minute of day
  SimMinute duration = 0;

  friend bool operator==(const ScheduleWindow&, const ScheduleWindow&) = default;
};

/// Fixed daily sprinkler schedule used as the comparison baseline.
struct BaselinePolicy {
  std::vector<ScheduleWindow> daily_schedule{{360, 30}, {1080, 30}};

  friend bool operator==(const BaselinePolicy&, const BaselinePolicy&) = default;
};

struct MetricsContext {
  std::vector<NodeId> sprinklers;
  double flow_rate_lpm = 8;  // liters per minute per sprinkler
  BaselinePolicy baseline;
};

struct SdgMetricsReport {
  double horizon_minutes = 0;
  double water_used = 0;           // liters
  double water_used_baseline = 0;  // liters
  double water_saved_fraction = 0;
  double energy_consumed = 0;  // joules
  std::int64_t samples_delivered = 0;
  std::int64_t samples_lost = 0;
  std::map<std::string, std::int64_t> alarm_counts;
  double sprinkler_duty_fraction = 0;
  std::map<NodeId, double> uptime_fraction;

  friend bool operator==(const SdgMetricsReport&, const SdgMetricsReport&) = default;
};

/// Minutes of the repeating daily schedule that fall inside [0, horizon).
inline SimMinute scheduled_minutes(const BaselinePolicy& policy, SimMinute horizon) {
  SimMinute total = 0;
  for (SimMinute day = 0; day < horizon; day += 1440) {
    for (const auto& w : policy.daily_schedule) {
      const SimMinute a = std::min(day + w.start, horizon);
      const SimMinute b = std::min(day + w.start + w.duration, horizon);
      total += b - a;
    }
  }
  return total;
}

/// Pure fold over a log. The horizon is the last record's timestamp.
template <class Range>
SdgMetricsReport summarize(const Range& records, const MetricsContext& ctx) {
  SdgMetricsReport rep;
  for (auto k : kAllAlertKinds) rep.alarm_counts[std::string(name(k))] = 0;

  SimMinute horizon = 0;
  std::map<NodeId, std::optional<SimMinute>> on_since;
  for (NodeId s : ctx.sprinklers) on_since[s] = std::nullopt;
  SimMinute on_minutes = 0;
  std::map<NodeId, double> energy;
  std::map<NodeId, std::optional<SimMinute>> died;

  for (const TelemetryRecord& r : records) {
    horizon = std::max(horizon, r.timestamp);
    if (const auto* a = std::get_if<ActuatorChange>(&r.payload)) {
      auto it = on_since.find(a->node);
      if (it == on_since.end()) continue;
      if (a->on && !it->second) it->second = r.timestamp;
      if (!a->on && it->second) {
        on_minutes += r.timestamp - *it->second;
        it->second.reset();
      }
    } else if (const auto* d = std::get_if<DeliveryRecord>(&r.payload)) {
      if (d->direction == Direction::Up) ++(d->delivered ? rep.samples_delivered : rep.samples_lost);
    } else if (const auto* al = std::get_if<Alert>(&r.payload)) {
      ++rep.alarm_counts[std::string(name(al->kind))];
    } else if (const auto* e = std::get_if<EnergySample>(&r.payload)) {
      energy[e->node] = e->consumed;
      died.try_emplace(e->node);
    } else if (const auto* dn = std::get_if<NodeDown>(&r.payload)) {
      died[dn->node] = r.timestamp;
    }
  }
  for (const auto& [id, since] : on_since)
    if (since) on_minutes += horizon - *since;

  rep.horizon_minutes = static_cast<double>(horizon);
  rep.water_used = static_cast<double>(on_minutes) * ctx.flow_rate_lpm;
  rep.water_used_baseline = static_cast<double>(scheduled_minutes(ctx.baseline, horizon)) *
                            static_cast<double>(ctx.sprinklers.size()) * ctx.flow_rate_lpm;
  rep.water_saved_fraction = rep.water_used_baseline > 0 ? 1.0 - rep.water_used / rep.water_used_baseline : 0.0;
  for (const auto& [id, j] : energy) rep.energy_consumed += j;
  const double sprinkler_minutes = static_cast<double>(ctx.sprinklers.size()) * static_cast<double>(horizon);
  rep.sprinkler_duty_fraction = sprinkler_minutes > 0 ? static_cast<double>(on_minutes) / sprinkler_minutes : 0.0;
  for (const auto& [id, when] : died) {
    if (horizon == 0)
      rep.uptime_fraction[id] = when ? 0.0 : 1.0;
    else
      rep.uptime_fraction[id] = when ? static_cast<double>(*when) / static_cast<double>(horizon) : 1.0;
  }
  return rep;
}

inline nlohmann::ordered_json to_json(const SdgMetricsReport& r) {
  nlohmann::ordered_json alarms = nlohmann::ordered_json::object();
  for (const auto& [k, n] : r.alarm_counts) alarms[k] = n;
  nlohmann::ordered_json uptime = nlohmann::ordered_json::object();
  for (const auto& [id, f] : r.uptime_fraction) uptime[to_string(id)] = f;
  return {{"horizon_minutes", r.horizon_minutes},
          {"water_used_liters", r.water_used},
          {"water_used_baseline_liters", r.water_used_baseline},
          {"water_saved_fraction", r.water_saved_fraction},
          {"energy_consumed_joules", r.energy_consumed},
          {"samples_delivered", r.samples_delivered},
          {"samples_lost", r.samples_lost},
          {"alarm_counts", alarms},
          {"sprinkler_duty_fraction", r.sprinkler_duty_fraction},
          {"uptime_fraction", uptime}};
}

inline std::string to_text(const SdgMetricsReport& r) {
  std::ostringstream out;
  auto row = [&](std::string_view label, const std::string& v) {
    out << label;
    for (std::size_t i = label.size(); i < 34; ++i) out << ' ';
    out << v << '\n';
  };
  out << "Resource usage report\n";
  out << "---------------------\n";
  row("horizon (min)", format_fixed4(r.horizon_minutes));
  row("water used (L)", format_fixed4(r.water_used));
  row("water baseline (L)", format_fixed4(r.water_used_baseline));
  row("water saved [SDG 12.2]", format_fixed4(r.water_saved_fraction * 100) + " %");
  row("energy consumed (J) [SDG 9.4]", format_fixed4(r.energy_consumed));
  row("samples delivered", std::to_string(r.samples_delivered));
  row("samples lost", std::to_string(r.samples_lost));
  row("sprinkler duty [SDG 8.2]", format_fixed4(r.sprinkler_duty_fraction * 100) + " %");
  for (const auto& [k, n] : r.alarm_counts) row("alarms: " + k, std::to_string(n));
  for (const auto& [id, f] : r.uptime_fraction) row("uptime node " + to_string(id), format_fixed4(f * 100) + " %");
  return out.str();
}

}  // namespace fieldsim
