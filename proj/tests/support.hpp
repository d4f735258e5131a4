#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <string>
#include <vector>

#include "fieldsim/controller.hpp"
#include "fieldsim/scenario.hpp"

namespace testing_support {

using namespace fieldsim;

inline ScenarioConfig default_config() { return *load_scenario(std::string_view("{}")).config; }

inline ScenarioConfig bundled(const std::string& name) {
  return load_scenario_file(std::string(FIELDSIM_SCENARIO_DIR) + "/" + name + ".json");
}

inline SensorReading reading(std::uint64_t node, SensorKind kind, double value, int zone, SimMinute t) {
  return {NodeId{node}, kind, value, zone, t};
}

/// The irrigation rules written out as a decision table, read top to bottom;
/// the first matching row decides. Kept apart from the engine on purpose.
struct OracleRow {
  const char* rule;
  bool (*matches)(double water, double temp, const RuleConfig& r);
  int verdict;  // 1 on, 0 off, -1 keep previous
};

inline const std::vector<OracleRow>& irrigation_table() {
  static const std::vector<OracleRow> rows{
      {"fire", [](double, double t, const RuleConfig& r) { return t >= r.fire_at; }, 1},
      {"low water", [](double w, double, const RuleConfig& r) { return w < r.water_on_below; }, 1},
      {"hot", [](double, double t, const RuleConfig& r) { return t >= r.temp_on_at; }, 1},
      {"full and cool",
       [](double w, double t, const RuleConfig& r) { return w >= r.water_off_at && t <= r.temp_off_below; }, 0},
      {"otherwise", [](double, double, const RuleConfig&) { return true; }, -1},
  };
  return rows;
}

inline bool oracle_sprinklers_on(double water, double temp, bool previous, const RuleConfig& r = {}) {
  for (const auto& row : irrigation_table())
    if (row.matches(water, temp, r)) return row.verdict < 0 ? previous : row.verdict == 1;
  return previous;
}

}  // namespace testing_support
