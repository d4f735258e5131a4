#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "fieldsim/telemetry.hpp"

using namespace fieldsim;

namespace {

SensorReading temp_reading(double v, SimMinute t) { return {NodeId{101}, SensorKind::Temperature, v, 1, t}; }

std::string last_line(const std::string& text) {
  auto body = text.substr(0, text.size() - 1);
  return body.substr(body.rfind('\n') + 1);
}

RecordPayload random_payload(std::mt19937_64& rng, SimMinute t) {
  std::uniform_int_distribution<int> pick(0, 7), node(1, 999), zone(0, 3);
  std::uniform_real_distribution<double> val(-100, 1000);
  const NodeId id{static_cast<std::uint64_t>(node(rng))};
  const int z = zone(rng);
  const double v = quantize(val(rng));
  switch (pick(rng)) {
    case 0: return SensorReading{id, kAllSensorKinds[node(rng) % 7], v, z, t};
    case 1: return ActuatorCommand{id, node(rng) % 2 ? Action::On : Action::Off, "water<5", t, z, {}};
    case 2: return Alert{kAllAlertKinds[node(rng) % 5], id, z, v, t};
    case 3: return DeliveryRecord{id, z, node(rng) % 2 ? Direction::Up : Direction::Down, node(rng) % 2 == 0, z};
    case 4: return ActuatorChange{id, z, node(rng) % 2 == 0, "manual"};
    case 5: return EnergySample{id, z, std::abs(v)};
    case 6: return NodeDown{id, z};
    default: return MutationNote{id, z, v, "override:forced_on"};
  }
}

}  // namespace

TEST(Store, AppendAssignsSequence) {
  TelemetryStore s("run-1");
  EXPECT_EQ(s.append(0, temp_reading(30, 0)).sequence, 0u);
  EXPECT_EQ(s.size(), 1u);
  const auto& second = s.append(0, temp_reading(31, 0));
  EXPECT_EQ(second.sequence, 1u);
  EXPECT_EQ(second.run_id, "run-1");
  EXPECT_EQ(s.size(), 2u);
}

TEST(Store, RejectsOutOfOrder) {
  TelemetryStore s("r");
  s.append(10, temp_reading(30, 10));
  EXPECT_THROW(s.append(9, temp_reading(30, 9)), OrderViolation);
  EXPECT_EQ(s.size(), 1u);
}

TEST(Store, QueryRangeAndFilter) {
  TelemetryStore s("r");
  for (SimMinute t = 0; t <= 100; t += 10) {
    s.append(t, temp_reading(30, t));
    if (t == 50) s.append(t, Alert{AlertKind::Fire, NodeId{101}, 1, 80, t});
  }
  EXPECT_EQ(s.query(0, 1000).size(), s.size());
  EXPECT_EQ(s.query(20, 40).size(), 3u);
  EXPECT_TRUE(s.query(11, 19).empty());
  RecordFilter alerts{RecordKind::Alert};
  auto only = s.query(0, 100, alerts);
  ASSERT_EQ(only.size(), 1u);
  EXPECT_EQ(only[0].timestamp, 50);
  RecordFilter other_zone;
  other_zone.zone = 2;
  EXPECT_TRUE(s.query(0, 100, other_zone).empty());
  EXPECT_THROW(s.query(5, 4), InvalidRange);
}

TEST(Csv, EmptyStoreIsHeaderOnly) {
  EXPECT_EQ(export_csv(TelemetryStore("r")), "timestamp,run_id,node_id,zone_id,kind,value,unit\n");
}

TEST(Csv, TemperatureRowFormat) {
  TelemetryStore s("default-42");
  s.append(840, temp_reading(37.48, 840));
  EXPECT_EQ(last_line(export_csv(s)), "840,default-42,101,1,temperature,37.4800,C");
}

TEST(Csv, AlertMessageWithPunctuationSurvives) {
  TelemetryStore s("r");
  s.append(5, Alert{AlertKind::Fire, NodeId{101}, 1, 77, 5});
  s.append(5, ActuatorCommand{NodeId{401}, Action::On, "water>=10&temp<=25", 5, 1, {}});
  const auto back = parse_csv(export_csv(s));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(std::get<Alert>(back[0].payload).kind, AlertKind::Fire);
  EXPECT_EQ(std::get<ActuatorCommand>(back[1].payload).cause, "water>=10&temp<=25");
}

TEST(Csv, RoundTripRandomLogs) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    TelemetryStore s("trial-" + std::to_string(trial));
    SimMinute t = 0;
    for (int i = 0; i < 200; ++i) {
      t += static_cast<SimMinute>(rng() % 3);
      s.append(t, random_payload(rng, t));
    }
    const std::string csv = export_csv(s);
    const auto back = parse_csv(csv);
    ASSERT_EQ(back.size(), s.size());
    for (std::size_t i = 0; i < back.size(); ++i) ASSERT_EQ(to_row(back[i]), to_row(s.records()[i])) << i;
    EXPECT_EQ(export_csv(back), csv);
  }
}

TEST(Csv, MalformedRowNamesLine) {
  const std::string text =
      "timestamp,run_id,node_id,zone_id,kind,value,unit\n"
      "0,r,101,1,temperature,30.0000,C\n"
      "30,r,101,1,temperature,abc,C\n";
  try {
    parse_csv(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Csv, TruncatedRowNamesLine) {
  const std::string text =
      "timestamp,run_id,node_id,zone_id,kind,value,unit\n"
      "0,r,101,1,temperature,30.0000,C\n"
      "30,r,101,1,temper";
  try {
    parse_csv(text);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Csv, BadHeaderIsLineOne) {
  try {
    parse_csv("time,node\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(Csv, SelectorRestrictsKinds) {
  TelemetryStore s("r");
  s.append(0, temp_reading(30, 0));
  s.append(0, Alert{AlertKind::Fire, NodeId{101}, 1, 80, 0});
  const auto csv = export_csv(s, RecordSelector{RecordKind::Alert});
  EXPECT_EQ(parse_csv(csv).size(), 1u);
}

TEST(Files, WriteFailureNamesPath) {
  try {
    write_file("/nonexistent-dir/x/telemetry.csv", "x");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x/telemetry.csv"), std::string::npos);
  }
}

TEST(Summary, NoSprinklingNoWater) {
  TelemetryStore s("r");
  s.append(0, temp_reading(30, 0));
  s.append(1440, temp_reading(30, 1440));
  MetricsContext ctx{{NodeId{401}}, 8, {}};
  const auto r = summarize(s.records(), ctx);
  EXPECT_EQ(r.water_used, 0);
  EXPECT_EQ(r.water_used_baseline, 2 * 30 * 8);
  EXPECT_EQ(r.water_saved_fraction, 1);
}

TEST(Summary, SixtyMinutesAtEightLitres) {
  TelemetryStore s("r");
  s.append(100, ActuatorChange{NodeId{401}, 1, true, "water<5"});
  s.append(160, ActuatorChange{NodeId{401}, 1, false, "water>=10&temp<=25"});
  s.append(200, temp_reading(30, 200));
  MetricsContext ctx{{NodeId{401}}, 8, {}};
  EXPECT_EQ(summarize(s.records(), ctx).water_used, 480);
}

TEST(Summary, EmptyLogIsAllZero) {
  MetricsContext ctx{{NodeId{401}, NodeId{402}}, 8, {}};
  const auto r = summarize(std::vector<TelemetryRecord>{}, ctx);
  EXPECT_EQ(r.water_used, 0);
  EXPECT_EQ(r.water_used_baseline, 0);
  EXPECT_EQ(r.water_saved_fraction, 0);
  EXPECT_EQ(r.energy_consumed, 0);
  EXPECT_EQ(r.samples_delivered + r.samples_lost, 0);
  for (const auto& [k, n] : r.alarm_counts) EXPECT_EQ(n, 0) << k;
}

TEST(Summary, CountsDeliveriesAlarmsAndEnergy) {
  TelemetryStore s("r");
  s.append(0, DeliveryRecord{NodeId{101}, 1, Direction::Up, true, 1});
  s.append(0, DeliveryRecord{NodeId{102}, 2, Direction::Up, false, 1});
  s.append(0, DeliveryRecord{NodeId{401}, 1, Direction::Down, false, 1});
  s.append(0, EnergySample{NodeId{101}, 1, 1.5});
  s.append(30, Alert{AlertKind::Fire, NodeId{101}, 1, 80, 30});
  s.append(30, EnergySample{NodeId{101}, 1, 2.5});
  s.append(30, EnergySample{NodeId{102}, 2, 1.0});
  s.append(40, NodeDown{NodeId{102}, 2});
  s.append(80, temp_reading(30, 80));
  const auto r = summarize(s.records(), MetricsContext{});
  EXPECT_EQ(r.samples_delivered, 1);
  EXPECT_EQ(r.samples_lost, 1);
  EXPECT_EQ(r.alarm_counts.at("fire"), 1);
  EXPECT_DOUBLE_EQ(r.energy_consumed, 3.5);
  EXPECT_DOUBLE_EQ(r.uptime_fraction.at(NodeId{102}), 0.5);
  EXPECT_DOUBLE_EQ(r.uptime_fraction.at(NodeId{101}), 1.0);
}

TEST(Summary, PureFold) {
  std::mt19937_64 rng(3);
  TelemetryStore s("r");
  for (SimMinute t = 0; t < 500; ++t) s.append(t, random_payload(rng, t));
  MetricsContext ctx{{NodeId{1}, NodeId{2}}, 8, {}};
  EXPECT_EQ(summarize(s.records(), ctx), summarize(s.records(), ctx));
  EXPECT_EQ(to_json(summarize(parse_csv(export_csv(s)), ctx)), to_json(summarize(s.records(), ctx)));
}

TEST(Summary, BaselineScheduleAcrossDays) {
  BaselinePolicy p;
  EXPECT_EQ(scheduled_minutes(p, 1440), 60);
  EXPECT_EQ(scheduled_minutes(p, 2880), 120);
  EXPECT_EQ(scheduled_minutes(p, 375), 15);
  EXPECT_EQ(scheduled_minutes(p, 0), 0);
}
