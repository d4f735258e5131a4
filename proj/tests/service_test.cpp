#include <gtest/gtest.h>

#include <thread>

#include "fieldsim/http_api.hpp"
#include "fieldsim/service.hpp"
#include "support.hpp"

using namespace fieldsim;
using namespace testing_support;
using namespace std::chrono_literals;

namespace {

ServiceOptions manual() {
  ServiceOptions o;
  o.manual = true;
  return o;
}

bool has_alert(const Snapshot& s, AlertKind k) {
  return std::any_of(s.active_alerts.begin(), s.active_alerts.end(), [&](const Alert& a) { return a.kind == k; });
}

bool actuator_on(const Snapshot& s, NodeId id) {
  for (const auto& a : s.actuators)
    if (a.id == id) return a.is_on;
  return false;
}

std::vector<ActuatorCommand> commands_in(const std::vector<TelemetryRecord>& recs) {
  std::vector<ActuatorCommand> out;
  for (const auto& r : recs)
    if (const auto* c = std::get_if<ActuatorCommand>(&r.payload)) out.push_back(*c);
  return out;
}

}  // namespace

TEST(Service, StartsAtTickZero) {
  GatewayService svc;
  svc.start(bundled("default"), manual());
  const auto s = svc.get_state();
  EXPECT_EQ(s.tick, 0);
  ASSERT_EQ(s.zones.size(), 2u);
  EXPECT_EQ(s.zones[0].water_level, 8.0);
  EXPECT_EQ(s.latest_readings.size(), 6u);
  EXPECT_EQ(s.sensors.size(), 6u);
}

TEST(Service, StopEndsRun) {
  GatewayService svc;
  svc.start(bundled("default"), manual());
  svc.stop();
  EXPECT_THROW(svc.get_state(), NotRunning);
  EXPECT_THROW(svc.post_override(NodeId{401}, OverrideMode::ForcedOn), NotRunning);
}

TEST(Service, FireShowsInState) {
  GatewayService svc;
  svc.start(bundled("fire"), manual());
  svc.advance(300);
  EXPECT_TRUE(has_alert(svc.get_state(), AlertKind::Fire));
  EXPECT_TRUE(actuator_on(svc.get_state(), NodeId{401}));
}

TEST(Service, RejectsInvertedPatch) {
  GatewayService svc;
  svc.start(bundled("default"), manual());
  RulePatch p;
  p.water_on_below = 11;
  try {
    svc.post_rule_patch(p);
    FAIL();
  } catch (const ValidationFailure& e) {
    EXPECT_EQ(e.errors()[0].field, "rules.water_on_below");
  }
}

TEST(Service, QueuedPatchesValidateAgainstProjectedRules) {
  GatewayService svc;
  svc.start(bundled("default"), manual());
  RulePatch raise_off;
  raise_off.water_off_at = 14;
  svc.post_rule_patch(raise_off);
  RulePatch raise_on;
  raise_on.water_on_below = 12;  // valid only after the first patch
  EXPECT_NO_THROW(svc.post_rule_patch(raise_on));
  svc.advance();
  EXPECT_EQ(svc.get_state().rules.water_on_below, 12);
}

TEST(Service, InjectedIntrusionSoundsBuzzer) {
  GatewayService svc;
  svc.start(bundled("default"), manual());
  svc.advance(99);  // next tick is 100
  svc.post_event({EventKind::AnimalIntrusion, 2, 0, 120}, true);
  svc.advance(1);
  EXPECT_TRUE(svc.get_state().zones[1].intruder_present);
  // Detected at the next scheduled sample (t=120).
  svc.advance(20);
  const auto cmds = commands_in(svc.query(100, 120));
  ASSERT_EQ(cmds.size(), 1u);
  EXPECT_EQ(cmds[0].target, NodeId{501});
  EXPECT_EQ(cmds[0].timestamp, 120);
  EXPECT_TRUE(actuator_on(svc.get_state(), NodeId{501}));
  RecordFilter notes{RecordKind::Mutation};
  const auto muts = svc.query(0, 200, notes);
  ASSERT_EQ(muts.size(), 1u);
  EXPECT_EQ(std::get<MutationNote>(muts[0].payload).what, "injected:animal_intrusion");
}

TEST(Service, ForcedOnDuringQuietPeriod) {
  GatewayService svc;
  svc.start(bundled("default"), manual());
  svc.advance(50);
  svc.post_override(NodeId{403}, OverrideMode::ForcedOn);
  EXPECT_FALSE(actuator_on(svc.get_state(), NodeId{403}));  // not applied mid-tick
  svc.advance();
  EXPECT_TRUE(actuator_on(svc.get_state(), NodeId{403}));
  const auto cmds = commands_in(svc.query(51, 51));
  ASSERT_EQ(cmds.size(), 1u);
  EXPECT_EQ(cmds[0].cause, "manual");
  EXPECT_EQ(svc.get_state().overrides.at(NodeId{403}), OverrideMode::ForcedOn);
}

TEST(Service, UnknownOverrideTarget) {
  GatewayService svc;
  svc.start(bundled("default"), manual());
  EXPECT_THROW(svc.post_override(NodeId{12345}, OverrideMode::ForcedOn), NotFound);
}

TEST(Service, MutationsRejectedAfterFinish) {
  GatewayService svc;
  svc.start(bundled("default"), manual());
  svc.advance(5000);
  EXPECT_TRUE(svc.finished());
  EXPECT_THROW(svc.post_rule_patch({}), NotRunning);
  EXPECT_NO_THROW(svc.get_state());
}

TEST(Stream, OneFramePerTickInOrder) {
  GatewayService svc;
  svc.start(bundled("default"), manual());
  auto sub = svc.subscribe();
  svc.advance(10);
  std::uint64_t last_seq = 0;
  for (SimMinute t = 1; t <= 10; ++t) {
    auto p = sub->next(0ms);
    ASSERT_EQ(p.status, Subscription::Status::Frame);
    EXPECT_EQ(p.frame->tick, t);
    EXPECT_GT(p.frame->seq, last_seq);
    last_seq = p.frame->seq;
  }
  EXPECT_EQ(sub->next(0ms).status, Subscription::Status::Timeout);
}

TEST(Stream, BackfillSplicesOntoStream) {
  GatewayService svc;
  svc.start(bundled("default"), manual());
  svc.advance(40);
  auto sub = svc.subscribe();
  const SimMinute resume = svc.next_tick();
  auto backfill = svc.query(0, resume - 1);
  svc.advance(40);
  std::vector<TelemetryRecord> spliced = backfill;
  while (true) {
    auto p = sub->next(0ms);
    if (p.status != Subscription::Status::Frame) break;
    spliced.insert(spliced.end(), p.frame->records.begin(), p.frame->records.end());
  }
  const auto full = svc.query(0, 1440);
  ASSERT_EQ(spliced.size(), full.size());
  for (std::size_t i = 0; i < full.size(); ++i) EXPECT_EQ(spliced[i].sequence, full[i].sequence);
}

TEST(Stream, SlowClientIsDisconnected) {
  GatewayService svc;
  ServiceOptions o = manual();
  o.subscriber_capacity = 3;
  svc.start(bundled("default"), o);
  auto sub = svc.subscribe();
  svc.advance(5);
  EXPECT_EQ(sub->next(0ms).status, Subscription::Status::Overflow);
  EXPECT_TRUE(sub->disconnected());
}

TEST(Stream, EndsWithRun) {
  GatewayService svc;
  svc.start(bundled("default"), manual());
  auto sub = svc.subscribe();
  svc.advance(5000);
  int frames = 0;
  Subscription::Poll p;
  while ((p = sub->next(0ms)).status == Subscription::Status::Frame) ++frames;
  EXPECT_EQ(frames, 1440);
  EXPECT_EQ(p.status, Subscription::Status::Ended);
}

TEST(Service, PacedRunAdvancesWithWallClock) {
  GatewayService svc;
  ServiceOptions o;
  o.pace = 200;  // 5 ms per sim-minute
  svc.start(bundled("default"), o);
  auto sub = svc.subscribe();
  std::vector<SimMinute> ticks;
  while (ticks.size() < 10) {
    auto p = sub->next(2000ms);
    ASSERT_EQ(p.status, Subscription::Status::Frame);
    ticks.push_back(p.frame->tick);
  }
  for (std::size_t i = 1; i < ticks.size(); ++i) EXPECT_EQ(ticks[i], ticks[i - 1] + 1);
  svc.stop();
}

TEST(Service, UnpacedMatchesBatch) {
  for (const char* name : {"default", "lossy", "full"}) {
    const auto cfg = bundled(name);
    GatewayService svc;
    ServiceOptions o;
    o.pace = 0;
    svc.start(cfg, o);
    svc.wait_until_finished();
    EXPECT_EQ(svc.export_csv(), export_csv(run(cfg).telemetry)) << name;
  }
}

// ---------------------------------------------------------------------------
// HTTP

class Http : public ::testing::Test {
 protected:
  void SetUp() override {
    svc.start(bundled("fire"), manual());
    mount_api(server, svc);
    port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  void TearDown() override {
    server.stop();
    thread.join();
    svc.stop();
  }
  httplib::Client client() { return httplib::Client("127.0.0.1", port); }
  static nlohmann::json body(const httplib::Result& r) { return nlohmann::json::parse(r->body); }

  GatewayService svc;
  httplib::Server server;
  int port = 0;
  std::thread thread;
};

TEST_F(Http, StateSnapshot) {
  svc.advance(300);
  auto r = client().Get("/state");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const auto j = body(r);
  EXPECT_EQ(j["tick"], 300);
  EXPECT_EQ(j["zones"].size(), 2u);
  bool fire = false;
  for (const auto& a : j["active_alerts"]) fire |= a["message"] == "FIRE !EVACUATE!!";
  EXPECT_TRUE(fire);
  EXPECT_EQ(j["rules"]["water_on_below"], 5);
}

TEST_F(Http, TelemetryQuery) {
  svc.advance(300);
  auto r = client().Get("/telemetry?from=0&to=400&kind=alert");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const auto j = body(r);
  ASSERT_EQ(j.size(), 1u);
  EXPECT_EQ(j[0]["unit"], "FIRE !EVACUATE!!");
  EXPECT_EQ(j[0]["timestamp"], 300);

  auto bad = client().Get("/telemetry?from=10&to=5");
  EXPECT_EQ(bad->status, 400);
  auto kind = client().Get("/telemetry?kind=nonsense");
  EXPECT_EQ(kind->status, 400);
  EXPECT_EQ(body(kind)["errors"][0]["field"], "kind");
  auto node = client().Get("/telemetry?node=201&to=0");
  EXPECT_EQ(body(node).size(), 3u);  // delivery, reading, energy
}

TEST_F(Http, RulePatchValidation) {
  auto bad = client().Post("/rules", R"({"water_on_below": 11})", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 422);
  EXPECT_EQ(body(bad)["errors"][0]["field"], "rules.water_on_below");
  auto ok = client().Post("/rules", R"({"water_on_below": 6})", "application/json");
  EXPECT_EQ(ok->status, 202);
  svc.advance();
  EXPECT_EQ(svc.get_state().rules.water_on_below, 6);
  auto junk = client().Post("/rules", "not json", "application/json");
  EXPECT_EQ(junk->status, 400);
}

TEST_F(Http, OverrideEndpoint) {
  auto ok = client().Post("/override", R"({"target": 403, "mode": "forced_on"})", "application/json");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 202);
  svc.advance();
  EXPECT_TRUE(actuator_on(svc.get_state(), NodeId{403}));
  auto missing = client().Post("/override", R"({"target": 999, "mode": "forced_on"})", "application/json");
  EXPECT_EQ(missing->status, 404);
  auto mode = client().Post("/override", R"({"target": 403, "mode": "sideways"})", "application/json");
  EXPECT_EQ(mode->status, 422);
  EXPECT_EQ(body(mode)["errors"][0]["field"], "mode");
}

TEST_F(Http, EventEndpoint) {
  auto weak = client().Post("/events", R"({"kind": "fire", "zone": 2, "duration": 30, "magnitude": 2})",
                            "application/json");
  ASSERT_TRUE(weak);
  EXPECT_EQ(weak->status, 422);
  EXPECT_EQ(body(weak)["errors"][0]["field"], "event.magnitude");
  auto ok = client().Post("/events", R"({"kind": "animal_intrusion", "zone": 1, "duration": 30})", "application/json");
  EXPECT_EQ(ok->status, 202);
  svc.advance();
  EXPECT_TRUE(svc.get_state().zones[0].intruder_present);
}

TEST_F(Http, StreamDeliversFramesThenEnd) {
  std::string received;
  std::thread driver([this] {
    std::this_thread::sleep_for(100ms);
    svc.advance(5000);
  });
  auto r = client().Get("/stream", [&](const char* data, std::size_t len) {
    received.append(data, len);
    return received.find("event: end") == std::string::npos;
  });
  driver.join();
  std::size_t frames = 0;
  for (std::size_t pos = 0; (pos = received.find("event: frame", pos)) != std::string::npos; ++pos) ++frames;
  EXPECT_EQ(frames, 1440u);
  EXPECT_NE(received.find("event: end"), std::string::npos);
  const auto first = received.find("data: ");
  const auto j = nlohmann::json::parse(received.substr(first + 6, received.find('\n', first) - first - 6));
  EXPECT_EQ(j["tick"], 1);
  EXPECT_EQ(j["seq"], 2);
}

TEST_F(Http, NotRunningAfterStop) {
  svc.stop();
  auto r = client().Get("/state");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 409);
}
