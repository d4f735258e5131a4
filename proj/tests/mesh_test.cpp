#include <gtest/gtest.h>

#include <queue>
#include <random>
#include <set>

#include "fieldsim/mesh.hpp"

using namespace fieldsim;

namespace {

const MeshNode kGateway{NodeId{1}, {0, 0}};

std::vector<MeshNode> random_nodes(std::mt19937_64& rng, int n, double extent) {
  std::uniform_real_distribution<double> coord(-extent, extent);
  std::vector<MeshNode> nodes;
  for (int i = 0; i < n; ++i) nodes.push_back({NodeId{static_cast<std::uint64_t>(10 + i)}, {coord(rng), coord(rng)}});
  return nodes;
}

// Plain BFS over an adjacency matrix built from raw distances.
std::map<NodeId, int> bfs_hops(const std::vector<MeshNode>& nodes, const MeshNode& gw, double range) {
  std::vector<MeshNode> all = nodes;
  all.push_back(gw);
  const std::size_t n = all.size();
  std::vector<int> dist(n, -1);
  std::queue<std::size_t> q;
  dist[n - 1] = 0;
  q.push(n - 1);
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (std::size_t v = 0; v < n; ++v) {
      const double dx = all[u].position.x - all[v].position.x, dy = all[u].position.y - all[v].position.y;
      if (v != u && dist[v] < 0 && dx * dx + dy * dy <= range * range) {
        dist[v] = dist[u] + 1;
        q.push(v);
      }
    }
  }
  std::map<NodeId, int> out;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (dist[i] >= 0) out[all[i].id] = dist[i];
  return out;
}

}  // namespace

TEST(Topology, EdgeWithinRange) {
  LinkModel link;
  link.radio_range = 100;
  std::vector<MeshNode> nodes{{NodeId{10}, {50, 0}}};
  auto g = build_topology(nodes, kGateway, link);
  EXPECT_EQ(g.at(NodeId{10}), std::vector<NodeId>{NodeId{1}});
}

TEST(Topology, NoEdgeBeyondRange) {
  LinkModel link;
  link.radio_range = 100;
  std::vector<MeshNode> nodes{{NodeId{10}, {150, 0}}};
  auto g = build_topology(nodes, kGateway, link);
  EXPECT_TRUE(g.at(NodeId{10}).empty());
}

TEST(Topology, MatchesAllPairsDistanceCheck) {
  std::mt19937_64 rng(21);
  LinkModel link;
  for (int trial = 0; trial < 50; ++trial) {
    auto nodes = random_nodes(rng, 12, 200);
    auto g = build_topology(nodes, kGateway, link);
    std::vector<MeshNode> all = nodes;
    all.push_back(kGateway);
    for (const auto& a : all)
      for (const auto& b : all) {
        if (a.id == b.id) continue;
        const bool expect = std::hypot(a.position.x - b.position.x, a.position.y - b.position.y) <= link.radio_range;
        const auto& nb = g.at(a.id);
        EXPECT_EQ(std::find(nb.begin(), nb.end(), b.id) != nb.end(), expect);
      }
  }
}

TEST(Routes, AdjacentNodeRoutesDirect) {
  std::vector<MeshNode> nodes{{NodeId{10}, {50, 0}}};
  auto r = compute_routes(build_topology(nodes, kGateway, {}), kGateway.id);
  EXPECT_EQ(r.hop_count.at(NodeId{10}), 1);
  EXPECT_EQ(r.next_hop.at(NodeId{10}), kGateway.id);
}

TEST(Routes, ChainGoesThroughRelay) {
  LinkModel link;
  link.radio_range = 100;
  std::vector<MeshNode> nodes{{NodeId{10}, {180, 0}}, {NodeId{11}, {90, 0}}};
  auto r = compute_routes(build_topology(nodes, kGateway, link), kGateway.id);
  EXPECT_EQ(r.hop_count.at(NodeId{10}), 2);
  EXPECT_EQ(r.next_hop.at(NodeId{10}), NodeId{11});
}

TEST(Routes, TiesPickLowestId) {
  LinkModel link;
  link.radio_range = 100;
  std::vector<MeshNode> nodes{{NodeId{10}, {160, 0}}, {NodeId{12}, {80, 10}}, {NodeId{11}, {80, -10}}};
  auto r = compute_routes(build_topology(nodes, kGateway, link), kGateway.id);
  EXPECT_EQ(r.next_hop.at(NodeId{10}), NodeId{11});
}

TEST(Routes, UnreachableOmitted) {
  std::vector<MeshNode> nodes{{NodeId{10}, {1000, 0}}};
  auto r = compute_routes(build_topology(nodes, kGateway, {}), kGateway.id);
  EXPECT_FALSE(r.hop_count.contains(NodeId{10}));
  EXPECT_FALSE(r.next_hop.contains(NodeId{10}));
}

TEST(Routes, HopCountsMatchBfsOracle) {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> size(1, 11);
  LinkModel link;
  for (int trial = 0; trial < 200; ++trial) {
    auto nodes = random_nodes(rng, size(rng), 250);
    const auto routes = compute_routes(build_topology(nodes, kGateway, link), kGateway.id);
    EXPECT_EQ(routes.hop_count, bfs_hops(nodes, kGateway, link.radio_range)) << "trial " << trial;
    for (const auto& [id, hops] : routes.hop_count) {
      auto path = routes.path_to_gateway(id);
      ASSERT_TRUE(path);
      EXPECT_EQ(static_cast<int>(path->size()) - 1, hops);
      std::set<NodeId> seen(path->begin(), path->end());
      EXPECT_EQ(seen.size(), path->size());
    }
  }
}

TEST(Routes, Deterministic) {
  std::mt19937_64 rng(2);
  auto nodes = random_nodes(rng, 12, 200);
  const auto g = build_topology(nodes, kGateway, {});
  EXPECT_EQ(compute_routes(g, kGateway.id), compute_routes(g, kGateway.id));
}

TEST(Transmit, LosslessTwoHops) {
  LinkModel link;
  link.radio_range = 100;
  std::vector<MeshNode> nodes{{NodeId{10}, {180, 0}}, {NodeId{11}, {90, 0}}};
  auto routes = compute_routes(build_topology(nodes, kGateway, link), kGateway.id);
  std::mt19937_64 rng(1);
  auto res = transmit(Packet{1, NodeId{10}, kGateway.id, SensorReading{}, {}}, routes, link, rng);
  ASSERT_TRUE(res.delivered());
  const auto& d = std::get<Delivered>(res.outcome);
  EXPECT_EQ(d.hops, (std::vector<NodeId>{NodeId{10}, NodeId{11}, NodeId{1}}));
  EXPECT_DOUBLE_EQ(d.latency_ms, 2 * link.per_hop_latency);
  EXPECT_EQ(res.charges.at(NodeId{10}).sent, 1);
  EXPECT_EQ(res.charges.at(NodeId{11}).relayed, 1);
}

TEST(Transmit, DownlinkReversesPath) {
  LinkModel link;
  link.radio_range = 100;
  std::vector<MeshNode> nodes{{NodeId{10}, {180, 0}}, {NodeId{11}, {90, 0}}};
  auto routes = compute_routes(build_topology(nodes, kGateway, link), kGateway.id);
  std::mt19937_64 rng(1);
  auto res = transmit(Packet{1, kGateway.id, NodeId{10}, ActuatorCommand{}, {}}, routes, link, rng);
  ASSERT_TRUE(res.delivered());
  EXPECT_EQ(std::get<Delivered>(res.outcome).hops, (std::vector<NodeId>{NodeId{1}, NodeId{11}, NodeId{10}}));
}

TEST(Transmit, UnreachableDropsAtHopZero) {
  std::vector<MeshNode> nodes{{NodeId{10}, {1000, 0}}};
  auto routes = compute_routes(build_topology(nodes, kGateway, {}), kGateway.id);
  std::mt19937_64 rng(1);
  auto res = transmit(Packet{1, NodeId{10}, kGateway.id, SensorReading{}, {}}, routes, {}, rng);
  ASSERT_FALSE(res.delivered());
  EXPECT_EQ(std::get<Dropped>(res.outcome).at_hop, 0);
  EXPECT_EQ(res.attempts, 0);
}

TEST(Transmit, CutVertexRemovalDrops) {
  LinkModel link;
  link.radio_range = 100;
  std::vector<MeshNode> nodes{{NodeId{10}, {180, 0}}, {NodeId{11}, {90, 0}}};
  nodes.pop_back();  // relay gone
  auto routes = compute_routes(build_topology(nodes, kGateway, link), kGateway.id);
  std::mt19937_64 rng(1);
  EXPECT_FALSE(transmit(Packet{1, NodeId{10}, kGateway.id, SensorReading{}, {}}, routes, link, rng).delivered());
}

TEST(Transmit, RetryFormulaSingleHop) {
  LinkModel link;
  link.loss_probability = 0.5;
  link.max_retries = 3;
  std::vector<MeshNode> nodes{{NodeId{10}, {50, 0}}};
  auto routes = compute_routes(build_topology(nodes, kGateway, link), kGateway.id);
  std::mt19937_64 rng(2024);
  const int trials = 100000;
  int ok = 0;
  for (int i = 0; i < trials; ++i)
    ok += transmit(Packet{1, NodeId{10}, kGateway.id, SensorReading{}, {}}, routes, link, rng).delivered();
  const double expected = 1 - std::pow(0.5, 4);
  EXPECT_DOUBLE_EQ(expected, 0.9375);
  EXPECT_NEAR(static_cast<double>(ok) / trials, expected, 0.01);
}

TEST(Transmit, DropReportsFailingHopAndChargesEveryAttempt) {
  LinkModel link;
  link.radio_range = 100;
  link.loss_probability = 0.999999;
  link.max_retries = 2;
  std::vector<MeshNode> nodes{{NodeId{10}, {180, 0}}, {NodeId{11}, {90, 0}}};
  auto routes = compute_routes(build_topology(nodes, kGateway, link), kGateway.id);
  std::mt19937_64 rng(1);
  auto res = transmit(Packet{1, NodeId{10}, kGateway.id, SensorReading{}, {}}, routes, link, rng);
  ASSERT_FALSE(res.delivered());
  EXPECT_EQ(std::get<Dropped>(res.outcome).at_hop, 1);
  EXPECT_EQ(res.attempts, 3);
  EXPECT_EQ(res.charges.at(NodeId{10}).sent, 3);
}

TEST(Link, ValidateBounds) {
  LinkModel l;
  l.loss_probability = 1;
  l.radio_range = 0;
  const auto errs = validate(l);
  ASSERT_EQ(errs.size(), 2u);
  EXPECT_EQ(errs[0].field, "link.radio_range");
  EXPECT_EQ(errs[1].field, "link.loss_probability");
}
