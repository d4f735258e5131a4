#pragma once

// Multi-hop mesh: range-based topology, min-hop routes to the gateway and
// lossy hop-by-hop delivery with bounded retries.

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fieldsim/core.hpp"
#include "fieldsim/nodes.hpp"

namespace fieldsim {

struct LinkModel {
  double radio_range = 120;  // meters
  double loss_probability = 0;
  double per_hop_latency = 15;  // milliseconds per attempt
  int max_retries = 3;
  // Radio metadata; reported, never used in the arithmetic.
  std::string radio_band = "5.8 GHz ISM";
  double tx_power_dbm = 30;

  friend bool operator==(const LinkModel&, const LinkModel&) = default;
};

inline ValidationErrors validate(const LinkModel& l, std::string_view path = "link") {
  ValidationErrors errs;
  auto p = std::string(path);
  if (!(l.radio_range > 0)) errs.push_back({p + ".radio_range", "must be > 0"});
  if (!(l.loss_probability >= 0 && l.loss_probability < 1))
    errs.push_back({p + ".loss_probability", "must be in [0, 1)"});
  if (!(l.per_hop_latency >= 0)) errs.push_back({p + ".per_hop_latency", "must be >= 0"});
  if (l.max_retries < 0) errs.push_back({p + ".max_retries", "must be >= 0"});
  return errs;
}

struct MeshNode {
  NodeId id;
  Position position;
};

inline double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Undirected adjacency; neighbor lists sorted ascending.
using Topology = std::map<NodeId, std::vector<NodeId>>;

/// Edge between every pair of devices (gateway included) within radio range.
inline Topology build_topology(std::span<const MeshNode> nodes, const MeshNode& gateway, const LinkModel& link) {
  std::vector<MeshNode> all(nodes.begin(), nodes.end());
  all.push_back(gateway);
  std::sort(all.begin(), all.end(), [](const MeshNode& a, const MeshNode& b) { return a.id < b.id; });
  Topology graph;
  for (const auto& n : all) graph[n.id];
  for (std::size_t i = 0; i < all.size(); ++i) {
    for (std::size_t j = i + 1; j < all.size(); ++j) {
      if (distance(all[i].position, all[j].position) <= link.radio_range) {
        graph[all[i].id].push_back(all[j].id);
        graph[all[j].id].push_back(all[i].id);
      }
    }
  }
  for (auto& [id, nbrs] : graph) std::sort(nbrs.begin(), nbrs.end());
  return graph;
}

struct RoutingTable {
  NodeId gateway;
  std::map<NodeId, NodeId> next_hop;
  std::map<NodeId, int> hop_count;

  bool reachable(NodeId n) const { return n == gateway || next_hop.contains(n); }

  /// Node sequence from `n` to the gateway, both ends included.
  std::optional<std::vector<NodeId>> path_to_gateway(NodeId n) const {
    if (!reachable(n)) return std::nullopt;
    std::vector<NodeId> path{n};
    while (path.back() != gateway) path.push_back(next_hop.at(path.back()));
    return path;
  }

  friend bool operator==(const RoutingTable&, const RoutingTable&) = default;
};

/// Breadth-first min-hop routes; among equally short next hops the lowest id wins.
inline RoutingTable compute_routes(const Topology& graph, NodeId gateway) {
  RoutingTable table{gateway, {}, {}};
  if (!graph.contains(gateway)) return table;
  std::map<NodeId, int> dist{{gateway, 0}};
  std::deque<NodeId> frontier{gateway};
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop_front();
    for (NodeId v : graph.at(u)) {
      if (dist.contains(v)) continue;
      dist[v] = dist[u] + 1;
      frontier.push_back(v);
    }
  }
  for (const auto& [node, d] : dist) {
    if (node == gateway) continue;
    table.hop_count[node] = d;
    for (NodeId v : graph.at(node)) {  // sorted, so the first match is the lowest id
      if (dist.at(v) == d - 1) {
        table.next_hop[node] = v;
        break;
      }
    }
  }
  return table;
}

struct Packet {
  std::uint64_t seq = 0;
  NodeId src;
  NodeId dst;
  std::variant<SensorReading, ActuatorCommand> payload;
  std::vector<NodeId> hops;
};

struct Delivered {
  std::vector<NodeId> hops;  // src first, dst last
  double latency_ms = 0;

  int hop_count() const { return static_cast<int>(hops.size()) - 1; }
};

struct Dropped {
  int at_hop = 0;  // 1-based index of the failing hop; 0 when no route exists
};

/// Per-node radio usage caused by one transmission, counted per attempt.
struct RadioCharge {
  std::int64_t sent = 0;
  std::int64_t relayed = 0;
};

struct DeliveryResult {
  std::variant<Delivered, Dropped> outcome;
  std::map<NodeId, RadioCharge> charges;
  int attempts = 0;

  bool delivered() const { return std::holds_alternative<Delivered>(outcome); }
};

/// Routes toward the gateway when `dst` is the gateway, away from it when
/// `src` is the gateway (reverse of the destination's uplink path).
template <class Rng>
DeliveryResult transmit(const Packet& packet, const RoutingTable& routes, const LinkModel& link, Rng& rng) {
  DeliveryResult result{Dropped{0}, {}, 0};
  std::optional<std::vector<NodeId>> path;
  if (packet.dst == routes.gateway) {
    path = routes.path_to_gateway(packet.src);
  } else if (packet.src == routes.gateway) {
    path = routes.path_to_gateway(packet.dst);
    if (path) std::reverse(path->begin(), path->end());
  }
  if (!path) return result;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Delivered delivered{{path->front()}, 0.0};
  for (std::size_t hop = 0; hop + 1 < path->size(); ++hop) {
    const NodeId sender = (*path)[hop];
    bool ok = false;
    for (int attempt = 0; attempt <= link.max_retries && !ok; ++attempt) {
      ++result.attempts;
      auto& charge = result.charges[sender];
      (sender == packet.src ? charge.sent : charge.relayed) += 1;
      delivered.latency_ms += link.per_hop_latency;
      ok = link.loss_probability <= 0 || unit(rng) >= link.loss_probability;
    }
    if (!ok) {
      result.outcome = Dropped{static_cast<int>(hop) + 1};
      return result;
    }
    delivered.hops.push_back((*path)[hop + 1]);
  }
  result.outcome = std::move(delivered);
  return result;
}

}  // namespace fieldsim
