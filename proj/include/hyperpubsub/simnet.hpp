#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "hyperpubsub/codec.hpp"
#include "hyperpubsub/raft.hpp"

namespace hps::sim {

using raft::NodeId;
using raft::Tick;

/// Messages crossing the boundary of `group` are dropped during [start, end).
struct Partition {
  Tick start = 0;
  Tick end = 0;
  std::set<NodeId> group;
};

struct SimNetConfig {
  std::uint64_t seed = 1;
  Tick min_delay = 1;
  Tick max_delay = 10;
  double drop_probability = 0.0;
  std::vector<Partition> partitions;

  /// Scenario-file form: {"seed", "min_delay", "max_delay", "drop_probability",
  /// "partitions": [[start, end, [node, ...]], ...]}.
  static SimNetConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Packet {
  NodeId from = 0;
  NodeId to = 0;
  std::string bytes;
};

/// Seeded discrete-event network: per-message uniform delay, independent
/// drops and scheduled partitions. Same seed and same send sequence give the
/// same delivery schedule.
class SimNet {
 public:
  explicit SimNet(SimNetConfig config);

  void send(Packet packet, Tick now);
  /// Removes and returns every packet due at or before `now`, in
  /// (due tick, send order) order. Packets to nodes marked down are dropped.
  std::vector<Packet> collect(Tick now);

  void add_partition(Partition p) { config_.partitions.push_back(std::move(p)); }
  /// Ends every partition active at `now`.
  void heal(Tick now);
  void set_drop_probability(double p) { config_.drop_probability = p; }
  void set_down(NodeId node, bool down);
  bool is_down(NodeId node) const { return down_.contains(node); }
  bool partitioned(NodeId a, NodeId b, Tick now) const;

  /// Running SHA-256 over every delivered packet (tick, from, to, bytes).
  Hash256 trace_digest() const { return trace_; }
  std::uint64_t sent() const { return sent_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t delivered() const { return delivered_; }
  const SimNetConfig& config() const { return config_; }

 private:
  SimNetConfig config_;
  std::mt19937_64 rng_;
  std::map<std::tuple<Tick, std::uint64_t>, Packet> queue_;
  std::uint64_t seq_ = 0;
  std::set<NodeId> down_;
  Hash256 trace_{};
  std::uint64_t sent_ = 0, dropped_ = 0, delivered_ = 0;
};

}  // namespace hps::sim
