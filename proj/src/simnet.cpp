#include "hyperpubsub/simnet.hpp"

#include "hyperpubsub/crypto.hpp"
#include "hyperpubsub/error.hpp"

namespace hps::sim {

SimNetConfig SimNetConfig::from_json(const nlohmann::json& j) {
  SimNetConfig c;
  c.seed = j.value("seed", c.seed);
  c.min_delay = j.value("min_delay", c.min_delay);
  c.max_delay = j.value("max_delay", c.max_delay);
  c.drop_probability = j.value("drop_probability", c.drop_probability);
  if (j.contains("partitions")) {
    for (const auto& p : j.at("partitions")) {
      if (!p.is_array() || p.size() != 3) throw Error(Errc::bad_config, "partition must be [start, end, [nodes]]");
      Partition part;
      part.start = p[0].get<Tick>();
      part.end = p[1].get<Tick>();
      for (const auto& n : p[2]) part.group.insert(n.get<NodeId>());
      c.partitions.push_back(std::move(part));
    }
  }
  if (c.min_delay < 1 || c.max_delay < c.min_delay) throw Error(Errc::bad_config, "bad delay bounds");
  if (c.drop_probability < 0.0 || c.drop_probability >= 1.0) throw Error(Errc::bad_config, "bad drop probability");
  return c;
}

nlohmann::json SimNetConfig::to_json() const {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : partitions) parts.push_back({p.start, p.end, p.group});
  return {{"seed", seed},
          {"min_delay", min_delay},
          {"max_delay", max_delay},
          {"drop_probability", drop_probability},
          {"partitions", parts}};
}

SimNet::SimNet(SimNetConfig config) : config_(std::move(config)), rng_(config_.seed) {}

bool SimNet::partitioned(NodeId a, NodeId b, Tick now) const {
  for (const auto& p : config_.partitions) {
    if (now < p.start || now >= p.end) continue;
    if (p.group.contains(a) != p.group.contains(b)) return true;
  }
  return false;
}

void SimNet::send(Packet packet, Tick now) {
  ++sent_;
  std::uniform_int_distribution<Tick> delay(config_.min_delay, config_.max_delay);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  auto d = delay(rng_);
  auto c = coin(rng_);
  if (c < config_.drop_probability || partitioned(packet.from, packet.to, now) || down_.contains(packet.from)) {
    ++dropped_;
    return;
  }
  queue_.emplace(std::make_tuple(now + d, seq_++), std::move(packet));
}

std::vector<Packet> SimNet::collect(Tick now) {
  std::vector<Packet> out;
  while (!queue_.empty() && std::get<0>(queue_.begin()->first) <= now) {
    auto node = queue_.extract(queue_.begin());
    auto& p = node.mapped();
    if (down_.contains(p.to)) {
      ++dropped_;
      continue;
    }
    Encoder enc;
    enc.hash(trace_).u64(now).u64(p.from).u64(p.to).bytes(p.bytes);
    trace_ = crypto::sha256(enc.data());
    ++delivered_;
    out.push_back(std::move(p));
  }
  return out;
}

void SimNet::heal(Tick now) {
  for (auto& p : config_.partitions) {
    if (p.start <= now && now < p.end) p.end = now;
  }
}

void SimNet::set_down(NodeId node, bool down) {
  if (down) {
    down_.insert(node);
  } else {
    down_.erase(node);
  }
}

}  // namespace hps::sim
