#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "hyperpubsub/raft.hpp"
#include "hyperpubsub/simnet.hpp"

namespace hps::test {

struct FaultPlan {
  std::uint64_t seed = 1;
  std::size_t nodes = 5;
  double drop = 0.0;
  raft::Tick fault_until = 6000;  // faults are injected before this tick
  raft::Tick horizon = 20000;
  bool partitions = true;
  bool leader_crashes = true;
};

struct RaftRunReport {
  bool election_safety = true;   // at most one leader per term
  bool log_matching = true;      // committed prefixes agree everywhere
  bool durability = true;        // committed entries survive in every later leader
  bool converged = false;        // all nodes up, same commit index and log prefix
  std::uint64_t committed = 0;
  std::uint64_t terms = 0;
  std::string detail;
};

// Bare Raft cluster over the simulated network with randomized faults and
// continuous client load. Checks safety while it runs.
class RaftCluster {
 public:
  explicit RaftCluster(FaultPlan plan) : plan_(plan), rng_(plan.seed * 7919 + 1) {
    sim::SimNetConfig net;
    net.seed = plan.seed;
    net.drop_probability = plan.drop;
    net_ = std::make_unique<sim::SimNet>(net);
    std::vector<raft::NodeId> ids;
    for (raft::NodeId i = 0; i < plan.nodes; ++i) ids.push_back(i);
    for (auto i : ids) nodes_.push_back(std::make_unique<raft::Node>(i, ids, raft::Config{}, plan.seed));
  }

  raft::Node& node(raft::NodeId i) { return *nodes_[i]; }
  raft::Tick now() const { return now_; }

  void step() {
    ++now_;
    for (auto& p : net_->collect(now_)) {
      auto msg = raft::decode_message(p.bytes);
      send(nodes_[p.to]->receive({p.from, p.to, msg}, now_));
    }
    for (auto& n : nodes_) send(n->tick(now_));
    observe();
  }

  std::optional<raft::NodeId> leader() const {
    std::optional<raft::NodeId> best;
    std::uint64_t term = 0;
    for (const auto& n : nodes_) {
      if (n->up() && n->is_leader() && n->state().current_term >= term) {
        best = n->state().id;
        term = n->state().current_term;
      }
    }
    return best;
  }

  void propose_to_leader(const std::string& payload) {
    if (auto l = leader()) nodes_[*l]->propose(raft::EntryKind::transaction, payload);
  }

  RaftRunReport run() {
    constexpr raft::NodeId none = ~raft::NodeId{0};
    raft::NodeId crashed = none;
    raft::Tick restart_at = 0;
    std::uint64_t counter = 0;
    std::uniform_int_distribution<int> pct(0, 99);
    while (now_ < plan_.fault_until) {
      step();
      if (now_ % 25 == 0) propose_to_leader("c" + std::to_string(counter++));
      if (now_ % 500 != 0) continue;
      if (crashed != none && now_ >= restart_at) {
        nodes_[crashed]->restart(now_);
        net_->set_down(crashed, false);
        crashed = none;
      }
      auto roll = pct(rng_);
      if (plan_.leader_crashes && crashed == none && roll < 35) {
        if (auto l = leader()) {
          nodes_[*l]->crash();
          net_->set_down(*l, true);
          crashed = *l;
          restart_at = now_ + 300 + pct(rng_) * 10;
        }
      } else if (plan_.partitions && roll < 70) {
        sim::Partition part;
        part.start = now_;
        part.end = now_ + 200 + pct(rng_) * 8;
        for (raft::NodeId i = 0; i < plan_.nodes; ++i) {
          if (pct(rng_) < 40) part.group.insert(i);
        }
        net_->add_partition(part);
      }
    }
    if (crashed != none) {
      nodes_[crashed]->restart(now_);
      net_->set_down(crashed, false);
    }
    net_->heal(now_);
    net_->set_drop_probability(0.0);

    const std::string marker = "final-" + std::to_string(plan_.seed);
    bool proposed = false;
    while (now_ < plan_.horizon) {
      step();
      if (!proposed && leader()) {
        propose_to_leader(marker);
        proposed = true;
      }
      if (now_ % 50 == 0 && proposed && all_agree(marker)) {
        report_.converged = true;
        break;
      }
      if (now_ % 1000 == 0) proposed = false;
    }
    check_final();
    report_.committed = committed_.size();
    std::set<std::uint64_t> terms;
    for (const auto& [t, who] : leaders_) terms.insert(t);
    report_.terms = terms.size();
    return report_;
  }

 private:
  void send(std::vector<raft::Envelope> out) {
    for (auto& e : out) net_->send({e.from, e.to, raft::encode(e.msg)}, now_);
  }

  void fail(bool& flag, const std::string& why) {
    if (flag) report_.detail += why + "; ";
    flag = false;
  }

  void observe() {
    for (const auto& n : nodes_) {
      const auto& s = n->state();
      if (!n->up()) continue;
      if (n->is_leader()) {
        auto& who = leaders_[s.current_term];
        who.insert(s.id);
        if (who.size() > 1) fail(report_.election_safety, "two leaders in term " + std::to_string(s.current_term));
        if (!checked_leader_.contains({s.current_term, s.id})) {
          checked_leader_.insert({s.current_term, s.id});
          for (const auto& [index, entry] : committed_) {
            if (index > s.last_index() || !(s.log[index - 1] == entry)) {
              fail(report_.durability, "leader of term " + std::to_string(s.current_term) + " lacks index " +
                                           std::to_string(index));
              break;
            }
          }
        }
      }
      for (auto i = seen_commit_[s.id] + 1; i <= s.commit_index; ++i) {
        auto [it, fresh] = committed_.emplace(i, s.log[i - 1]);
        if (!fresh && !(it->second == s.log[i - 1])) {
          fail(report_.log_matching, "index " + std::to_string(i) + " committed twice differently");
        }
      }
      seen_commit_[s.id] = std::max(seen_commit_[s.id], s.commit_index);
    }
  }

  bool all_agree(const std::string& marker) const {
    std::uint64_t commit = nodes_[0]->state().commit_index;
    for (const auto& n : nodes_) {
      if (!n->up() || n->state().commit_index != commit) return false;
    }
    const auto& log0 = nodes_[0]->state().log;
    bool has_marker = false;
    for (std::uint64_t i = 0; i < commit; ++i) has_marker |= log0[i].payload == marker;
    if (!has_marker) return false;
    for (const auto& n : nodes_) {
      const auto& log = n->state().log;
      if (!std::equal(log0.begin(), log0.begin() + commit, log.begin())) return false;
    }
    return true;
  }

  void check_final() {
    for (const auto& n : nodes_) {
      const auto& s = n->state();
      for (const auto& [index, entry] : committed_) {
        if (index > s.last_index() || !(s.log[index - 1] == entry)) {
          fail(report_.durability, "node " + std::to_string(s.id) + " lost index " + std::to_string(index));
          return;
        }
      }
    }
  }

  FaultPlan plan_;
  std::mt19937_64 rng_;
  std::unique_ptr<sim::SimNet> net_;
  std::vector<std::unique_ptr<raft::Node>> nodes_;
  raft::Tick now_ = 0;
  std::map<std::uint64_t, std::set<raft::NodeId>> leaders_;
  std::set<std::pair<std::uint64_t, raft::NodeId>> checked_leader_;
  std::map<std::uint64_t, raft::LogEntry> committed_;
  std::map<raft::NodeId, std::uint64_t> seen_commit_;
  RaftRunReport report_;
};

}  // namespace hps::test
