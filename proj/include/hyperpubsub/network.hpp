#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperpubsub/builtins.hpp"
#include "hyperpubsub/ordering.hpp"
#include "hyperpubsub/peer.hpp"
#include "hyperpubsub/simnet.hpp"

namespace hps {

struct NetworkConfig {
  std::size_t endorsers = 6;
  std::size_t orderers = 3;
  std::vector<ChannelId> channels = default_channels();
  std::size_t endorsement_required = 2;
  /// Endorsers asked per proposal; 0 asks every peer that is up.
  std::size_t endorsement_fanout = 0;
  ordering::OrdererConfig ordering;
  sim::SimNetConfig simnet;
  std::optional<std::filesystem::path> data_dir;
  crypto::HashCost credential_cost = crypto::HashCost::interactive;
  std::string admin_name = "admin";
  std::string admin_credential = "admin";

  /// Throws Errc::bad_config.
  void validate() const;
  static NetworkConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Outcome of a transaction driven through endorse, order and validate.
struct InvokeResult {
  Transaction tx;
  TxStatus status;
  bool valid() const { return status.flag == ValidationFlag::valid; }
};

/// Simulation-mode network: MSP, endorsing peers and a Raft ordering
/// service wired over one SimNet, advanced tick by tick on the caller's
/// thread. Not thread-safe.
class Network {
 public:
  /// `msp_options.credential_cost` is taken from the config.
  explicit Network(NetworkConfig config, Msp::Options msp_options = {});

  const NetworkConfig& config() const { return config_; }
  Msp& msp() { return *msp_; }
  const Msp& msp() const { return *msp_; }
  const ChaincodeRegistry& registry() const { return registry_; }
  const Validator& validator() const { return *validator_; }

  /// Registers an identity whose key is derived from the seed and name.
  Signer enroll(const std::string& name, Role role, std::optional<std::string> credential = std::nullopt);
  /// Key for an identity registered by `enroll`.
  Signer signer_for(const Identity& identity) const;
  const Signer& admin() const { return admin_; }

  Proposal propose(const Signer& client, const ChannelId& channel, const std::string& function,
                   std::vector<std::string> args, AccessMode mode = AccessMode::write);
  /// Responses of the asked endorsers. Throws the first endorser error when
  /// fewer than the policy threshold succeed.
  std::vector<ProposalResponse> collect_endorsements(const Proposal& proposal);
  /// Proposal plus assembly; a divergent result is retried once after the
  /// peers had time to converge.
  Transaction endorse(const Signer& client, const ChannelId& channel, const std::string& function,
                      std::vector<std::string> args);
  /// Hands the transaction to the ordering service, following redirects and
  /// waiting out elections. Throws Errc::unavailable after `max_ticks`.
  void submit(const Transaction& tx, raft::Tick max_ticks = 10000);
  /// Status on the first peer that is up.
  std::optional<TxStatus> status(const ChannelId& channel, const Hash256& tx_id) const;
  /// Throws Errc::timeout.
  TxStatus wait_for(const ChannelId& channel, const Hash256& tx_id, raft::Tick max_ticks = 10000);
  InvokeResult invoke(const Signer& client, const ChannelId& channel, const std::string& function,
                      std::vector<std::string> args);
  /// Read-only simulation on the first peer that is up; needs read access.
  ExecutionResult query(const Signer& client, const ChannelId& channel, const std::string& function,
                        std::vector<std::string> args);

  raft::Tick now() const { return now_; }
  void step();
  void advance(raft::Tick ticks);
  /// Steps until `done()` or `max_ticks` elapse; returns done().
  bool run_until(const std::function<bool()>& done, raft::Tick max_ticks);

  // Node ids: orderers 0..O-1, peers O..O+P-1. Targets are also addressable
  // by name ("orderer0", "peer2").
  raft::NodeId resolve_target(std::string_view name) const;
  std::string target_name(raft::NodeId node) const;
  void crash(raft::NodeId node);
  void restart(raft::NodeId node);
  bool is_down(raft::NodeId node) const;
  /// Cuts `group` off from the rest during [start, end).
  void partition(std::set<raft::NodeId> group, raft::Tick start, raft::Tick end);
  void heal();
  void set_drop_probability(double p) { net_.set_drop_probability(p); }

  std::vector<std::unique_ptr<ordering::OrdererNode>>& orderers() { return orderers_; }
  const std::vector<std::unique_ptr<ordering::OrdererNode>>& orderers() const { return orderers_; }
  const std::vector<std::unique_ptr<Peer>>& peers() const { return peers_; }
  /// First peer that is up; throws Errc::unavailable.
  const Peer& anchor() const;
  std::optional<raft::NodeId> leader() const;
  /// Every (term -> leaders) observation made after each step.
  const std::map<std::uint64_t, std::set<raft::NodeId>>& leader_history() const { return leaders_; }
  const sim::SimNet& net() const { return net_; }
  /// Digest over every peer's chain tips, for reproducibility checks.
  Hash256 state_digest() const;

 private:
  std::string derive_seed(std::string_view label) const;
  void dispatch(std::vector<sim::Packet>&& packets);

  NetworkConfig config_;
  std::unique_ptr<Msp> msp_;
  ChaincodeRegistry registry_;
  std::unique_ptr<Validator> validator_;
  sim::SimNet net_;
  std::vector<std::unique_ptr<ordering::OrdererNode>> orderers_;
  std::vector<std::unique_ptr<Peer>> peers_;
  Signer admin_;
  std::mt19937_64 rng_;
  raft::Tick now_ = 0;
  std::map<std::uint64_t, std::set<raft::NodeId>> leaders_;
  std::size_t next_endorser_ = 0;
};

}  // namespace hps
