#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "hyperpubsub/chaincode.hpp"
#include "hyperpubsub/endorsement.hpp"
#include "hyperpubsub/ordering.hpp"
#include "hyperpubsub/simnet.hpp"
#include "hyperpubsub/validation.hpp"

namespace hps {

/// Endorsing and committing peer. Holds one ledger per channel, simulates
/// proposals against it and commits blocks pushed by the orderers.
class Peer {
 public:
  Peer(raft::NodeId node, Signer signer, const Msp& msp, const ChaincodeRegistry& registry,
       const Validator& validator, std::vector<raft::NodeId> orderers,
       std::optional<std::filesystem::path> data_dir = std::nullopt);

  raft::NodeId node() const { return node_; }
  const Signer& signer() const { return signer_; }

  /// Throws Errc::unavailable when down, Errc::unknown_channel, plus the
  /// errors of `simulate`.
  ProposalResponse endorse(const Proposal& proposal) const;

  /// Commits in-order blocks and acknowledges the height to the sender.
  std::vector<sim::Packet> receive(const sim::Packet& packet);
  /// Catch-up requests for every channel to every orderer.
  std::vector<sim::Packet> request_catch_up() const;

  const Ledger& ledger(const ChannelId& channel) const;
  std::vector<ChannelId> channels() const;

  bool up() const { return up_; }
  void crash() { up_ = false; }
  /// Ledgers are kept across a crash; returns the catch-up requests.
  std::vector<sim::Packet> restart();

 private:
  raft::NodeId node_;
  Signer signer_;
  const Msp& msp_;
  const ChaincodeRegistry& registry_;
  const Validator& validator_;
  std::vector<raft::NodeId> orderers_;
  std::map<ChannelId, std::unique_ptr<Ledger>> ledgers_;
  bool up_ = true;
};

}  // namespace hps
