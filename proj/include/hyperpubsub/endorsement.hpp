#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyperpubsub/chaincode.hpp"
#include "hyperpubsub/identity.hpp"
#include "hyperpubsub/ledger.hpp"

namespace hps {

struct Proposal {
  ChannelId channel;
  std::string chaincode;
  std::string function;
  std::vector<std::string> args;
  IdentityId creator;
  std::string nonce;
  std::uint64_t timestamp = 0;
  std::string signature;  // creator's, over payload()

  std::string payload() const;
  Hash256 tx_id() const;
};

/// Signed result of one endorser's simulation.
struct ProposalResponse {
  ExecutionResult result;
  Endorsement endorsement;
};

/// Requires `mode` access of the client on `channel` (read is enough for
/// queries that are never submitted); throws Errc::access_denied.
Proposal create_proposal(const Msp& msp, const Signer& client, const ChannelId& channel,
                         std::string chaincode, std::string function, std::vector<std::string> args,
                         std::string nonce, std::uint64_t timestamp, AccessMode mode = AccessMode::write);

/// Runs the proposal on the endorser's committed snapshot and signs the
/// result digest. Never mutates the ledger. Throws
/// Errc::bad_proposal_signature, or Errc::simulation_failure carrying the
/// chaincode's error code as its cause.
ProposalResponse simulate(const Signer& endorser, const Msp& msp, const Chaincode& chaincode,
                          const Ledger& ledger, const Proposal& proposal);

/// Picks the result digest shared by the most endorsements (ties: smallest
/// digest) and builds the transaction from it. Endorsements with bad
/// signatures, non-peer endorsers and repeats of one endorser are ignored.
/// Throws Errc::insufficient_endorsements when fewer than `required`
/// endorsements are usable at all, Errc::divergent_results when they are
/// but no digest reaches the threshold.
Transaction assemble_transaction(const Msp& msp, const Proposal& proposal,
                                 const std::vector<ProposalResponse>& responses, const EndorsementPolicy& policy);

}  // namespace hps
