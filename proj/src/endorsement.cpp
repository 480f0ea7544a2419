#include "hyperpubsub/endorsement.hpp"

#include <map>
#include <set>

namespace hps {

std::string Proposal::payload() const {
  return proposal_payload(channel, chaincode, function, args, creator, nonce, timestamp);
}

Hash256 Proposal::tx_id() const { return crypto::sha256(payload()); }

Proposal create_proposal(const Msp& msp, const Signer& client, const ChannelId& channel, std::string chaincode,
                         std::string function, std::vector<std::string> args, std::string nonce,
                         std::uint64_t timestamp, AccessMode mode) {
  if (!msp.check_channel_access(client.identity, channel, mode)) {
    throw Error(Errc::access_denied, client.identity.name + " may not invoke on channel " + channel);
  }
  Proposal p{channel, std::move(chaincode), std::move(function), std::move(args), client.identity.id,
             std::move(nonce), timestamp, {}};
  p.signature = client.sign(p.payload());
  return p;
}

ProposalResponse simulate(const Signer& endorser, const Msp& msp, const Chaincode& chaincode,
                          const Ledger& ledger, const Proposal& proposal) {
  auto creator = msp.find_by_id(proposal.creator);
  if (!creator || !msp.verify_signature(*creator, proposal.payload(), proposal.signature)) {
    throw Error(Errc::bad_proposal_signature, "proposal signature does not verify");
  }
  if (proposal.chaincode != chaincode.descriptor().name) {
    throw Error(Errc::simulation_failure, "chaincode '" + proposal.chaincode + "' not installed",
                Errc::unknown_function);
  }
  const auto tx_id = proposal.tx_id();
  ExecutionResult result;
  try {
    result = ledger.read([&](const WorldState& snapshot) {
      return execute(chaincode, proposal.function, proposal.args, snapshot, *creator, tx_id, proposal.timestamp);
    });
  } catch (const Error& e) {
    throw Error(Errc::simulation_failure, e.what(), e.code());
  }
  ProposalResponse out;
  out.endorsement.endorser = endorser.identity.id;
  out.endorsement.result_digest = result.digest();
  out.endorsement.signature = endorser.sign(endorsement_payload(tx_id, out.endorsement.result_digest));
  out.result = std::move(result);
  return out;
}

Transaction assemble_transaction(const Msp& msp, const Proposal& proposal,
                                 const std::vector<ProposalResponse>& responses, const EndorsementPolicy& policy) {
  const auto tx_id = proposal.tx_id();
  std::set<IdentityId> endorsers;
  std::map<Hash256, std::vector<const ProposalResponse*>> by_digest;
  for (const auto& r : responses) {
    const auto& e = r.endorsement;
    auto who = msp.find_by_id(e.endorser);
    if (!who || who->role != Role::peer || endorsers.contains(e.endorser)) continue;
    if (e.result_digest != r.result.digest()) continue;
    if (!msp.verify_signature(*who, endorsement_payload(tx_id, e.result_digest), e.signature)) continue;
    endorsers.insert(e.endorser);
    by_digest[e.result_digest].push_back(&r);
  }
  if (endorsers.size() < policy.required) {
    throw Error(Errc::insufficient_endorsements, std::to_string(endorsers.size()) + " usable endorsements, " +
                                                     std::to_string(policy.required) + " required");
  }
  const std::vector<const ProposalResponse*>* best = nullptr;
  for (const auto& [digest, group] : by_digest) {
    if (!best || group.size() > best->size()) best = &group;
  }
  if (best->size() < policy.required) {
    throw Error(Errc::divergent_results, "no result digest reached " + std::to_string(policy.required) +
                                             " matching endorsements");
  }
  const auto& agreed = best->front()->result;
  Transaction tx;
  tx.tx_id = tx_id;
  tx.channel = proposal.channel;
  tx.chaincode = proposal.chaincode;
  tx.function = proposal.function;
  tx.args = proposal.args;
  tx.creator = proposal.creator;
  tx.nonce = proposal.nonce;
  tx.timestamp = proposal.timestamp;
  tx.creator_signature = proposal.signature;
  tx.response = agreed.response;
  tx.rwset = agreed.rwset;
  tx.events = agreed.events;
  for (const auto* r : *best) tx.endorsements.push_back(r->endorsement);
  return tx;
}

}  // namespace hps
