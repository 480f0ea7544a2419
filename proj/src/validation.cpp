#include "hyperpubsub/validation.hpp"

#include <set>

namespace hps {

ValidationFlag validate_transaction(const Transaction& tx, const WorldState& state, const EndorsementPolicy& policy,
                                    const KeySet& written_this_block, const Msp& msp) {
  const auto payload = proposal_payload(tx);
  if (crypto::sha256(payload) != tx.tx_id) return ValidationFlag::policy_failure;
  auto creator = msp.find_by_id(tx.creator);
  if (!creator || !msp.verify_signature(*creator, payload, tx.creator_signature)) {
    return ValidationFlag::policy_failure;
  }

  const auto digest = result_digest(tx.response, tx.rwset, tx.events);
  const auto signed_bytes = endorsement_payload(tx.tx_id, digest);
  std::set<IdentityId> endorsers;
  for (const auto& e : tx.endorsements) {
    auto who = msp.find_by_id(e.endorser);
    if (!who || who->role != Role::peer || e.result_digest != digest ||
        !msp.verify_signature(*who, signed_bytes, e.signature)) {
      return ValidationFlag::policy_failure;
    }
    endorsers.insert(e.endorser);
  }
  if (endorsers.size() < policy.required) return ValidationFlag::policy_failure;

  if (!msp.check_channel_access(tx.creator, tx.channel, AccessMode::write)) return ValidationFlag::access_denied;

  for (const auto& r : tx.rwset.reads) {
    if (written_this_block.contains(r.key)) return ValidationFlag::mvcc_conflict;
    const auto* current = state.get(r.key);
    std::optional<Version> now = current ? std::optional<Version>(current->version) : std::nullopt;
    if (now != r.version) return ValidationFlag::mvcc_conflict;
  }
  for (const auto& w : tx.rwset.writes) {
    if (written_this_block.contains(w.key)) return ValidationFlag::mvcc_conflict;
  }
  return ValidationFlag::valid;
}

Validator::Validator(const Msp& msp, std::map<ChannelId, EndorsementPolicy> policies)
    : msp_(msp), policies_(std::move(policies)) {}

Validator::Validator(const Msp& msp, const ChaincodeRegistry& registry) : msp_(msp) {
  for (const auto& ch : registry.channels()) policies_[ch] = registry.for_channel(ch).descriptor().policy;
}

const EndorsementPolicy& Validator::policy(const ChannelId& channel) const {
  static const EndorsementPolicy fallback{};
  auto it = policies_.find(channel);
  return it == policies_.end() ? fallback : it->second;
}

ValidationFlag Validator::validate(const Transaction& tx, const WorldState& state,
                                   const KeySet& written_this_block) const {
  if (!policies_.contains(tx.channel)) return ValidationFlag::policy_failure;
  return validate_transaction(tx, state, policy(tx.channel), written_this_block, msp_);
}

BlockOutcome commit_block(Ledger& ledger, Block block, const TransactionValidator& validator) {
  return ledger.commit(std::move(block), validator);
}

}  // namespace hps
