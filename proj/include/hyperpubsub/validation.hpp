#pragma once

#include <map>

#include "hyperpubsub/chaincode.hpp"
#include "hyperpubsub/identity.hpp"
#include "hyperpubsub/ledger.hpp"

namespace hps {

/// Verdict for one transaction, checked in this order:
///  policy-failure  tx id or creator signature invalid, or fewer than
///                  `policy.required` distinct peer endorsements whose
///                  signature verifies over the transaction's own result;
///                  any failing endorsement signature also fails the policy
///  access-denied   creator lacks write access to the channel
///  mvcc-conflict   a read version differs from `state`, or a read or
///                  written key was written earlier in the same block
ValidationFlag validate_transaction(const Transaction& tx, const WorldState& state, const EndorsementPolicy& policy,
                                    const KeySet& written_this_block, const Msp& msp);

/// Validator bound to an MSP and per-channel policies.
class Validator final : public TransactionValidator {
 public:
  Validator(const Msp& msp, std::map<ChannelId, EndorsementPolicy> policies);
  /// Policies taken from the installed chaincodes' descriptors.
  Validator(const Msp& msp, const ChaincodeRegistry& registry);

  ValidationFlag validate(const Transaction& tx, const WorldState& state,
                          const KeySet& written_this_block) const override;

  const EndorsementPolicy& policy(const ChannelId& channel) const;

 private:
  const Msp& msp_;
  std::map<ChannelId, EndorsementPolicy> policies_;
};

/// Validates the block in order, records the flags in it, appends the whole
/// block (invalid transactions included) and applies the valid writes.
/// Returns the flags, the applied delta and the valid transactions' events.
BlockOutcome commit_block(Ledger& ledger, Block block, const TransactionValidator& validator);

}  // namespace hps
