#pragma once

#include <string>
#include <vector>

#include "hyperpubsub/builtins.hpp"
#include "hyperpubsub/crypto.hpp"
#include "hyperpubsub/endorsement.hpp"
#include "hyperpubsub/identity.hpp"
#include "hyperpubsub/validation.hpp"

namespace hps::test {

inline Msp::Options fast_msp() {
  Msp::Options o;
  o.credential_cost = crypto::HashCost::minimal;
  return o;
}

inline Signer enroll(Msp& msp, const std::string& name, Role role) {
  auto seed = crypto::sha256("seed:" + name);
  auto kp = crypto::keypair_from_seed(std::string(seed.begin(), seed.end()));
  auto id = msp.register_identity(name, role, kp.public_key, name + "-pw");
  return Signer{id, kp.secret_key};
}

// An MSP with six peers, an admin, a photographer and two customers, plus the
// built-in chaincodes under a 2-of-N policy.
struct Members {
  Msp msp{fast_msp()};
  std::vector<Signer> peers;
  Signer admin = enroll(msp, "admin", Role::admin);
  Signer alice = enroll(msp, "alice", Role::photographer);
  Signer bob = enroll(msp, "bob", Role::customer);
  Signer carol = enroll(msp, "carol", Role::customer);
  ChaincodeRegistry registry = market::builtin_registry({2});
  Validator validator{msp, registry};
  int nonce = 0;

  Members() {
    for (int i = 0; i < 6; ++i) peers.push_back(enroll(msp, "peer" + std::to_string(i), Role::peer));
  }

  Proposal propose(const Signer& who, const ChannelId& ch, std::string fn, std::vector<std::string> args) {
    return create_proposal(msp, who, ch, registry.for_channel(ch).descriptor().name, std::move(fn),
                           std::move(args), "n" + std::to_string(nonce++), 0);
  }

  std::vector<ProposalResponse> simulate_on(const Ledger& ledger, const Proposal& p, std::size_t n = 2) {
    std::vector<ProposalResponse> out;
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(simulate(peers[i], msp, registry.for_channel(ledger.channel()), ledger, p));
    }
    return out;
  }

  Transaction endorsed(const Ledger& ledger, const Signer& who, std::string fn, std::vector<std::string> args) {
    auto p = propose(who, ledger.channel(), std::move(fn), std::move(args));
    return assemble_transaction(msp, p, simulate_on(ledger, p), {2});
  }

  void genesis(Ledger& ledger) { ledger.commit(make_genesis_block(), validator); }

  BlockOutcome commit(Ledger& ledger, std::vector<Transaction> txs) {
    return commit_block(ledger, make_block(ledger.height(), ledger.tip_hash(), std::move(txs)), validator);
  }
};

}  // namespace hps::test
