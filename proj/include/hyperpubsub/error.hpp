#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hps {

/// Error codes shared by every module. Each value corresponds to one named
/// failure of a public operation; `to_string` yields the kebab-case name
/// that also appears in HTTP error bodies and scenario diagnostics.
enum class Errc {
  malformed,
  // identity
  duplicate_name,
  unknown_role,
  unknown_identity,
  bad_credential,
  session_expired,
  // ledger
  sequence_gap,
  chain_break,
  out_of_range,
  // chaincode
  unknown_function,
  chaincode_error,
  account_exists,
  not_owner,
  bad_prices,
  no_category,
  not_admin,
  bad_amount,
  listing_exists,
  unknown_photo,
  unknown_recipient,
  insufficient_funds,
  self_purchase,
  already_published,
  // endorsement
  access_denied,
  bad_proposal_signature,
  simulation_failure,
  insufficient_endorsements,
  divergent_results,
  // ordering
  unavailable,
  // pubsub
  unknown_topic,
  // network / cli
  bad_config,
  unknown_channel,
  unknown_target,
  timeout,
  mvcc_conflict,
  io_error,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, Errc cause = Errc::malformed)
      : std::runtime_error(message), code_(code), cause_(cause) {}

  Errc code() const noexcept { return code_; }
  /// For wrapping errors (simulation-failure), the underlying chaincode code.
  Errc cause() const noexcept { return cause_; }

 private:
  Errc code_;
  Errc cause_;
};

}  // namespace hps
