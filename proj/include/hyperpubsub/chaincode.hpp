#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hyperpubsub/error.hpp"
#include "hyperpubsub/identity.hpp"
#include "hyperpubsub/ledger.hpp"

namespace hps {

/// k-of-N endorsement requirement over a channel's endorsers.
struct EndorsementPolicy {
  std::size_t required = 2;
};

struct ChaincodeDescriptor {
  std::string name;
  ChannelId channel;
  std::vector<std::string> functions;
  EndorsementPolicy policy;

  bool has_function(std::string_view fn) const;
};

/// Execution context of one simulated invocation. Reads go to an immutable
/// snapshot and are recorded with the version observed; writes are buffered.
class TxContext {
 public:
  TxContext(const WorldState& snapshot, Identity invoker, Hash256 tx_id, std::uint64_t timestamp);

  std::optional<std::string> get_state(const std::string& key);
  void put_state(const std::string& key, std::string value);
  void delete_state(const std::string& key);
  /// Key-ordered view of snapshot plus buffered writes under `prefix`.
  std::vector<std::pair<std::string, std::string>> get_by_prefix(std::string_view prefix);
  void emit_event(std::string name, std::string payload);

  const Identity& invoker() const { return invoker_; }
  const Hash256& tx_id() const { return tx_id_; }
  std::uint64_t timestamp() const { return timestamp_; }

  ReadWriteSet rwset() const;
  const std::vector<ChaincodeEvent>& events() const { return events_; }

 private:
  void record_read(const std::string& key);

  const WorldState& snapshot_;
  Identity invoker_;
  Hash256 tx_id_;
  std::uint64_t timestamp_;
  std::map<std::string, std::optional<Version>, std::less<>> reads_;
  std::map<std::string, std::optional<std::string>, std::less<>> writes_;  // nullopt: delete
  std::vector<ChaincodeEvent> events_;
};

class Chaincode {
 public:
  virtual ~Chaincode() = default;
  virtual const ChaincodeDescriptor& descriptor() const = 0;
  /// Business-rule violations are reported by throwing hps::Error.
  virtual std::string invoke(TxContext& ctx, std::string_view function,
                             const std::vector<std::string>& args) const = 0;
};

struct ExecutionResult {
  std::string response;
  ReadWriteSet rwset;
  std::vector<ChaincodeEvent> events;

  Hash256 digest() const { return result_digest(response, rwset, events); }
  bool operator==(const ExecutionResult&) const = default;
};

/// Pure function of (snapshot, function, args, invoker, tx id, timestamp).
/// Throws Errc::unknown_function, or the chaincode's own error code;
/// malformed arguments and unexpected failures become Errc::chaincode_error.
ExecutionResult execute(const Chaincode& chaincode, std::string_view function,
                        const std::vector<std::string>& args, const WorldState& snapshot,
                        const Identity& invoker, const Hash256& tx_id, std::uint64_t timestamp);

/// One chaincode per channel.
class ChaincodeRegistry {
 public:
  void install(std::shared_ptr<const Chaincode> chaincode);
  /// Throws Errc::unknown_channel.
  const Chaincode& for_channel(const ChannelId& channel) const;
  const Chaincode* find(const ChannelId& channel) const;
  std::vector<ChannelId> channels() const;

 private:
  std::map<ChannelId, std::shared_ptr<const Chaincode>> by_channel_;
};

}  // namespace hps
