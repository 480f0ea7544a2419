#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hyperpubsub/codec.hpp"
#include "hyperpubsub/identity.hpp"

namespace hps {

/// Position of the valid transaction that last wrote a key.
struct Version {
  std::uint64_t block_num = 0;
  std::uint64_t tx_index = 0;

  auto operator<=>(const Version&) const = default;
};

struct KvRead {
  std::string key;
  std::optional<Version> version;  // nullopt: key was absent when read

  bool operator==(const KvRead&) const = default;
};

struct KvWrite {
  std::string key;
  std::string value;
  bool is_delete = false;

  bool operator==(const KvWrite&) const = default;
};

/// Captured effect of one simulation. Reads and writes are kept sorted by key.
struct ReadWriteSet {
  std::vector<KvRead> reads;
  std::vector<KvWrite> writes;

  bool operator==(const ReadWriteSet&) const = default;
};

struct ChaincodeEvent {
  std::string name;
  std::string payload;

  bool operator==(const ChaincodeEvent&) const = default;
};

struct Endorsement {
  IdentityId endorser;
  Hash256 result_digest{};
  std::string signature;

  bool operator==(const Endorsement&) const = default;
};

struct Transaction {
  Hash256 tx_id{};
  ChannelId channel;
  std::string chaincode;
  std::string function;
  std::vector<std::string> args;
  IdentityId creator;
  std::string nonce;
  std::uint64_t timestamp = 0;
  std::string creator_signature;
  std::string response;
  ReadWriteSet rwset;
  std::vector<ChaincodeEvent> events;
  std::vector<Endorsement> endorsements;

  bool operator==(const Transaction&) const = default;
};

/// Bytes signed by the transaction creator; the tx id is their SHA-256.
std::string proposal_payload(const ChannelId& channel, std::string_view chaincode,
                             std::string_view function, const std::vector<std::string>& args,
                             const IdentityId& creator, std::string_view nonce, std::uint64_t timestamp);
std::string proposal_payload(const Transaction& tx);
Hash256 result_digest(std::string_view response, const ReadWriteSet& rwset,
                      const std::vector<ChaincodeEvent>& events);
/// Bytes signed by an endorser: tx id followed by the result digest.
std::string endorsement_payload(const Hash256& tx_id, const Hash256& digest);

std::string encode(const ReadWriteSet& rwset);
ReadWriteSet decode_rwset(std::string_view bytes);
std::string encode(const Transaction& tx);
Transaction decode_transaction(std::string_view bytes);

enum class ValidationFlag : std::uint8_t { valid = 0, mvcc_conflict = 1, policy_failure = 2, access_denied = 3 };

std::string_view to_string(ValidationFlag flag);

struct BlockHeader {
  std::uint64_t number = 0;
  Hash256 prev_hash{};
  Hash256 data_hash{};

  bool operator==(const BlockHeader&) const = default;
};

struct Block {
  BlockHeader header;
  std::vector<Transaction> transactions;
  std::vector<ValidationFlag> validation_flags;  // empty until committed

  bool operator==(const Block&) const = default;
};

std::string encode(const BlockHeader& header);
Hash256 compute_block_hash(const BlockHeader& header);
Hash256 compute_data_hash(const std::vector<Transaction>& transactions);
Block make_block(std::uint64_t number, const Hash256& prev_hash, std::vector<Transaction> transactions);
/// Block 0: no transactions, all-zero previous hash. Identical on every node.
Block make_genesis_block();

std::string encode(const Block& block);
Block decode_block(std::string_view bytes);

struct VersionedValue {
  std::string value;
  Version version;

  bool operator==(const VersionedValue&) const = default;
};

class WorldState {
 public:
  using Map = std::map<std::string, VersionedValue, std::less<>>;

  const VersionedValue* get(std::string_view key) const;
  void put(const std::string& key, std::string value, Version version);
  void erase(std::string_view key);

  /// Entries whose key starts with `prefix`, in key order.
  std::vector<std::pair<std::string, VersionedValue>> scan(std::string_view prefix) const;

  const Map& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Canonical encoding of the whole map, for byte-level comparison.
  std::string encode() const;

  bool operator==(const WorldState&) const = default;

 private:
  Map entries_;
};

using KeySet = std::unordered_set<std::string>;

/// Per-transaction verdict used by commit and replay. The block loop supplies
/// the keys written by earlier valid transactions of the same block.
class TransactionValidator {
 public:
  virtual ~TransactionValidator() = default;
  virtual ValidationFlag validate(const Transaction& tx, const WorldState& state,
                                  const KeySet& written_this_block) const = 0;
};

/// One valid write, as applied to the world state. nullopt value = delete.
struct StateChange {
  std::string key;
  std::optional<VersionedValue> value;
};

/// A chaincode event of a transaction flagged valid, with its chain position.
struct CommittedEvent {
  Version position;
  Hash256 tx_id{};
  IdentityId creator;
  ChaincodeEvent event;
};

struct BlockOutcome {
  std::vector<ValidationFlag> flags;
  std::vector<StateChange> delta;
  std::vector<CommittedEvent> events;
};

/// Validates every transaction of `block` in order against `state` (which is
/// not modified). First writer of a key wins within a block; a tx id that is
/// `already_committed` or repeated within the block is a conflict.
BlockOutcome evaluate_block(const Block& block, const WorldState& state, const TransactionValidator& validator,
                            const std::function<bool(const Hash256&)>& already_committed);

/// Outcome implied by the flags already stored in a committed block.
BlockOutcome outcome_from_flags(const Block& block);

void apply(WorldState& state, const std::vector<StateChange>& delta);

/// Hash-chained, append-only block sequence, optionally mirrored to a file of
/// length-prefixed canonical block encodings.
class Chain {
 public:
  Chain() = default;
  /// Opens (or creates) the file and loads every block it holds.
  explicit Chain(std::filesystem::path file);

  /// Throws Errc::sequence_gap or Errc::chain_break.
  void append(const Block& block);
  /// Throws Errc::out_of_range.
  const Block& at(std::uint64_t number) const;
  std::uint64_t height() const { return blocks_.size(); }
  Hash256 tip_hash() const;
  const std::vector<Block>& blocks() const { return blocks_; }

  /// Full linkage check; throws Errc::chain_break naming the first bad block.
  void verify() const;

 private:
  void check_next(const Block& block) const;

  std::vector<Block> blocks_;
  std::optional<std::filesystem::path> file_;
};

struct TxStatus {
  Version position;
  ValidationFlag flag;
};

struct BlockSummary {
  std::uint64_t number = 0;
  std::string hash_prefix;
  std::size_t tx_count = 0;
  std::size_t invalid_count = 0;
  std::vector<ValidationFlag> flags;
};

std::string format_summary(const BlockSummary& s);

/// One channel's ledger on one peer: the chain plus incrementally maintained
/// world state. Commits are serialized; readers see whole blocks only.
class Ledger {
 public:
  explicit Ledger(ChannelId channel, std::optional<std::filesystem::path> file = std::nullopt);

  const ChannelId& channel() const { return channel_; }

  /// Validates, fills the block's flags, appends it whole and applies the
  /// valid writes. Throws sequence-gap / chain-break before touching state.
  BlockOutcome commit(Block block, const TransactionValidator& validator);

  std::uint64_t height() const;
  Hash256 tip_hash() const;
  /// Throws Errc::out_of_range.
  Block get_block(std::uint64_t number) const;
  std::optional<VersionedValue> get_state(std::string_view key) const;
  std::optional<TxStatus> tx_status(const Hash256& tx_id) const;
  /// Valid-transaction events of blocks [from, to).
  std::vector<CommittedEvent> events(std::uint64_t from, std::uint64_t to) const;

  /// Runs `fn(const WorldState&)` against a consistent committed snapshot.
  template <class F>
  auto read(F&& fn) const {
    std::shared_lock lock(mu_);
    return fn(state_);
  }
  template <class F>
  auto read_chain(F&& fn) const {
    std::shared_lock lock(mu_);
    return fn(chain_);
  }

  WorldState state() const;
  /// Re-validates and re-applies every block from genesis. Throws
  /// Errc::chain_break if the linkage check fails.
  WorldState replay(const TransactionValidator& validator) const;
  void verify_chain() const;

  std::vector<BlockSummary> inspect(std::uint64_t from, std::uint64_t to) const;

 private:
  void index_block(const Block& block, const BlockOutcome& outcome);

  ChannelId channel_;
  mutable std::shared_mutex mu_;
  Chain chain_;
  WorldState state_;
  std::map<Hash256, TxStatus> txs_;
  std::vector<std::vector<CommittedEvent>> events_;  // per block
};

}  // namespace hps
