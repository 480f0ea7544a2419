#include "hyperpubsub/ledger.hpp"

#include <fstream>
#include <mutex>
#include <sstream>

#include "hyperpubsub/crypto.hpp"
#include "hyperpubsub/error.hpp"

namespace hps {
namespace {

void put_version(Encoder& enc, const std::optional<Version>& v) {
  // Presence flag first; an absent read encodes as (0) with no position.
  enc.u64(v ? 1 : 0);
  if (v) enc.u64(v->block_num).u64(v->tx_index);
}

std::optional<Version> get_version(Decoder& dec) {
  auto present = dec.u64();
  if (present > 1) throw Error(Errc::malformed, "bad version presence flag");
  if (!present) return std::nullopt;
  Version v;
  v.block_num = dec.u64();
  v.tx_index = dec.u64();
  return v;
}

std::string encode_events(const std::vector<ChaincodeEvent>& events) {
  Encoder enc;
  enc.count(events.size());
  for (const auto& e : events) enc.bytes(e.name).bytes(e.payload);
  return std::move(enc).take();
}

std::vector<ChaincodeEvent> decode_events(std::string_view bytes) {
  Decoder dec(bytes);
  std::vector<ChaincodeEvent> out(dec.count());
  for (auto& e : out) {
    e.name = dec.bytes();
    e.payload = dec.bytes();
  }
  dec.finish();
  return out;
}

std::string encode_endorsements(const std::vector<Endorsement>& endorsements) {
  Encoder enc;
  enc.count(endorsements.size());
  for (const auto& e : endorsements) enc.bytes(e.endorser).hash(e.result_digest).bytes(e.signature);
  return std::move(enc).take();
}

std::vector<Endorsement> decode_endorsements(std::string_view bytes) {
  Decoder dec(bytes);
  std::vector<Endorsement> out(dec.count());
  for (auto& e : out) {
    e.endorser = dec.bytes();
    e.result_digest = dec.hash();
    e.signature = dec.bytes();
  }
  dec.finish();
  return out;
}

void write_record(const std::filesystem::path& file, const std::string& payload) {
  std::ofstream out(file, std::ios::binary | std::ios::app);
  if (!out) throw Error(Errc::io_error, "cannot open block file " + file.string());
  Encoder len;
  len.bytes(payload);  // 4-byte big-endian length prefix + payload
  const auto& rec = len.data();
  out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  out.flush();
  if (!out) throw Error(Errc::io_error, "short write to block file " + file.string());
}

}  // namespace

std::string proposal_payload(const ChannelId& channel, std::string_view chaincode, std::string_view function,
                             const std::vector<std::string>& args, const IdentityId& creator,
                             std::string_view nonce, std::uint64_t timestamp) {
  Encoder enc;
  enc.bytes(channel).bytes(chaincode).bytes(function).strings(args).bytes(creator).bytes(nonce).u64(timestamp);
  return std::move(enc).take();
}

std::string proposal_payload(const Transaction& tx) {
  return proposal_payload(tx.channel, tx.chaincode, tx.function, tx.args, tx.creator, tx.nonce, tx.timestamp);
}

Hash256 result_digest(std::string_view response, const ReadWriteSet& rwset,
                      const std::vector<ChaincodeEvent>& events) {
  Encoder enc;
  enc.bytes(response).bytes(encode(rwset)).bytes(encode_events(events));
  return crypto::sha256(enc.data());
}

std::string endorsement_payload(const Hash256& tx_id, const Hash256& digest) {
  Encoder enc;
  enc.hash(tx_id).hash(digest);
  return std::move(enc).take();
}

std::string encode(const ReadWriteSet& rwset) {
  Encoder enc;
  enc.count(rwset.reads.size());
  for (const auto& r : rwset.reads) {
    enc.bytes(r.key);
    put_version(enc, r.version);
  }
  enc.count(rwset.writes.size());
  for (const auto& w : rwset.writes) enc.bytes(w.key).bytes(w.value).u64(w.is_delete ? 1 : 0);
  return std::move(enc).take();
}

ReadWriteSet decode_rwset(std::string_view bytes) {
  Decoder dec(bytes);
  ReadWriteSet rw;
  rw.reads.resize(dec.count());
  for (auto& r : rw.reads) {
    r.key = dec.bytes();
    r.version = get_version(dec);
  }
  rw.writes.resize(dec.count());
  for (auto& w : rw.writes) {
    w.key = dec.bytes();
    w.value = dec.bytes();
    w.is_delete = dec.u64() != 0;
  }
  dec.finish();
  return rw;
}

std::string encode(const Transaction& tx) {
  Encoder enc;
  enc.hash(tx.tx_id)
      .bytes(tx.channel)
      .bytes(tx.chaincode)
      .bytes(tx.function)
      .strings(tx.args)
      .bytes(tx.creator)
      .bytes(tx.nonce)
      .u64(tx.timestamp)
      .bytes(tx.creator_signature)
      .bytes(tx.response)
      .bytes(encode(tx.rwset))
      .bytes(encode_events(tx.events))
      .bytes(encode_endorsements(tx.endorsements));
  return std::move(enc).take();
}

Transaction decode_transaction(std::string_view bytes) {
  Decoder dec(bytes);
  Transaction tx;
  tx.tx_id = dec.hash();
  tx.channel = dec.bytes();
  tx.chaincode = dec.bytes();
  tx.function = dec.bytes();
  tx.args = dec.strings();
  tx.creator = dec.bytes();
  tx.nonce = dec.bytes();
  tx.timestamp = dec.u64();
  tx.creator_signature = dec.bytes();
  tx.response = dec.bytes();
  tx.rwset = decode_rwset(dec.bytes());
  tx.events = decode_events(dec.bytes());
  tx.endorsements = decode_endorsements(dec.bytes());
  dec.finish();
  return tx;
}

std::string_view to_string(ValidationFlag flag) {
  switch (flag) {
    case ValidationFlag::valid: return "valid";
    case ValidationFlag::mvcc_conflict: return "mvcc-conflict";
    case ValidationFlag::policy_failure: return "policy-failure";
    case ValidationFlag::access_denied: return "access-denied";
  }
  return "unknown";
}

std::string encode(const BlockHeader& header) {
  Encoder enc;
  enc.u64(header.number).hash(header.prev_hash).hash(header.data_hash);
  return std::move(enc).take();
}

Hash256 compute_block_hash(const BlockHeader& header) { return crypto::sha256(encode(header)); }

Hash256 compute_data_hash(const std::vector<Transaction>& transactions) {
  Encoder enc;
  enc.count(transactions.size());
  for (const auto& tx : transactions) enc.bytes(encode(tx));
  return crypto::sha256(enc.data());
}

Block make_block(std::uint64_t number, const Hash256& prev_hash, std::vector<Transaction> transactions) {
  Block b;
  b.header.number = number;
  b.header.prev_hash = prev_hash;
  b.header.data_hash = compute_data_hash(transactions);
  b.transactions = std::move(transactions);
  return b;
}

Block make_genesis_block() { return make_block(0, Hash256{}, {}); }

std::string encode(const Block& block) {
  Encoder enc;
  enc.bytes(encode(block.header));
  enc.count(block.transactions.size());
  for (const auto& tx : block.transactions) enc.bytes(encode(tx));
  enc.count(block.validation_flags.size());
  for (auto f : block.validation_flags) enc.u64(static_cast<std::uint64_t>(f));
  return std::move(enc).take();
}

Block decode_block(std::string_view bytes) {
  Decoder dec(bytes);
  Block b;
  {
    auto header = dec.bytes();
    Decoder h(header);
    b.header.number = h.u64();
    b.header.prev_hash = h.hash();
    b.header.data_hash = h.hash();
    h.finish();
  }
  b.transactions.resize(dec.count());
  for (auto& tx : b.transactions) tx = decode_transaction(dec.bytes());
  b.validation_flags.resize(dec.count());
  for (auto& f : b.validation_flags) {
    auto v = dec.u64();
    if (v > 3) throw Error(Errc::malformed, "unknown validation flag");
    f = static_cast<ValidationFlag>(v);
  }
  dec.finish();
  return b;
}

const VersionedValue* WorldState::get(std::string_view key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

void WorldState::put(const std::string& key, std::string value, Version version) {
  entries_[key] = VersionedValue{std::move(value), version};
}

void WorldState::erase(std::string_view key) {
  auto it = entries_.find(key);
  if (it != entries_.end()) entries_.erase(it);
}

std::vector<std::pair<std::string, VersionedValue>> WorldState::scan(std::string_view prefix) const {
  std::vector<std::pair<std::string, VersionedValue>> out;
  for (auto it = entries_.lower_bound(prefix); it != entries_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    out.emplace_back(it->first, it->second);
  }
  return out;
}

std::string WorldState::encode() const {
  Encoder enc;
  enc.count(entries_.size());
  for (const auto& [key, vv] : entries_) {
    enc.bytes(key).bytes(vv.value).u64(vv.version.block_num).u64(vv.version.tx_index);
  }
  return std::move(enc).take();
}

BlockOutcome evaluate_block(const Block& block, const WorldState& state, const TransactionValidator& validator,
                            const std::function<bool(const Hash256&)>& already_committed) {
  BlockOutcome out;
  KeySet written;
  std::set<Hash256> in_block;
  for (std::size_t i = 0; i < block.transactions.size(); ++i) {
    const auto& tx = block.transactions[i];
    ValidationFlag flag;
    if (already_committed(tx.tx_id) || in_block.contains(tx.tx_id)) {
      flag = ValidationFlag::mvcc_conflict;
    } else {
      flag = validator.validate(tx, state, written);
    }
    in_block.insert(tx.tx_id);
    out.flags.push_back(flag);
    if (flag != ValidationFlag::valid) continue;

    Version v{block.header.number, i};
    for (const auto& w : tx.rwset.writes) {
      written.insert(w.key);
      if (w.is_delete) {
        out.delta.push_back({w.key, std::nullopt});
      } else {
        out.delta.push_back({w.key, VersionedValue{w.value, v}});
      }
    }
    for (const auto& e : tx.events) out.events.push_back({v, tx.tx_id, tx.creator, e});
  }
  return out;
}

BlockOutcome outcome_from_flags(const Block& block) {
  BlockOutcome out;
  out.flags = block.validation_flags;
  for (std::size_t i = 0; i < block.transactions.size() && i < block.validation_flags.size(); ++i) {
    if (block.validation_flags[i] != ValidationFlag::valid) continue;
    const auto& tx = block.transactions[i];
    Version v{block.header.number, i};
    for (const auto& w : tx.rwset.writes) {
      if (w.is_delete) {
        out.delta.push_back({w.key, std::nullopt});
      } else {
        out.delta.push_back({w.key, VersionedValue{w.value, v}});
      }
    }
    for (const auto& e : tx.events) out.events.push_back({v, tx.tx_id, tx.creator, e});
  }
  return out;
}

void apply(WorldState& state, const std::vector<StateChange>& delta) {
  for (const auto& change : delta) {
    if (change.value) {
      state.put(change.key, change.value->value, change.value->version);
    } else {
      state.erase(change.key);
    }
  }
}

Chain::Chain(std::filesystem::path file) {
  if (std::filesystem::exists(file)) {
    std::ifstream in(file, std::ios::binary);
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    while (raw.size() - pos >= 4) {
      std::uint32_t n = 0;
      for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<std::uint8_t>(raw[pos + i]);
      if (raw.size() - pos - 4 < n) break;  // torn tail from an interrupted append
      append(decode_block(std::string_view(raw).substr(pos + 4, n)));
      pos += 4 + n;
    }
    if (pos != raw.size()) std::filesystem::resize_file(file, pos);
  }
  file_ = std::move(file);
}

void Chain::check_next(const Block& block) const {
  if (block.header.number != blocks_.size()) {
    throw Error(Errc::sequence_gap, "block " + std::to_string(block.header.number) + " offered at height " +
                                        std::to_string(blocks_.size()));
  }
  if (block.header.prev_hash != tip_hash()) {
    throw Error(Errc::chain_break, "block " + std::to_string(block.header.number) +
                                       " does not link to the current tip");
  }
}

void Chain::append(const Block& block) {
  check_next(block);
  if (block.header.data_hash != compute_data_hash(block.transactions)) {
    throw Error(Errc::chain_break, "block " + std::to_string(block.header.number) + " data hash mismatch");
  }
  if (file_) write_record(*file_, encode(block));
  blocks_.push_back(block);
}

const Block& Chain::at(std::uint64_t number) const {
  if (number >= blocks_.size()) {
    throw Error(Errc::out_of_range, "block " + std::to_string(number) + " beyond height " +
                                        std::to_string(blocks_.size()));
  }
  return blocks_[number];
}

Hash256 Chain::tip_hash() const {
  return blocks_.empty() ? Hash256{} : compute_block_hash(blocks_.back().header);
}

void Chain::verify() const {
  Hash256 prev{};
  for (std::size_t n = 0; n < blocks_.size(); ++n) {
    const auto& b = blocks_[n];
    if (b.header.number != n || b.header.prev_hash != prev ||
        b.header.data_hash != compute_data_hash(b.transactions)) {
      throw Error(Errc::chain_break, "chain linkage broken at block " + std::to_string(n));
    }
    prev = compute_block_hash(b.header);
  }
}

std::string format_summary(const BlockSummary& s) {
  std::ostringstream out;
  out << "{\"number\":" << s.number << ",\"hash\":\"" << s.hash_prefix << "\",\"txs\":" << s.tx_count
      << ",\"invalid\":" << s.invalid_count << ",\"flags\":[";
  for (std::size_t i = 0; i < s.flags.size(); ++i) {
    out << (i ? "," : "") << '"' << to_string(s.flags[i]) << '"';
  }
  out << "]}";
  return out.str();
}

Ledger::Ledger(ChannelId channel, std::optional<std::filesystem::path> file) : channel_(std::move(channel)) {
  if (file) {
    chain_ = Chain(*file);
    for (const auto& b : chain_.blocks()) {
      auto outcome = outcome_from_flags(b);
      hps::apply(state_, outcome.delta);
      index_block(b, outcome);
    }
  }
}

void Ledger::index_block(const Block& block, const BlockOutcome& outcome) {
  for (std::size_t i = 0; i < block.transactions.size(); ++i) {
    // First occurrence wins; later duplicates keep the original status.
    txs_.emplace(block.transactions[i].tx_id, TxStatus{Version{block.header.number, i}, outcome.flags[i]});
  }
  events_.push_back(outcome.events);
}

BlockOutcome Ledger::commit(Block block, const TransactionValidator& validator) {
  std::unique_lock lock(mu_);
  if (block.header.number != chain_.height()) {
    throw Error(Errc::sequence_gap, "block " + std::to_string(block.header.number) + " offered at height " +
                                        std::to_string(chain_.height()));
  }
  if (block.header.prev_hash != chain_.tip_hash()) {
    throw Error(Errc::chain_break, "block " + std::to_string(block.header.number) +
                                       " does not link to the current tip");
  }
  auto outcome = evaluate_block(block, state_, validator,
                                [this](const Hash256& id) { return txs_.contains(id); });
  block.validation_flags = outcome.flags;
  chain_.append(block);
  hps::apply(state_, outcome.delta);
  index_block(block, outcome);
  return outcome;
}

std::uint64_t Ledger::height() const {
  std::shared_lock lock(mu_);
  return chain_.height();
}

Hash256 Ledger::tip_hash() const {
  std::shared_lock lock(mu_);
  return chain_.tip_hash();
}

Block Ledger::get_block(std::uint64_t number) const {
  std::shared_lock lock(mu_);
  return chain_.at(number);
}

std::optional<VersionedValue> Ledger::get_state(std::string_view key) const {
  std::shared_lock lock(mu_);
  const auto* v = state_.get(key);
  if (!v) return std::nullopt;
  return *v;
}

std::optional<TxStatus> Ledger::tx_status(const Hash256& tx_id) const {
  std::shared_lock lock(mu_);
  auto it = txs_.find(tx_id);
  if (it == txs_.end()) return std::nullopt;
  return it->second;
}

std::vector<CommittedEvent> Ledger::events(std::uint64_t from, std::uint64_t to) const {
  std::shared_lock lock(mu_);
  std::vector<CommittedEvent> out;
  to = std::min<std::uint64_t>(to, events_.size());
  for (auto n = from; n < to; ++n) out.insert(out.end(), events_[n].begin(), events_[n].end());
  return out;
}

WorldState Ledger::state() const {
  std::shared_lock lock(mu_);
  return state_;
}

WorldState Ledger::replay(const TransactionValidator& validator) const {
  std::shared_lock lock(mu_);
  chain_.verify();
  WorldState state;
  std::set<Hash256> seen;
  for (const auto& block : chain_.blocks()) {
    auto outcome = evaluate_block(block, state, validator, [&](const Hash256& id) { return seen.contains(id); });
    hps::apply(state, outcome.delta);
    for (const auto& tx : block.transactions) seen.insert(tx.tx_id);
  }
  return state;
}

void Ledger::verify_chain() const {
  std::shared_lock lock(mu_);
  chain_.verify();
}

std::vector<BlockSummary> Ledger::inspect(std::uint64_t from, std::uint64_t to) const {
  std::shared_lock lock(mu_);
  std::vector<BlockSummary> out;
  to = std::min<std::uint64_t>(to, chain_.height());
  for (auto n = from; n < to; ++n) {
    const auto& b = chain_.at(n);
    BlockSummary s;
    s.number = n;
    s.hash_prefix = crypto::to_hex(compute_block_hash(b.header)).substr(0, 16);
    s.tx_count = b.transactions.size();
    s.flags = b.validation_flags;
    for (auto f : b.validation_flags) s.invalid_count += f != ValidationFlag::valid;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace hps
