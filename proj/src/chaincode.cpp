#include "hyperpubsub/chaincode.hpp"

#include <algorithm>

namespace hps {

bool ChaincodeDescriptor::has_function(std::string_view fn) const {
  return std::find(functions.begin(), functions.end(), fn) != functions.end();
}

TxContext::TxContext(const WorldState& snapshot, Identity invoker, Hash256 tx_id, std::uint64_t timestamp)
    : snapshot_(snapshot), invoker_(std::move(invoker)), tx_id_(tx_id), timestamp_(timestamp) {}

void TxContext::record_read(const std::string& key) {
  if (reads_.contains(key)) return;
  const auto* v = snapshot_.get(key);
  reads_.emplace(key, v ? std::optional<Version>(v->version) : std::nullopt);
}

std::optional<std::string> TxContext::get_state(const std::string& key) {
  // Read-your-writes; such reads are not part of the read set.
  if (auto w = writes_.find(key); w != writes_.end()) return w->second;
  record_read(key);
  const auto* v = snapshot_.get(key);
  if (!v) return std::nullopt;
  return v->value;
}

void TxContext::put_state(const std::string& key, std::string value) {
  if (key.empty()) throw Error(Errc::chaincode_error, "empty state key");
  writes_[key] = std::move(value);
}

void TxContext::delete_state(const std::string& key) { writes_[key] = std::nullopt; }

std::vector<std::pair<std::string, std::string>> TxContext::get_by_prefix(std::string_view prefix) {
  std::map<std::string, std::string> merged;
  for (auto& [key, vv] : snapshot_.scan(prefix)) {
    if (!writes_.contains(key)) record_read(key);
    merged.emplace(key, vv.value);
  }
  for (auto it = writes_.lower_bound(prefix); it != writes_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    if (it->second) {
      merged[it->first] = *it->second;
    } else {
      merged.erase(it->first);
    }
  }
  return {merged.begin(), merged.end()};
}

void TxContext::emit_event(std::string name, std::string payload) {
  events_.push_back({std::move(name), std::move(payload)});
}

ReadWriteSet TxContext::rwset() const {
  ReadWriteSet rw;
  for (const auto& [key, version] : reads_) rw.reads.push_back({key, version});
  for (const auto& [key, value] : writes_) {
    rw.writes.push_back(value ? KvWrite{key, *value, false} : KvWrite{key, "", true});
  }
  return rw;
}

ExecutionResult execute(const Chaincode& chaincode, std::string_view function,
                        const std::vector<std::string>& args, const WorldState& snapshot,
                        const Identity& invoker, const Hash256& tx_id, std::uint64_t timestamp) {
  if (!chaincode.descriptor().has_function(function)) {
    throw Error(Errc::unknown_function, "chaincode '" + chaincode.descriptor().name + "' has no function '" +
                                            std::string(function) + "'");
  }
  TxContext ctx(snapshot, invoker, tx_id, timestamp);
  ExecutionResult result;
  try {
    result.response = chaincode.invoke(ctx, function, args);
  } catch (const Error& e) {
    if (e.code() == Errc::malformed) throw Error(Errc::chaincode_error, e.what());
    throw;
  } catch (const std::exception& e) {
    throw Error(Errc::chaincode_error, e.what());
  }
  result.rwset = ctx.rwset();
  result.events = ctx.events();
  return result;
}

void ChaincodeRegistry::install(std::shared_ptr<const Chaincode> chaincode) {
  by_channel_[chaincode->descriptor().channel] = std::move(chaincode);
}

const Chaincode& ChaincodeRegistry::for_channel(const ChannelId& channel) const {
  const auto* cc = find(channel);
  if (!cc) throw Error(Errc::unknown_channel, "no chaincode installed on channel '" + channel + "'");
  return *cc;
}

const Chaincode* ChaincodeRegistry::find(const ChannelId& channel) const {
  auto it = by_channel_.find(channel);
  return it == by_channel_.end() ? nullptr : it->second.get();
}

std::vector<ChannelId> ChaincodeRegistry::channels() const {
  std::vector<ChannelId> out;
  for (const auto& [ch, _] : by_channel_) out.push_back(ch);
  return out;
}

}  // namespace hps
