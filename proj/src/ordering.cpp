#include "hyperpubsub/ordering.hpp"

#include <algorithm>

#include "hyperpubsub/error.hpp"

namespace hps::ordering {
namespace {

Block take_block(std::vector<PendingTx>& pending, std::size_t n, std::uint64_t number, const Hash256& prev_hash) {
  n = std::min(n, pending.size());
  std::vector<Transaction> txs;
  txs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) txs.push_back(std::move(pending[i].tx));
  pending.erase(pending.begin(), pending.begin() + static_cast<std::ptrdiff_t>(n));
  return make_block(number, prev_hash, std::move(txs));
}

}  // namespace

CutReason cut_reason(const std::vector<PendingTx>& pending, const BlockCutConfig& cfg, Tick now) {
  if (pending.empty()) return CutReason::none;
  if (pending.size() >= cfg.max_tx_count) return CutReason::count;
  if (now >= pending.front().since && now - pending.front().since >= cfg.max_wait) return CutReason::timeout;
  return CutReason::none;
}

std::optional<Block> cut_block(std::vector<PendingTx>& pending, const BlockCutConfig& cfg, Tick now,
                               std::uint64_t number, const Hash256& prev_hash) {
  if (cut_reason(pending, cfg, now) == CutReason::none) return std::nullopt;
  return take_block(pending, cfg.max_tx_count, number, prev_hash);
}

std::string encode(const CutMarker& m) {
  Encoder enc;
  enc.bytes(m.channel).u64(m.block_number);
  return std::move(enc).take();
}

CutMarker decode_cut_marker(std::string_view bytes) {
  Decoder dec(bytes);
  CutMarker m;
  m.channel = dec.bytes();
  m.block_number = dec.u64();
  dec.finish();
  return m;
}

std::string frame(PacketKind kind, std::string_view body) {
  Encoder enc;
  enc.u64(static_cast<std::uint64_t>(kind)).bytes(body);
  return std::move(enc).take();
}

std::pair<PacketKind, std::string> unframe(std::string_view bytes) {
  Decoder dec(bytes);
  auto kind = dec.u64();
  if (kind < 1 || kind > 3) throw Error(Errc::malformed, "unknown packet kind");
  auto body = dec.bytes();
  dec.finish();
  return {static_cast<PacketKind>(kind), std::move(body)};
}

std::string encode(const DeliverAck& a) {
  Encoder enc;
  enc.bytes(a.channel).u64(a.height).u64(a.request ? 1 : 0);
  return std::move(enc).take();
}

DeliverAck decode_deliver_ack(std::string_view bytes) {
  Decoder dec(bytes);
  DeliverAck a;
  a.channel = dec.bytes();
  a.height = dec.u64();
  a.request = dec.u64() != 0;
  dec.finish();
  return a;
}

std::string encode_delivery(const ChannelId& channel, const Block& block) {
  Encoder enc;
  enc.bytes(channel).bytes(encode(block));
  return std::move(enc).take();
}

std::pair<ChannelId, Block> decode_delivery(std::string_view bytes) {
  Decoder dec(bytes);
  auto channel = dec.bytes();
  auto block = decode_block(dec.bytes());
  dec.finish();
  return {std::move(channel), std::move(block)};
}

std::string_view to_string(SubmitStatus s) {
  switch (s) {
    case SubmitStatus::accepted: return "accepted";
    case SubmitStatus::redirected: return "redirected";
    case SubmitStatus::unavailable: return "unavailable";
  }
  return "unknown";
}

OrdererNode::OrdererNode(NodeId id, std::vector<NodeId> orderers, std::vector<NodeId> peers,
                         std::vector<ChannelId> channels, OrdererConfig config, std::uint64_t seed)
    : id_(id),
      peers_(std::move(peers)),
      channels_(std::move(channels)),
      config_(config),
      raft_(id, std::move(orderers), config.raft, seed) {
  reset_derived();
  for (auto peer : peers_) {
    for (const auto& ch : channels_) acked_[{peer, ch}] = 1;
  }
}

void OrdererNode::reset_derived() {
  state_.clear();
  for (const auto& ch : channels_) state_[ch].blocks.push_back(make_genesis_block());
  last_applied_ = 0;
}

OrdererNode::ChannelState& OrdererNode::channel_state(const ChannelId& channel) {
  auto it = state_.find(channel);
  if (it == state_.end()) throw Error(Errc::unknown_channel, "orderer does not serve channel '" + channel + "'");
  return it->second;
}

void OrdererNode::wrap(std::vector<raft::Envelope>&& envs, std::vector<sim::Packet>& out) const {
  for (auto& env : envs) out.push_back({env.from, env.to, frame(PacketKind::raft, raft::encode(env.msg))});
}

SubmitResult OrdererNode::submit(const Transaction& tx, Tick now) {
  (void)now;
  if (!state_.contains(tx.channel)) throw Error(Errc::unknown_channel, "unknown channel '" + tx.channel + "'");
  auto r = raft_.propose(raft::EntryKind::transaction, encode(tx));
  switch (r.status) {
    case raft::ProposeStatus::accepted: return {SubmitStatus::accepted, id_};
    case raft::ProposeStatus::redirected: return {SubmitStatus::redirected, r.leader};
    case raft::ProposeStatus::unavailable: break;
  }
  return {SubmitStatus::unavailable, std::nullopt};
}

void OrdererNode::emit(const ChannelId& channel, Block block, std::vector<sim::Packet>& out) {
  auto& cs = state_.at(channel);
  cs.blocks.push_back(std::move(block));
  cs.marker_sent_for.reset();
  auto body = frame(PacketKind::deliver_block, encode_delivery(channel, cs.blocks.back()));
  for (auto peer : peers_) out.push_back({id_, peer, body});
}

void OrdererNode::apply_committed(Tick now, std::vector<sim::Packet>& out) {
  const auto& log = raft_.state().log;
  while (last_applied_ < raft_.state().commit_index) {
    const auto& entry = log[last_applied_++];
    if (entry.kind == raft::EntryKind::transaction) {
      auto tx = decode_transaction(entry.payload);
      auto it = state_.find(tx.channel);
      if (it == state_.end()) continue;
      auto& cs = it->second;
      cs.pending.push_back({std::move(tx), now});
      if (cs.pending.size() >= config_.cut.max_tx_count) {
        auto number = cs.blocks.size();
        auto prev = compute_block_hash(cs.blocks.back().header);
        emit(it->first, take_block(cs.pending, config_.cut.max_tx_count, number, prev), out);
      }
    } else if (entry.kind == raft::EntryKind::block_cut) {
      auto marker = decode_cut_marker(entry.payload);
      auto it = state_.find(marker.channel);
      if (it == state_.end()) continue;
      auto& cs = it->second;
      // Stale markers (block already cut by count or by an earlier marker) are no-ops.
      if (marker.block_number != cs.blocks.size() || cs.pending.empty()) continue;
      auto prev = compute_block_hash(cs.blocks.back().header);
      emit(it->first, take_block(cs.pending, config_.cut.max_tx_count, marker.block_number, prev), out);
    }
  }
}

std::vector<sim::Packet> OrdererNode::tick(Tick now) {
  std::vector<sim::Packet> out;
  if (!raft_.up()) return out;
  if (raft_.is_leader() && raft_.state().current_term != led_term_) {
    led_term_ = raft_.state().current_term;
    for (auto& [_, cs] : state_) cs.marker_sent_for.reset();
  }
  if (raft_.is_leader()) {
    for (auto& [channel, cs] : state_) {
      if (cut_reason(cs.pending, config_.cut, now) != CutReason::timeout) continue;
      if (cs.marker_sent_for == cs.blocks.size()) continue;
      raft_.propose(raft::EntryKind::block_cut, encode(CutMarker{channel, cs.blocks.size()}));
      cs.marker_sent_for = cs.blocks.size();
    }
  }
  wrap(raft_.tick(now), out);
  apply_committed(now, out);
  if (now >= next_retransmit_) {
    next_retransmit_ = now + config_.retransmit_interval;
    for (auto peer : peers_) {
      for (const auto& ch : channels_) {
        if (acked_[{peer, ch}] < state_.at(ch).blocks.size()) send_window(peer, ch, out);
      }
    }
  }
  return out;
}

void OrdererNode::send_window(NodeId peer, const ChannelId& channel, std::vector<sim::Packet>& out) {
  const auto& blocks = state_.at(channel).blocks;
  auto from = acked_[{peer, channel}];
  auto to = std::min<std::uint64_t>(blocks.size(), from + config_.delivery_window);
  for (auto n = from; n < to; ++n) {
    out.push_back({id_, peer, frame(PacketKind::deliver_block, encode_delivery(channel, blocks[n]))});
  }
}

std::vector<sim::Packet> OrdererNode::receive(const sim::Packet& packet, Tick now) {
  std::vector<sim::Packet> out;
  if (!raft_.up()) return out;
  auto [kind, body] = unframe(packet.bytes);
  if (kind == PacketKind::raft) {
    wrap(raft_.receive({packet.from, packet.to, raft::decode_message(body)}, now), out);
    apply_committed(now, out);
  } else if (kind == PacketKind::deliver_ack) {
    auto ack = decode_deliver_ack(body);
    if (!state_.contains(ack.channel)) return out;
    auto& acked = acked_[{packet.from, ack.channel}];
    if (ack.request) {
      acked = ack.height;
      send_window(packet.from, ack.channel, out);
    } else {
      acked = std::max(acked, ack.height);
    }
  }
  return out;
}

std::vector<Block> OrdererNode::deliver_blocks(const ChannelId& channel, std::uint64_t from) const {
  auto it = state_.find(channel);
  if (it == state_.end()) throw Error(Errc::unknown_channel, "unknown channel '" + channel + "'");
  const auto& blocks = it->second.blocks;
  if (from >= blocks.size()) return {};
  return {blocks.begin() + static_cast<std::ptrdiff_t>(from), blocks.end()};
}

const std::vector<Block>& OrdererNode::blocks(const ChannelId& channel) const {
  auto it = state_.find(channel);
  if (it == state_.end()) throw Error(Errc::unknown_channel, "unknown channel '" + channel + "'");
  return it->second.blocks;
}

std::uint64_t OrdererNode::height(const ChannelId& channel) const { return blocks(channel).size(); }

std::size_t OrdererNode::pending(const ChannelId& channel) const {
  auto it = state_.find(channel);
  return it == state_.end() ? 0 : it->second.pending.size();
}

void OrdererNode::crash() {
  raft_.crash();
  reset_derived();
  led_term_ = 0;
}

void OrdererNode::restart(Tick now) { raft_.restart(now); }

}  // namespace hps::ordering
