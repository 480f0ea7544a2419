#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hyperpubsub/ledger.hpp"
#include "hyperpubsub/raft.hpp"
#include "hyperpubsub/simnet.hpp"

namespace hps::ordering {

using raft::NodeId;
using raft::Tick;

struct BlockCutConfig {
  std::size_t max_tx_count = 10;
  Tick max_wait = 500;
};

/// A committed transaction waiting to be cut, with the tick it was applied.
struct PendingTx {
  Transaction tx;
  Tick since = 0;
};

enum class CutReason { none, count, timeout };

CutReason cut_reason(const std::vector<PendingTx>& pending, const BlockCutConfig& cfg, Tick now);

/// Emits a block of the oldest min(max_tx_count, pending) transactions, in
/// log order, when the count or age rule fires; they are removed from
/// `pending`. Never emits an empty block.
std::optional<Block> cut_block(std::vector<PendingTx>& pending, const BlockCutConfig& cfg, Tick now,
                               std::uint64_t number, const Hash256& prev_hash);

/// Replicated request to cut the given channel's next block on timeout.
struct CutMarker {
  ChannelId channel;
  std::uint64_t block_number = 0;
};

std::string encode(const CutMarker& m);
CutMarker decode_cut_marker(std::string_view bytes);

// Wire tags of packets on the simulated network.
enum class PacketKind : std::uint8_t { raft = 1, deliver_block = 2, deliver_ack = 3 };

/// Peer -> orderer. `request` asks for an immediate resend from `height`
/// (catch-up after start or restart).
struct DeliverAck {
  ChannelId channel;
  std::uint64_t height = 0;
  bool request = false;
};

std::string frame(PacketKind kind, std::string_view body);
std::pair<PacketKind, std::string> unframe(std::string_view bytes);
std::string encode(const DeliverAck& a);
DeliverAck decode_deliver_ack(std::string_view bytes);
/// deliver_block body: channel + canonical block.
std::string encode_delivery(const ChannelId& channel, const Block& block);
std::pair<ChannelId, Block> decode_delivery(std::string_view bytes);

enum class SubmitStatus { accepted, redirected, unavailable };

std::string_view to_string(SubmitStatus s);

struct SubmitResult {
  SubmitStatus status = SubmitStatus::unavailable;
  std::optional<NodeId> leader;
};

struct OrdererConfig {
  raft::Config raft;
  BlockCutConfig cut;
  Tick retransmit_interval = 100;
  std::size_t delivery_window = 32;
};

/// One ordering-service node: a Raft member carrying every channel's
/// transactions in a shared log, cutting per-channel blocks from the
/// committed prefix and pushing them to peers.
class OrdererNode {
 public:
  OrdererNode(NodeId id, std::vector<NodeId> orderers, std::vector<NodeId> peers, std::vector<ChannelId> channels,
              OrdererConfig config, std::uint64_t seed);

  NodeId id() const { return id_; }

  SubmitResult submit(const Transaction& tx, Tick now);
  std::vector<sim::Packet> tick(Tick now);
  std::vector<sim::Packet> receive(const sim::Packet& packet, Tick now);

  /// Blocks of `channel` from `from` onwards (genesis is block 0).
  std::vector<Block> deliver_blocks(const ChannelId& channel, std::uint64_t from) const;
  const std::vector<Block>& blocks(const ChannelId& channel) const;
  std::uint64_t height(const ChannelId& channel) const;
  std::size_t pending(const ChannelId& channel) const;

  const raft::Node& raft() const { return raft_; }
  bool up() const { return raft_.up(); }
  void crash();
  /// Rebuilds blocks by re-applying the log as the commit index is relearned.
  void restart(Tick now);

 private:
  struct ChannelState {
    std::vector<Block> blocks;
    std::vector<PendingTx> pending;
    std::optional<std::uint64_t> marker_sent_for;
  };

  void apply_committed(Tick now, std::vector<sim::Packet>& out);
  void emit(const ChannelId& channel, Block block, std::vector<sim::Packet>& out);
  void send_window(NodeId peer, const ChannelId& channel, std::vector<sim::Packet>& out);
  void wrap(std::vector<raft::Envelope>&& envs, std::vector<sim::Packet>& out) const;
  ChannelState& channel_state(const ChannelId& channel);
  void reset_derived();

  NodeId id_;
  std::vector<NodeId> peers_;
  std::vector<ChannelId> channels_;
  OrdererConfig config_;
  raft::Node raft_;
  std::map<ChannelId, ChannelState> state_;
  std::uint64_t last_applied_ = 0;
  std::map<std::pair<NodeId, ChannelId>, std::uint64_t> acked_;
  Tick next_retransmit_ = 0;
  std::uint64_t led_term_ = 0;
};

}  // namespace hps::ordering
