#include "hyperpubsub/peer.hpp"

#include "hyperpubsub/error.hpp"

namespace hps {

Peer::Peer(raft::NodeId node, Signer signer, const Msp& msp, const ChaincodeRegistry& registry,
           const Validator& validator, std::vector<raft::NodeId> orderers,
           std::optional<std::filesystem::path> data_dir)
    : node_(node),
      signer_(std::move(signer)),
      msp_(msp),
      registry_(registry),
      validator_(validator),
      orderers_(std::move(orderers)) {
  for (const auto& ch : registry_.channels()) {
    std::optional<std::filesystem::path> file;
    if (data_dir) {
      auto dir = *data_dir / signer_.identity.name;
      std::filesystem::create_directories(dir);
      file = dir / (ch + ".blocks");
    }
    auto ledger = std::make_unique<Ledger>(ch, file);
    if (ledger->height() == 0) ledger->commit(make_genesis_block(), validator_);
    ledgers_.emplace(ch, std::move(ledger));
  }
}

ProposalResponse Peer::endorse(const Proposal& proposal) const {
  if (!up_) throw Error(Errc::unavailable, signer_.identity.name + " is down");
  return simulate(signer_, msp_, registry_.for_channel(proposal.channel), ledger(proposal.channel), proposal);
}

std::vector<sim::Packet> Peer::receive(const sim::Packet& packet) {
  std::vector<sim::Packet> out;
  if (!up_) return out;
  auto [kind, body] = ordering::unframe(packet.bytes);
  if (kind != ordering::PacketKind::deliver_block) return out;
  auto [channel, block] = ordering::decode_delivery(body);
  auto it = ledgers_.find(channel);
  if (it == ledgers_.end()) return out;
  auto& ledger = *it->second;
  if (block.header.number == ledger.height()) {
    try {
      ledger.commit(std::move(block), validator_);
    } catch (const Error& e) {
      if (e.code() != Errc::chain_break) throw;
    }
  }
  ordering::DeliverAck ack{channel, ledger.height(), false};
  out.push_back({node_, packet.from, ordering::frame(ordering::PacketKind::deliver_ack, ordering::encode(ack))});
  return out;
}

std::vector<sim::Packet> Peer::request_catch_up() const {
  std::vector<sim::Packet> out;
  for (const auto& [channel, ledger] : ledgers_) {
    ordering::DeliverAck ack{channel, ledger->height(), true};
    auto bytes = ordering::frame(ordering::PacketKind::deliver_ack, ordering::encode(ack));
    for (auto o : orderers_) out.push_back({node_, o, bytes});
  }
  return out;
}

std::vector<sim::Packet> Peer::restart() {
  up_ = true;
  return request_catch_up();
}

const Ledger& Peer::ledger(const ChannelId& channel) const {
  auto it = ledgers_.find(channel);
  if (it == ledgers_.end()) throw Error(Errc::unknown_channel, "peer has no ledger for channel '" + channel + "'");
  return *it->second;
}

std::vector<ChannelId> Peer::channels() const {
  std::vector<ChannelId> out;
  for (const auto& [ch, _] : ledgers_) out.push_back(ch);
  return out;
}

}  // namespace hps
