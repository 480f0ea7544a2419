#include "hyperpubsub/network.hpp"

#include <algorithm>
#include <charconv>

#include "hyperpubsub/error.hpp"

namespace hps {
namespace {

constexpr raft::Tick kResubmitAfter = 2000;

std::shared_ptr<const Chaincode> builtin_for(const ChannelId& channel, EndorsementPolicy policy) {
  if (channel == kClientsChannel) return std::make_shared<market::ClientsChaincode>(channel, policy);
  if (channel == kPhotosChannel) return std::make_shared<market::PhotosChaincode>(channel, policy);
  if (channel == kTradesChannel) return std::make_shared<market::TradesChaincode>(channel, policy);
  if (channel == kAdminChannel) return std::make_shared<market::AdminChaincode>(channel, policy);
  throw Error(Errc::bad_config, "no chaincode for channel '" + channel + "'");
}

std::string_view to_string(crypto::HashCost cost) {
  return cost == crypto::HashCost::minimal ? "minimal" : "interactive";
}

}  // namespace

void NetworkConfig::validate() const {
  if (endorsers == 0) throw Error(Errc::bad_config, "endorser count must be at least 1");
  if (orderers == 0) throw Error(Errc::bad_config, "orderer count must be at least 1");
  if (channels.empty()) throw Error(Errc::bad_config, "no channels configured");
  auto known = default_channels();
  std::set<ChannelId> seen;
  for (const auto& ch : channels) {
    if (std::find(known.begin(), known.end(), ch) == known.end()) {
      throw Error(Errc::bad_config, "no chaincode for channel '" + ch + "'");
    }
    if (!seen.insert(ch).second) throw Error(Errc::bad_config, "channel '" + ch + "' listed twice");
  }
  if (endorsement_required == 0 || endorsement_required > endorsers) {
    throw Error(Errc::bad_config, "endorsement_required must be in [1, endorsers]");
  }
  if (endorsement_fanout != 0 && (endorsement_fanout < endorsement_required || endorsement_fanout > endorsers)) {
    throw Error(Errc::bad_config, "endorsement_fanout must be 0 or in [endorsement_required, endorsers]");
  }
  const auto& r = ordering.raft;
  if (r.election_timeout_min == 0 || r.election_timeout_max < r.election_timeout_min ||
      r.heartbeat_interval == 0 || r.heartbeat_interval >= r.election_timeout_min) {
    throw Error(Errc::bad_config, "raft timing must satisfy 0 < heartbeat < election_timeout_min <= max");
  }
  if (ordering.cut.max_tx_count == 0 || ordering.cut.max_wait == 0) {
    throw Error(Errc::bad_config, "block cut limits must be positive");
  }
  if (ordering.retransmit_interval == 0 || ordering.delivery_window == 0) {
    throw Error(Errc::bad_config, "delivery retransmission settings must be positive");
  }
}

NetworkConfig NetworkConfig::from_json(const nlohmann::json& j) {
  NetworkConfig c;
  try {
    c.endorsers = j.value("endorsers", c.endorsers);
    c.orderers = j.value("orderers", c.orderers);
    c.channels = j.value("channels", c.channels);
    c.endorsement_required = j.value("endorsement_required", c.endorsement_required);
    c.endorsement_fanout = j.value("endorsement_fanout", c.endorsement_fanout);
    c.ordering.cut.max_tx_count = j.value("max_tx_count", c.ordering.cut.max_tx_count);
    c.ordering.cut.max_wait = j.value("max_wait", c.ordering.cut.max_wait);
    c.ordering.raft.election_timeout_min = j.value("election_timeout_min", c.ordering.raft.election_timeout_min);
    c.ordering.raft.election_timeout_max = j.value("election_timeout_max", c.ordering.raft.election_timeout_max);
    c.ordering.raft.heartbeat_interval = j.value("heartbeat_interval", c.ordering.raft.heartbeat_interval);
    c.ordering.retransmit_interval = j.value("retransmit_interval", c.ordering.retransmit_interval);
    c.ordering.delivery_window = j.value("delivery_window", c.ordering.delivery_window);
    if (j.contains("simnet")) c.simnet = sim::SimNetConfig::from_json(j.at("simnet"));
    if (j.contains("data_dir") && !j.at("data_dir").is_null()) {
      c.data_dir = j.at("data_dir").get<std::string>();
    }
    auto cost = j.value("credential_cost", std::string(to_string(c.credential_cost)));
    if (cost == "minimal") {
      c.credential_cost = crypto::HashCost::minimal;
    } else if (cost == "interactive") {
      c.credential_cost = crypto::HashCost::interactive;
    } else {
      throw Error(Errc::bad_config, "credential_cost must be 'interactive' or 'minimal'");
    }
    c.admin_name = j.value("admin_name", c.admin_name);
    c.admin_credential = j.value("admin_credential", c.admin_credential);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::bad_config, std::string("network config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json NetworkConfig::to_json() const {
  nlohmann::json j{{"endorsers", endorsers},
                   {"orderers", orderers},
                   {"channels", channels},
                   {"endorsement_required", endorsement_required},
                   {"endorsement_fanout", endorsement_fanout},
                   {"max_tx_count", ordering.cut.max_tx_count},
                   {"max_wait", ordering.cut.max_wait},
                   {"election_timeout_min", ordering.raft.election_timeout_min},
                   {"election_timeout_max", ordering.raft.election_timeout_max},
                   {"heartbeat_interval", ordering.raft.heartbeat_interval},
                   {"retransmit_interval", ordering.retransmit_interval},
                   {"delivery_window", ordering.delivery_window},
                   {"simnet", simnet.to_json()},
                   {"credential_cost", to_string(credential_cost)},
                   {"admin_name", admin_name},
                   {"admin_credential", admin_credential}};
  j["data_dir"] = data_dir ? nlohmann::json(data_dir->string()) : nlohmann::json(nullptr);
  return j;
}

Network::Network(NetworkConfig config, Msp::Options msp_options)
    : config_(std::move(config)), net_(config_.simnet), rng_(config_.simnet.seed ^ 0x6e6f6e6365ULL) {
  config_.validate();
  if (config_.data_dir && std::filesystem::exists(*config_.data_dir)) {
    for (const auto& entry : std::filesystem::recursive_directory_iterator(*config_.data_dir)) {
      if (entry.path().extension() == ".blocks") {
        throw Error(Errc::bad_config, "data_dir " + config_.data_dir->string() + " already holds a network");
      }
    }
  }
  msp_options.credential_cost = config_.credential_cost;
  msp_ = std::make_unique<Msp>(std::move(msp_options));
  EndorsementPolicy policy{config_.endorsement_required};
  for (const auto& ch : config_.channels) registry_.install(builtin_for(ch, policy));
  validator_ = std::make_unique<Validator>(*msp_, registry_);

  admin_ = enroll(config_.admin_name, Role::admin, config_.admin_credential);

  const auto orderer_count = static_cast<raft::NodeId>(config_.orderers);
  std::vector<raft::NodeId> orderer_ids, peer_ids;
  for (raft::NodeId i = 0; i < orderer_count; ++i) orderer_ids.push_back(i);
  for (std::size_t i = 0; i < config_.endorsers; ++i) peer_ids.push_back(orderer_count + static_cast<raft::NodeId>(i));

  for (auto id : orderer_ids) {
    enroll("orderer" + std::to_string(id), Role::orderer);
    orderers_.push_back(std::make_unique<ordering::OrdererNode>(id, orderer_ids, peer_ids, config_.channels,
                                                                config_.ordering, config_.simnet.seed));
  }
  for (std::size_t i = 0; i < config_.endorsers; ++i) {
    auto signer = enroll("peer" + std::to_string(i), Role::peer);
    peers_.push_back(std::make_unique<Peer>(peer_ids[i], std::move(signer), *msp_, registry_, *validator_,
                                            orderer_ids, config_.data_dir));
  }
}

std::string Network::derive_seed(std::string_view label) const {
  Encoder enc;
  enc.u64(config_.simnet.seed).bytes(label);
  auto h = crypto::sha256(enc.data());
  return std::string(h.begin(), h.end());
}

Signer Network::enroll(const std::string& name, Role role, std::optional<std::string> credential) {
  auto kp = crypto::keypair_from_seed(derive_seed("identity:" + name));
  auto identity = msp_->register_identity(name, role, kp.public_key, std::move(credential));
  return Signer{std::move(identity), std::move(kp.secret_key)};
}

Signer Network::signer_for(const Identity& identity) const {
  auto kp = crypto::keypair_from_seed(derive_seed("identity:" + identity.name));
  if (kp.public_key != identity.public_key) {
    throw Error(Errc::unknown_identity, "no key held for '" + identity.name + "'");
  }
  return Signer{identity, std::move(kp.secret_key)};
}

Proposal Network::propose(const Signer& client, const ChannelId& channel, const std::string& function,
                          std::vector<std::string> args, AccessMode mode) {
  const auto& cc = registry_.for_channel(channel);
  std::string nonce(16, '\0');
  for (auto& c : nonce) c = static_cast<char>(rng_() & 0xff);
  return create_proposal(*msp_, client, channel, cc.descriptor().name, function, std::move(args),
                         crypto::to_hex(nonce), now_, mode);
}

std::vector<ProposalResponse> Network::collect_endorsements(const Proposal& proposal) {
  std::vector<const Peer*> up;
  for (const auto& p : peers_) {
    if (p->up()) up.push_back(p.get());
  }
  if (config_.endorsement_fanout != 0 && up.size() > config_.endorsement_fanout) {
    std::vector<const Peer*> chosen;
    for (std::size_t i = 0; i < config_.endorsement_fanout; ++i) chosen.push_back(up[(next_endorser_ + i) % up.size()]);
    next_endorser_ = (next_endorser_ + 1) % up.size();
    up = std::move(chosen);
  }
  std::vector<ProposalResponse> out;
  std::optional<Error> first_error;
  for (const auto* peer : up) {
    try {
      out.push_back(peer->endorse(proposal));
    } catch (const Error& e) {
      if (!first_error) first_error = e;
    }
  }
  if (out.size() < config_.endorsement_required) {
    if (first_error) throw *first_error;
    throw Error(Errc::unavailable, "not enough endorsers are up");
  }
  return out;
}

Transaction Network::endorse(const Signer& client, const ChannelId& channel, const std::string& function,
                             std::vector<std::string> args) {
  const auto& policy = validator_->policy(channel);
  for (int attempt = 0;; ++attempt) {
    auto proposal = propose(client, channel, function, args);
    auto responses = collect_endorsements(proposal);
    try {
      return assemble_transaction(*msp_, proposal, responses, policy);
    } catch (const Error& e) {
      if (e.code() != Errc::divergent_results || attempt > 0) throw;
    }
    advance(20);
  }
}

void Network::submit(const Transaction& tx, raft::Tick max_ticks) {
  const auto deadline = now_ + max_ticks;
  raft::NodeId target = leader().value_or(0);
  for (;;) {
    for (std::size_t hops = 0; hops <= orderers_.size(); ++hops) {
      auto& o = *orderers_[target];
      if (!o.up()) {
        target = (target + 1) % orderers_.size();
        continue;
      }
      auto r = o.submit(tx, now_);
      if (r.status == ordering::SubmitStatus::accepted) return;
      if (r.status == ordering::SubmitStatus::redirected && r.leader && *r.leader != target) {
        target = *r.leader;
        continue;
      }
      break;
    }
    if (now_ >= deadline) throw Error(Errc::unavailable, "ordering service has no leader");
    advance(10);
  }
}

std::optional<TxStatus> Network::status(const ChannelId& channel, const Hash256& tx_id) const {
  return anchor().ledger(channel).tx_status(tx_id);
}

TxStatus Network::wait_for(const ChannelId& channel, const Hash256& tx_id, raft::Tick max_ticks) {
  const auto deadline = now_ + max_ticks;
  for (;;) {
    if (auto s = status(channel, tx_id)) return *s;
    if (now_ >= deadline) throw Error(Errc::timeout, "transaction " + crypto::to_hex(tx_id) + " not committed");
    step();
  }
}

InvokeResult Network::invoke(const Signer& client, const ChannelId& channel, const std::string& function,
                             std::vector<std::string> args) {
  auto tx = endorse(client, channel, function, std::move(args));
  // Resubmitted on timeout; a repeated tx id is never applied twice.
  for (int attempt = 0; attempt < 5; ++attempt) {
    submit(tx);
    try {
      return {tx, wait_for(channel, tx.tx_id, kResubmitAfter)};
    } catch (const Error& e) {
      if (e.code() != Errc::timeout) throw;
    }
  }
  throw Error(Errc::timeout, "transaction " + crypto::to_hex(tx.tx_id) + " not committed");
}

ExecutionResult Network::query(const Signer& client, const ChannelId& channel, const std::string& function,
                               std::vector<std::string> args) {
  auto proposal = propose(client, channel, function, std::move(args), AccessMode::read);
  return anchor().endorse(proposal).result;
}

void Network::dispatch(std::vector<sim::Packet>&& packets) {
  for (auto& p : packets) net_.send(std::move(p), now_);
}

void Network::step() {
  ++now_;
  for (auto& packet : net_.collect(now_)) {
    if (packet.to < orderers_.size()) {
      dispatch(orderers_[packet.to]->receive(packet, now_));
    } else {
      dispatch(peers_[packet.to - orderers_.size()]->receive(packet));
    }
  }
  for (auto& o : orderers_) dispatch(o->tick(now_));
  for (const auto& o : orderers_) {
    if (o->up() && o->raft().is_leader()) leaders_[o->raft().state().current_term].insert(o->id());
  }
}

void Network::advance(raft::Tick ticks) {
  for (raft::Tick i = 0; i < ticks; ++i) step();
}

bool Network::run_until(const std::function<bool()>& done, raft::Tick max_ticks) {
  for (raft::Tick i = 0; i < max_ticks && !done(); ++i) step();
  return done();
}

raft::NodeId Network::resolve_target(std::string_view name) const {
  auto parse = [&](std::string_view digits, std::size_t bound) -> std::optional<std::size_t> {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size() || v >= bound) {
      return std::nullopt;
    }
    return v;
  };
  if (name.starts_with("orderer")) {
    if (auto i = parse(name.substr(7), orderers_.size())) return static_cast<raft::NodeId>(*i);
  } else if (name.starts_with("peer")) {
    if (auto i = parse(name.substr(4), peers_.size())) return static_cast<raft::NodeId>(orderers_.size() + *i);
  } else if (auto i = parse(name, orderers_.size() + peers_.size())) {
    return static_cast<raft::NodeId>(*i);
  }
  throw Error(Errc::unknown_target, "unknown node '" + std::string(name) + "'");
}

std::string Network::target_name(raft::NodeId node) const {
  if (node < orderers_.size()) return "orderer" + std::to_string(node);
  if (node < orderers_.size() + peers_.size()) return "peer" + std::to_string(node - orderers_.size());
  throw Error(Errc::unknown_target, "unknown node " + std::to_string(node));
}

void Network::crash(raft::NodeId node) {
  target_name(node);
  if (node < orderers_.size()) {
    orderers_[node]->crash();
  } else {
    peers_[node - orderers_.size()]->crash();
  }
  net_.set_down(node, true);
}

void Network::restart(raft::NodeId node) {
  target_name(node);
  net_.set_down(node, false);
  if (node < orderers_.size()) {
    if (!orderers_[node]->up()) orderers_[node]->restart(now_);
  } else {
    auto& peer = *peers_[node - orderers_.size()];
    if (!peer.up()) dispatch(peer.restart());
  }
}

bool Network::is_down(raft::NodeId node) const { return net_.is_down(node); }

void Network::partition(std::set<raft::NodeId> group, raft::Tick start, raft::Tick end) {
  for (auto n : group) target_name(n);
  net_.add_partition({start, end, std::move(group)});
}

void Network::heal() { net_.heal(now_); }

const Peer& Network::anchor() const {
  for (const auto& p : peers_) {
    if (p->up()) return *p;
  }
  throw Error(Errc::unavailable, "no peer is up");
}

std::optional<raft::NodeId> Network::leader() const {
  std::optional<raft::NodeId> best;
  std::uint64_t best_term = 0;
  for (const auto& o : orderers_) {
    if (!o->up() || !o->raft().is_leader()) continue;
    auto term = o->raft().state().current_term;
    if (!best || term > best_term) {
      best = o->id();
      best_term = term;
    }
  }
  return best;
}

Hash256 Network::state_digest() const {
  Encoder enc;
  for (const auto& p : peers_) {
    for (const auto& ch : p->channels()) {
      const auto& ledger = p->ledger(ch);
      enc.bytes(ch).u64(ledger.height()).hash(ledger.tip_hash());
      enc.bytes(ledger.read([](const WorldState& s) { return s.encode(); }));
    }
  }
  return crypto::sha256(enc.data());
}

}  // namespace hps
