#include <doctest.h>

#include <filesystem>

#include "hyperpubsub/crypto.hpp"
#include "hyperpubsub/error.hpp"
#include "hyperpubsub/network.hpp"

using namespace hps;
using namespace hps::market;

namespace {

NetworkConfig small(std::uint64_t seed = 1) {
  NetworkConfig c;
  c.simnet.seed = seed;
  c.credential_cost = crypto::HashCost::minimal;
  return c;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::malformed;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hps-net-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  return dir;
}

// bob with a funded wallet and alice's listed photo.
struct Market {
  Network net;
  Signer alice, bob;
  std::string photo = crypto::to_hex(crypto::sha256("pic"));

  explicit Market(NetworkConfig cfg = small()) : net(std::move(cfg)) {
    alice = net.enroll("alice", Role::photographer);
    bob = net.enroll("bob", Role::customer);
    REQUIRE(net.invoke(net.admin(), "E3", "open_wallet", {"bob"}).valid());
    REQUIRE(net.invoke(net.admin(), "E3", "mint", args::mint("bob", 100)).valid());
    REQUIRE(net.invoke(net.admin(), "E3", "register_listing", args::register_listing(photo, "alice", {5, 30, 90})).valid());
  }

  CoinAmount balance(const std::string& who) {
    return decode_amount(net.query(net.admin(), "E3", "balance", {who}).response);
  }
};

}  // namespace

TEST_CASE("config validation") {
  auto bad = [](auto mutate) {
    auto c = small();
    mutate(c);
    return code_of([&] { c.validate(); });
  };
  CHECK(bad([](NetworkConfig& c) { c.endorsers = 0; }) == Errc::bad_config);
  CHECK(bad([](NetworkConfig& c) { c.orderers = 0; }) == Errc::bad_config);
  CHECK(bad([](NetworkConfig& c) { c.channels = {}; }) == Errc::bad_config);
  CHECK(bad([](NetworkConfig& c) { c.channels = {"E1", "E9"}; }) == Errc::bad_config);
  CHECK(bad([](NetworkConfig& c) { c.channels = {"E1", "E1"}; }) == Errc::bad_config);
  CHECK(bad([](NetworkConfig& c) { c.endorsement_required = 7; }) == Errc::bad_config);
  CHECK(bad([](NetworkConfig& c) { c.endorsement_fanout = 1; }) == Errc::bad_config);
  CHECK(bad([](NetworkConfig& c) { c.ordering.raft.heartbeat_interval = 150; }) == Errc::bad_config);
  CHECK(bad([](NetworkConfig& c) { c.ordering.cut.max_tx_count = 0; }) == Errc::bad_config);
  CHECK(bad([](NetworkConfig&) {}) == Errc::malformed);

  CHECK(code_of([] { NetworkConfig::from_json({{"endorsers", "six"}}); }) == Errc::bad_config);
  CHECK(code_of([] { NetworkConfig::from_json({{"credential_cost", "huge"}}); }) == Errc::bad_config);
  auto c = NetworkConfig::from_json({{"endorsers", 4}, {"max_tx_count", 5}, {"simnet", {{"seed", 3}}}});
  CHECK(c.endorsers == 4);
  CHECK(c.ordering.cut.max_tx_count == 5);
  CHECK(c.simnet.seed == 3);
  auto again = NetworkConfig::from_json(c.to_json());
  CHECK(again.to_json() == c.to_json());
}

TEST_CASE("invoke drives a buy end to end and every peer agrees") {
  Market m;
  auto r = m.net.invoke(m.bob, "E3", "buy", args::buy("bob", m.photo, PriceTier::editorial));
  CHECK(r.valid());
  CHECK(m.balance("bob") == 70);
  CHECK(m.balance("alice") == 30);
  m.net.advance(300);
  for (const auto& p : m.net.peers()) {
    CHECK(p->ledger("E3").height() == m.net.anchor().ledger("E3").height());
    CHECK(p->ledger("E3").state() == m.net.anchor().ledger("E3").state());
    CHECK(p->ledger("E3").tx_status(r.tx.tx_id)->flag == ValidationFlag::valid);
  }
}

TEST_CASE("failing simulations surface the chaincode error as the cause") {
  Market m;
  try {
    m.net.invoke(m.bob, "E3", "buy", args::buy("bob", m.photo, PriceTier::commercial));
    m.net.invoke(m.bob, "E3", "buy", args::buy("bob", m.photo, PriceTier::commercial));
    FAIL("second buy should fail");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::simulation_failure);
    CHECK(e.cause() == Errc::insufficient_funds);
  }
  CHECK(code_of([&] { m.net.invoke(m.bob, "E4", "put_config", args::put_config("k", "v")); }) ==
        Errc::access_denied);
  CHECK(code_of([&] { m.net.query(m.bob, "E4", "get_config", {"k"}); }) == Errc::access_denied);
  CHECK(code_of([&] { m.net.query(m.bob, "E7", "balance", {"bob"}); }) != Errc::malformed);
}

TEST_CASE("2-of-6 endorsement tolerates four crashed peers, not five") {
  Market m;
  m.net.advance(200);
  for (int i = 0; i < 4; ++i) m.net.crash(m.net.resolve_target("peer" + std::to_string(i)));
  CHECK(m.net.invoke(m.bob, "E3", "buy", args::buy("bob", m.photo, PriceTier::personal)).valid());
  m.net.crash(m.net.resolve_target("peer4"));
  CHECK_THROWS_AS(m.net.endorse(m.bob, "E3", "balance", {"bob"}), Error);
}

TEST_CASE("a restarted peer catches up on missed blocks") {
  Market m;
  auto victim = m.net.resolve_target("peer2");
  m.net.crash(victim);
  for (int i = 0; i < 3; ++i) m.net.invoke(m.net.admin(), "E3", "mint", args::mint("bob", 1));
  const auto& peer = *m.net.peers()[2];
  CHECK(peer.ledger("E3").height() < m.net.anchor().ledger("E3").height());
  m.net.restart(victim);
  CHECK(m.net.run_until([&] { return peer.ledger("E3").height() == m.net.anchor().ledger("E3").height(); }, 2000));
  CHECK(peer.ledger("E3").state() == m.net.anchor().ledger("E3").state());
}

TEST_CASE("the ordering service survives a leader crash") {
  Market m;
  auto leader = *m.net.leader();
  m.net.crash(leader);
  CHECK(m.net.invoke(m.net.admin(), "E3", "mint", args::mint("bob", 5)).valid());
  CHECK(m.net.leader() != leader);
  m.net.restart(leader);
  CHECK(m.balance("bob") == 105);
  CHECK(m.net.leader_history().rbegin()->second.size() == 1);
}

TEST_CASE("a minority partition does not stop progress and heals") {
  Market m;
  auto leader = *m.net.leader();
  m.net.partition({leader}, m.net.now(), m.net.now() + 100000);
  CHECK(m.net.invoke(m.net.admin(), "E3", "mint", args::mint("bob", 1)).valid());
  m.net.heal();
  m.net.advance(1500);
  for (const auto& o : m.net.orderers()) CHECK(o->blocks("E3") == m.net.orderers()[0]->blocks("E3"));
}

TEST_CASE("targets resolve by name and number") {
  Network net(small());
  CHECK(net.resolve_target("orderer2") == 2);
  CHECK(net.resolve_target("peer0") == 3);
  CHECK(net.resolve_target("8") == 8);
  CHECK(net.target_name(4) == "peer1");
  for (auto bad : {"orderer3", "peer6", "9", "", "peer", "nobody", "peer-1"}) {
    CHECK_MESSAGE(code_of([&] { net.resolve_target(bad); }) == Errc::unknown_target, bad);
  }
  CHECK(code_of([&] { net.crash(42); }) == Errc::unknown_target);
  CHECK_THROWS_AS(net.anchor().ledger("E9"), Error);
}

TEST_CASE("the same seed reproduces the same chains") {
  auto run = [](std::uint64_t seed) {
    Market m(small(seed));
    m.net.invoke(m.bob, "E3", "buy", args::buy("bob", m.photo, PriceTier::personal));
    m.net.advance(200);
    return m.net.state_digest();
  };
  CHECK(run(11) == run(11));
}

TEST_CASE("chains persist to disk and a used data_dir is refused") {
  auto dir = temp_dir("persist");
  auto cfg = small();
  cfg.data_dir = dir;
  Hash256 tip{};
  {
    Market m(cfg);
    m.net.advance(200);
    tip = m.net.anchor().ledger("E3").tip_hash();
  }
  Ledger reopened("E3", dir / "peer0" / "E3.blocks");
  CHECK(reopened.tip_hash() == tip);
  reopened.verify_chain();
  CHECK(code_of([&] { Network again(cfg); }) == Errc::bad_config);
  std::filesystem::remove_all(dir);
}

TEST_CASE("a network with one channel has no other chaincodes") {
  auto cfg = small();
  cfg.channels = {"E4"};
  Network net(cfg);
  CHECK(net.registry().channels() == std::vector<ChannelId>{"E4"});
  CHECK(net.invoke(net.admin(), "E4", "put_config", args::put_config("k", "v")).valid());
  CHECK(code_of([&] { net.invoke(net.admin(), "E3", "mint", args::mint("bob", 1)); }) == Errc::unknown_channel);
}

TEST_CASE("peers commit only the next block and always acknowledge their height") {
  Network net(small());
  const auto& peer = *net.peers()[0];
  auto& mut = const_cast<Peer&>(peer);
  auto deliver = [&](const Block& b) {
    return mut.receive({0, peer.node(), ordering::frame(ordering::PacketKind::deliver_block,
                                                         ordering::encode_delivery("E1", b))});
  };
  auto genesis_hash = compute_block_hash(make_genesis_block().header);
  auto ahead = deliver(make_block(2, genesis_hash, {}));
  REQUIRE(ahead.size() == 1);
  CHECK(ordering::decode_deliver_ack(ordering::unframe(ahead[0].bytes).second).height == 1);
  deliver(make_block(1, Hash256{}, {}));
  CHECK(peer.ledger("E1").height() == 1);
  deliver(make_block(1, genesis_hash, {}));
  CHECK(peer.ledger("E1").height() == 2);
  deliver(make_block(1, genesis_hash, {}));
  CHECK(peer.ledger("E1").height() == 2);
  CHECK(deliver(make_block(0, Hash256{}, {})).size() == 1);

  mut.crash();
  CHECK(deliver(make_block(2, compute_block_hash(peer.ledger("E1").get_block(1).header), {})).empty());
  auto p = net.propose(net.admin(), "E1", "get_account", {"x"}, AccessMode::read);
  CHECK(code_of([&] { peer.endorse(p); }) == Errc::unavailable);
  auto requests = mut.restart();
  CHECK(requests.size() == 4 * 3);
  CHECK(code_of([&] { peer.ledger("E9"); }) == Errc::unknown_channel);
  CHECK(peer.channels().size() == 4);
}
