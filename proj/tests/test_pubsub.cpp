#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "hyperpubsub/pubsub.hpp"

using namespace hps;
using namespace hps::market;
using namespace hps::pubsub;

namespace {

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::malformed;
}

struct Photos {
  test::Members m;
  Ledger ledger{"E2"};
  int next = 0;

  Photos() { m.genesis(ledger); }

  Transaction publish(std::vector<std::string> cats, std::string id = "") {
    if (id.empty()) id = crypto::to_hex(crypto::sha256("photo" + std::to_string(next++)));
    return m.endorsed(ledger, m.alice, "publish", args::publish("alice", "t", cats, {1, 2, 3}, id));
  }
};

}  // namespace

TEST_CASE("events come only from valid transactions, one per category") {
  Photos p;
  auto a = p.publish({"nature", "sport"});
  auto b = p.publish({"nature"}, crypto::to_hex(crypto::sha256("same")));
  auto c = p.publish({"human"}, crypto::to_hex(crypto::sha256("same")));
  auto out = p.m.commit(p.ledger, {a, b, c});
  CHECK(out.flags == std::vector{ValidationFlag::valid, ValidationFlag::valid, ValidationFlag::mvcc_conflict});
  auto events = publish_events(p.ledger, 0, p.ledger.height());
  REQUIRE(events.size() == 3);
  CHECK(events[0].topic == "nature");
  CHECK(events[1].topic == "sport");
  CHECK(events[0].position == Version{1, 0});
  CHECK(events[2].position == Version{1, 1});
  CHECK(events[2].publisher == "alice");
  CHECK(publish_events(p.ledger, 1, 1).empty());
}

TEST_CASE("pure poll advances the cursor to the height and never repeats") {
  Photos p;
  Subscription sub{"id-bob", "nature", 1};
  p.m.commit(p.ledger, {p.publish({"nature"})});
  auto [first, next] = poll(sub, p.ledger);
  CHECK(first.size() == 1);
  CHECK(next.cursor == 2);
  auto [again, same] = poll(next, p.ledger);
  CHECK(again.empty());
  CHECK(same == next);
  p.m.commit(p.ledger, {p.publish({"sport"})});
  CHECK(poll(next, p.ledger).first.empty());
  CHECK(poll(next, p.ledger).second.cursor == 3);
}

TEST_CASE("broker subscription rules") {
  Photos p;
  Broker broker(p.m.msp, std::set<Topic>{"nature", "sport"});
  auto s = broker.subscribe(p.m.bob.identity, "nature", 5);
  CHECK(s.cursor == 5);
  CHECK(broker.subscribe(p.m.bob.identity, "nature", 9).cursor == 5);
  CHECK(code_of([&] { broker.subscribe(p.m.bob.identity, "space", 1); }) == Errc::unknown_topic);
  CHECK(code_of([&] { broker.subscribe(p.m.bob.identity, "", 1); }) == Errc::unknown_topic);
  CHECK(code_of([&] { broker.subscribe(p.m.peers[0].identity, "nature", 1); }) == Errc::access_denied);
  CHECK(code_of([&] { broker.poll(p.m.bob.identity.id, "sport", p.ledger); }) == Errc::unknown_topic);
  broker.set_whitelist(std::nullopt);
  CHECK_NOTHROW(broker.subscribe(p.m.bob.identity, "space", 1));
  CHECK(broker.subscriptions(p.m.bob.identity.id).size() == 2);
  CHECK(broker.subscriptions(p.m.carol.identity.id).empty());
  CHECK_FALSE(broker.find(p.m.carol.identity.id, "nature"));

  Broker copy(p.m.msp);
  copy.load_json(broker.to_json());
  CHECK(copy.to_json() == broker.to_json());
  CHECK(code_of([&] { copy.load_json({{"subscriptions", 3}}); }) == Errc::malformed);
  CHECK(copy.to_json() == broker.to_json());
}

TEST_CASE("randomized publish/poll interleavings deliver exactly the brute-force set") {
  Photos p;
  const std::vector<Topic> topics{"animal", "human", "nature", "sport"};
  Broker broker(p.m.msp, std::set<Topic>(topics.begin(), topics.end()));
  std::mt19937_64 rng(31);
  std::vector<Signer> subscribers{p.m.bob, p.m.carol};
  std::map<std::pair<IdentityId, Topic>, std::vector<PublishEvent>> got;
  std::map<std::pair<IdentityId, Topic>, std::uint64_t> start;

  for (int round = 0; round < 80; ++round) {
    auto action = rng() % 4;
    if (action == 0) {
      auto& s = subscribers[rng() % 2];
      auto t = topics[rng() % 4];
      auto sub = broker.subscribe(s.identity, t, p.ledger.height());
      start.emplace(std::pair{s.identity.id, t}, sub.cursor);
    } else if (action == 1) {
      std::vector<Transaction> txs;
      for (auto n = rng() % 4; n > 0; --n) {
        std::vector<std::string> cats;
        for (const auto& t : topics) {
          if (rng() % 3 == 0) cats.push_back(t);
        }
        if (cats.empty()) cats.push_back(topics[rng() % 4]);
        txs.push_back(p.publish(cats));
      }
      if (rng() % 5 == 0 && !txs.empty()) txs.push_back(txs.front());
      p.m.commit(p.ledger, txs);
    } else {
      for (const auto& [key, _] : start) {
        if (rng() % 2) continue;
        for (auto& e : broker.poll(key.first, key.second, p.ledger)) got[key].push_back(e);
      }
    }
  }
  auto all = publish_events(p.ledger, 0, p.ledger.height());
  for (const auto& [key, from] : start) {
    for (auto& e : broker.poll(key.first, key.second, p.ledger)) got[key].push_back(e);
    std::vector<PublishEvent> want;
    for (const auto& e : all) {
      if (e.topic == key.second && e.position.block_num >= from) want.push_back(e);
    }
    CHECK(got[key] == want);
  }
  CHECK(start.size() > 3);
}

TEST_CASE("event json shape") {
  auto j = to_json(PublishEvent{"abc", "nature", {4, 2}, "id-alice"});
  CHECK(j.at("photo_id") == "abc");
  CHECK(j.at("topic") == "nature");
  CHECK(j.at("block") == 4);
}
