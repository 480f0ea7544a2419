#include "hyperpubsub/pubsub.hpp"

#include "hyperpubsub/builtins.hpp"
#include "hyperpubsub/error.hpp"

namespace hps::pubsub {

bool match(const PublishEvent& event, const Subscription& sub) { return event.topic == sub.topic; }

std::vector<PublishEvent> publish_events(const Ledger& photos, std::uint64_t from, std::uint64_t to) {
  std::vector<PublishEvent> out;
  for (const auto& ce : photos.events(from, to)) {
    if (ce.event.name != market::kPublishEvent) continue;
    auto p = market::decode_publish_payload(ce.event.payload);
    out.push_back({std::move(p.photo_id), std::move(p.topic), ce.position, std::move(p.publisher)});
  }
  return out;
}

std::pair<std::vector<PublishEvent>, Subscription> poll(const Subscription& sub, const Ledger& photos) {
  auto height = photos.height();
  Subscription next = sub;
  std::vector<PublishEvent> out;
  if (height <= sub.cursor) return {out, next};
  for (auto& e : publish_events(photos, sub.cursor, height)) {
    if (match(e, sub)) out.push_back(std::move(e));
  }
  next.cursor = height;
  return {std::move(out), std::move(next)};
}

Broker::Broker(const Msp& msp, std::optional<std::set<Topic>> whitelist)
    : msp_(msp), whitelist_(std::move(whitelist)) {}

void Broker::set_whitelist(std::optional<std::set<Topic>> whitelist) {
  std::lock_guard lock(mu_);
  whitelist_ = std::move(whitelist);
}

std::optional<std::set<Topic>> Broker::whitelist() const {
  std::lock_guard lock(mu_);
  return whitelist_;
}

Subscription Broker::subscribe(const Identity& identity, const Topic& topic, std::uint64_t height) {
  if (!msp_.check_channel_access(identity, ChannelId(kPhotosChannel), AccessMode::read)) {
    throw Error(Errc::access_denied, identity.name + " may not read the photos channel");
  }
  std::lock_guard lock(mu_);
  if (topic.empty() || (whitelist_ && !whitelist_->contains(topic))) {
    throw Error(Errc::unknown_topic, "unknown topic '" + topic + "'");
  }
  auto [it, _] = subs_.try_emplace({identity.id, topic}, Subscription{identity.id, topic, height});
  return it->second;
}

std::optional<Subscription> Broker::find(const IdentityId& subscriber, const Topic& topic) const {
  std::lock_guard lock(mu_);
  auto it = subs_.find({subscriber, topic});
  if (it == subs_.end()) return std::nullopt;
  return it->second;
}

std::vector<Subscription> Broker::subscriptions(const IdentityId& subscriber) const {
  std::lock_guard lock(mu_);
  std::vector<Subscription> out;
  for (auto it = subs_.lower_bound({subscriber, ""}); it != subs_.end() && it->first.first == subscriber; ++it) {
    out.push_back(it->second);
  }
  return out;
}

std::vector<PublishEvent> Broker::poll(const IdentityId& subscriber, const Topic& topic, const Ledger& photos) {
  std::lock_guard lock(mu_);
  auto it = subs_.find({subscriber, topic});
  if (it == subs_.end()) throw Error(Errc::unknown_topic, "not subscribed to '" + topic + "'");
  auto [events, next] = pubsub::poll(it->second, photos);
  it->second = next;
  return events;
}

nlohmann::json Broker::to_json() const {
  std::lock_guard lock(mu_);
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& [_, s] : subs_) subs.push_back({{"subscriber", s.subscriber}, {"topic", s.topic}, {"cursor", s.cursor}});
  nlohmann::json doc{{"subscriptions", subs}};
  doc["whitelist"] = whitelist_ ? nlohmann::json(*whitelist_) : nlohmann::json(nullptr);
  return doc;
}

void Broker::load_json(const nlohmann::json& doc) {
  try {
    std::map<std::pair<IdentityId, Topic>, Subscription> subs;
    for (const auto& s : doc.at("subscriptions")) {
      Subscription sub{s.at("subscriber").get<std::string>(), s.at("topic").get<std::string>(),
                       s.at("cursor").get<std::uint64_t>()};
      subs[{sub.subscriber, sub.topic}] = sub;
    }
    std::optional<std::set<Topic>> whitelist;
    if (doc.contains("whitelist") && !doc.at("whitelist").is_null()) {
      whitelist = doc.at("whitelist").get<std::set<Topic>>();
    }
    std::lock_guard lock(mu_);
    subs_ = std::move(subs);
    whitelist_ = std::move(whitelist);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed, std::string("subscription store: ") + e.what());
  }
}

nlohmann::json to_json(const PublishEvent& e) {
  return {{"photo_id", e.photo_id},
          {"topic", e.topic},
          {"block", e.position.block_num},
          {"tx_index", e.position.tx_index},
          {"publisher", e.publisher}};
}

}  // namespace hps::pubsub
