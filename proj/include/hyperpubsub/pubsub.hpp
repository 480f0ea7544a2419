#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperpubsub/identity.hpp"
#include "hyperpubsub/ledger.hpp"

namespace hps::pubsub {

/// A photo category.
using Topic = std::string;

struct PublishEvent {
  std::string photo_id;
  Topic topic;
  Version position;
  std::string publisher;  // owner name

  bool operator==(const PublishEvent&) const = default;
};

/// `cursor` is the first block number not yet delivered.
struct Subscription {
  IdentityId subscriber;
  Topic topic;
  std::uint64_t cursor = 0;

  bool operator==(const Subscription&) const = default;
};

bool match(const PublishEvent& event, const Subscription& sub);

/// Publish events of valid transactions in blocks [from, to), chain order.
std::vector<PublishEvent> publish_events(const Ledger& photos, std::uint64_t from, std::uint64_t to);

/// Matching events in blocks [sub.cursor, height) and the subscription
/// advanced to the height observed.
std::pair<std::vector<PublishEvent>, Subscription> poll(const Subscription& sub, const Ledger& photos);

/// Subscription registry kept by the gateway. Safe for concurrent use.
class Broker {
 public:
  explicit Broker(const Msp& msp, std::optional<std::set<Topic>> whitelist = std::nullopt);

  void set_whitelist(std::optional<std::set<Topic>> whitelist);
  std::optional<std::set<Topic>> whitelist() const;

  /// New subscriptions start at `height` (new events only); subscribing
  /// again returns the existing one. Throws Errc::access_denied without read
  /// access to the photos channel, Errc::unknown_topic off the whitelist.
  Subscription subscribe(const Identity& identity, const Topic& topic, std::uint64_t height);
  std::optional<Subscription> find(const IdentityId& subscriber, const Topic& topic) const;
  std::vector<Subscription> subscriptions(const IdentityId& subscriber) const;

  /// Returns new matching events and advances the stored cursor in one step.
  /// Throws Errc::unknown_topic when not subscribed.
  std::vector<PublishEvent> poll(const IdentityId& subscriber, const Topic& topic, const Ledger& photos);

  nlohmann::json to_json() const;
  void load_json(const nlohmann::json& doc);

 private:
  const Msp& msp_;
  mutable std::mutex mu_;
  std::optional<std::set<Topic>> whitelist_;
  std::map<std::pair<IdentityId, Topic>, Subscription> subs_;
};

nlohmann::json to_json(const PublishEvent& e);

}  // namespace hps::pubsub
