#include "hyperpubsub/gateway.hpp"

#include <charconv>
#include <fstream>
#include <regex>
#include <thread>

#include "hyperpubsub/builtins.hpp"
#include "hyperpubsub/error.hpp"

namespace hps {
namespace {

constexpr raft::Tick kWaitRound = 10;
constexpr raft::Tick kResubmitAfter = 2000;
const std::string kServiceName = "gateway";

struct ApiError {
  int status;
  std::string code;
  std::string message;
};

ApiResponse error_response(int status, std::string_view code, std::string_view message) {
  ApiResponse r;
  r.status = status;
  r.body = {{"code", code}, {"message", message}};
  return r;
}

nlohmann::json parse_body(const std::string& body) {
  auto j = nlohmann::json::parse(body.empty() ? std::string("{}") : body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ApiError{400, "malformed", "request body must be a JSON object"};
  return j;
}

std::string required_string(const nlohmann::json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw ApiError{400, "malformed", std::string("field '") + field + "' must be a non-empty string"};
  }
  return it->get<std::string>();
}

std::string optional_string(const nlohmann::json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) throw ApiError{400, "malformed", std::string("field '") + field + "' must be a string"};
  return it->get<std::string>();
}

void require_valid(const InvokeResult& r) {
  switch (r.status.flag) {
    case ValidationFlag::valid: return;
    case ValidationFlag::mvcc_conflict:
      throw ApiError{409, "mvcc-conflict", "transaction conflicted with a concurrent update"};
    case ValidationFlag::access_denied:
      throw ApiError{403, "access-denied", "transaction rejected by channel access control"};
    case ValidationFlag::policy_failure:
      throw ApiError{500, "policy-failure", "transaction failed the endorsement policy"};
  }
}

bool is_photo_id(std::string_view s) {
  static const std::regex re("[0-9a-f]{64}");
  return std::regex_match(s.begin(), s.end(), re);
}

bool is_user_name(std::string_view s) {
  static const std::regex re("[A-Za-z0-9_.-]{1,64}");
  return std::regex_match(s.begin(), s.end(), re);
}

nlohmann::json prices_json(const market::Prices& p) {
  return {{"personal", p[0]}, {"editorial", p[1]}, {"commercial", p[2]}};
}

}  // namespace

int http_status(Errc code) {
  switch (code) {
    case Errc::malformed:
    case Errc::unknown_role:
    case Errc::bad_prices:
    case Errc::no_category:
    case Errc::bad_amount:
    case Errc::unknown_topic:
    case Errc::self_purchase:
    case Errc::chaincode_error:
    case Errc::bad_config:
      return 400;
    case Errc::bad_credential:
    case Errc::session_expired:
      return 401;
    case Errc::insufficient_funds:
      return 402;
    case Errc::access_denied:
    case Errc::not_owner:
    case Errc::not_admin:
      return 403;
    case Errc::unknown_identity:
    case Errc::unknown_photo:
    case Errc::unknown_recipient:
    case Errc::unknown_channel:
    case Errc::unknown_target:
    case Errc::unknown_function:
      return 404;
    case Errc::duplicate_name:
    case Errc::account_exists:
    case Errc::listing_exists:
    case Errc::already_published:
    case Errc::mvcc_conflict:
      return 409;
    case Errc::unavailable:
    case Errc::timeout:
      return 503;
    default:
      return 500;
  }
}

std::optional<std::string> image_content_type(std::string_view b) {
  auto starts = [&](std::string_view magic) { return b.substr(0, magic.size()) == magic; };
  if (starts("\x89PNG\r\n\x1a\n")) return "image/png";
  if (starts("\xff\xd8\xff")) return "image/jpeg";
  if (starts("GIF87a") || starts("GIF89a")) return "image/gif";
  if (b.size() >= 12 && starts("RIFF") && b.substr(8, 4) == "WEBP") return "image/webp";
  if (starts(std::string_view("II*\0", 4)) || starts(std::string_view("MM\0*", 4))) return "image/tiff";
  if (starts("BM")) return "image/bmp";
  return std::nullopt;
}

namespace {

std::unique_ptr<Network> make_network(NetworkConfig network, const GatewayConfig& config) {
  config.validate();
  for (auto ch : {kClientsChannel, kPhotosChannel, kTradesChannel, kAdminChannel}) {
    if (std::find(network.channels.begin(), network.channels.end(), ch) == network.channels.end()) {
      throw Error(Errc::bad_config, "gateway needs channel " + std::string(ch));
    }
  }
  Msp::Options options;
  options.session_ttl = config.session_ttl;
  return std::make_unique<Network>(std::move(network), std::move(options));
}

}  // namespace

Gateway::Gateway(NetworkConfig network, GatewayConfig config)
    : config_(std::move(config)),
      net_(make_network(std::move(network), config_)),
      blobs_(config_.blob_dir.empty()
                 ? std::filesystem::temp_directory_path() / ("hps-blobs-" + crypto::to_hex(crypto::random_bytes(6)))
                 : config_.blob_dir),
      broker_(net_->msp()) {
  service_ = net_->enroll(kServiceName, Role::admin);
  nlohmann::json categories = config_.categories;
  auto r = drive(service_, ChannelId(kAdminChannel), "put_config",
                 market::args::put_config("categories", categories.dump()));
  if (!r.valid()) throw Error(Errc::unavailable, "could not store the category whitelist");
  auto stored = with_network([&](Network& net) {
    return net.query(service_, ChannelId(kAdminChannel), "get_config", {"categories"});
  });
  auto value = market::decode_optional(stored.response);
  broker_.set_whitelist(nlohmann::json::parse(value.value_or("[]")).get<std::set<std::string>>());
  if (config_.subscriptions_file && std::filesystem::exists(*config_.subscriptions_file)) {
    std::ifstream in(*config_.subscriptions_file);
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error(Errc::malformed, "unreadable subscription store");
    auto whitelist = broker_.whitelist();
    broker_.load_json(doc);
    broker_.set_whitelist(whitelist);
  }
}

ApiResponse Gateway::handle(const ApiRequest& req) {
  try {
    const auto& m = req.method;
    const auto& p = req.path;
    if (p == "/register" && m == "POST") return do_register(parse_body(req.body));
    if (p == "/login" && m == "POST") return do_login(parse_body(req.body));
    if (p == "/logout" && m == "POST") return do_logout(req);
    if (p == "/status" && m == "GET") return do_status();
    const bool known = p == "/photos" || p == "/buy" || p == "/admin/mint" || p == "/wallet" ||
                       p == "/subscriptions" || p.starts_with("/download/");
    if (!known) return error_response(404, "not-found", "no route " + p);
    auto caller = authenticate(req);
    if (p == "/photos" && m == "POST") return do_upload(caller, parse_body(req.body));
    if (p == "/photos" && m == "GET") {
      auto it = req.query.find("category");
      return do_list(caller, it == req.query.end() ? std::string() : it->second);
    }
    if (p == "/buy" && m == "POST") return do_buy(caller, parse_body(req.body));
    if (p.starts_with("/download/") && m == "GET") return do_download(caller, p.substr(10));
    if (p == "/admin/mint" && m == "POST") return do_mint(caller, parse_body(req.body));
    if (p == "/wallet" && m == "GET") return do_wallet(caller);
    if (p == "/subscriptions" && m == "POST") return do_subscribe(caller, parse_body(req.body));
    if (p == "/subscriptions" && m == "GET") return do_poll(caller, req);
    return error_response(405, "method-not-allowed", m + " not allowed on " + p);
  } catch (const ApiError& e) {
    return error_response(e.status, e.code, e.message);
  } catch (const Error& e) {
    auto code = e.code() == Errc::simulation_failure ? e.cause() : e.code();
    return error_response(http_status(code), to_string(code), e.what());
  } catch (const nlohmann::json::exception& e) {
    return error_response(400, "malformed", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

Identity Gateway::authenticate(const ApiRequest& req) const {
  if (req.bearer.empty()) throw ApiError{401, "bad-credential", "missing bearer token"};
  return net_->msp().validate_session(req.bearer);
}

InvokeResult Gateway::drive(const Signer& client, const ChannelId& channel, const std::string& function,
                            std::vector<std::string> args) {
  Transaction tx;
  raft::Tick deadline = 0, resubmit_at = 0;
  {
    std::lock_guard lock(mu_);
    tx = net_->endorse(client, channel, function, std::move(args));
    net_->submit(tx);
    deadline = net_->now() + config_.commit_timeout;
    resubmit_at = net_->now() + kResubmitAfter;
  }
  for (;;) {
    {
      std::lock_guard lock(mu_);
      if (auto s = net_->status(channel, tx.tx_id)) return {tx, *s};
      if (net_->now() >= deadline) throw Error(Errc::timeout, "transaction was not committed in time");
      if (net_->now() >= resubmit_at) {
        net_->submit(tx);
        resubmit_at = net_->now() + kResubmitAfter;
      }
      net_->advance(kWaitRound);
    }
    std::this_thread::yield();
  }
}

ExecutionResult Gateway::query(const Identity& caller, const ChannelId& channel, const std::string& function,
                               std::vector<std::string> args) {
  std::lock_guard lock(mu_);
  return net_->query(net_->signer_for(caller), channel, function, std::move(args));
}

ApiResponse Gateway::do_register(const nlohmann::json& body) {
  auto name = required_string(body, "name");
  auto credential = required_string(body, "credential");
  if (!is_user_name(name)) throw ApiError{400, "malformed", "names are 1-64 of [A-Za-z0-9_.-]"};
  auto role = role_from_string(required_string(body, "role"));
  if (role != Role::customer && role != Role::photographer) {
    throw ApiError{403, "access-denied", "only customers and photographers can register"};
  }
  auto display_name = optional_string(body, "display_name");
  Signer signer = with_network([&](Network& net) { return net.enroll(name, role, credential); });
  market::Account account{name, std::string(to_string(role)), display_name.empty() ? name : display_name,
                          optional_string(body, "bio"), 0};
  require_valid(drive(signer, ChannelId(kClientsChannel), "create_account", market::args::create_account(account)));
  require_valid(drive(service_, ChannelId(kTradesChannel), "open_wallet", {name}));
  ApiResponse r;
  r.status = 201;
  r.body = {{"name", name}, {"id", signer.identity.id}, {"role", to_string(role)}};
  return r;
}

nlohmann::json Gateway::photo_listing(const Identity& caller, const std::string& category) {
  auto listed = query(caller, ChannelId(kPhotosChannel), "list_by_category", market::args::list_by_category(category));
  auto photos = market::decode_photo_list(listed.response);
  std::map<std::string, nlohmann::json> profiles;
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : photos) {
    if (!profiles.contains(p.owner)) {
      nlohmann::json profile = nullptr;
      try {
        auto acct = market::decode_account(query(caller, ChannelId(kClientsChannel), "get_account", {p.owner}).response);
        profile = {{"name", acct.name}, {"display_name", acct.display_name}, {"bio", acct.bio}};
      } catch (const Error& e) {
        if (e.code() != Errc::simulation_failure && e.code() != Errc::access_denied) throw;
      }
      profiles[p.owner] = profile;
    }
    out.push_back({{"photo_id", p.photo_id},
                   {"title", p.title},
                   {"owner", p.owner},
                   {"owner_profile", profiles[p.owner]},
                   {"categories", p.categories},
                   {"prices", prices_json(p.prices)},
                   {"published_at", p.published_at}});
  }
  return out;
}

ApiResponse Gateway::do_login(const nlohmann::json& body) {
  auto name = required_string(body, "name");
  auto credential = required_string(body, "credential");
  auto token = net_->msp().authenticate(name, credential);
  auto identity = net_->msp().validate_session(token.value);
  ApiResponse r;
  r.body = {{"token", token.value},
            {"expires_at", token.expires_at},
            {"role", to_string(identity.role)},
            {"photos", photo_listing(identity, "")}};
  return r;
}

ApiResponse Gateway::do_logout(const ApiRequest& req) {
  authenticate(req);
  net_->msp().revoke_session(req.bearer);
  return {};
}

ApiResponse Gateway::do_upload(const Identity& caller, const nlohmann::json& body) {
  if (caller.role != Role::photographer) throw ApiError{403, "access-denied", "only photographers upload photos"};
  auto image_b64 = required_string(body, "image");
  if (image_b64.size() / 4 * 3 > config_.max_image_bytes + 3) {
    throw ApiError{413, "too-large", "images are limited to " + std::to_string(config_.max_image_bytes) + " bytes"};
  }
  auto bytes = crypto::from_base64(image_b64);
  if (bytes.size() > config_.max_image_bytes) {
    throw ApiError{413, "too-large", "images are limited to " + std::to_string(config_.max_image_bytes) + " bytes"};
  }
  if (!image_content_type(bytes)) throw ApiError{415, "unsupported-media-type", "not a supported raster image"};

  auto cats = body.find("categories");
  if (cats == body.end() || !cats->is_array() || cats->empty()) {
    throw ApiError{400, "no-category", "categories must be a non-empty list"};
  }
  auto whitelist = broker_.whitelist();
  std::vector<std::string> categories;
  for (const auto& c : *cats) {
    if (!c.is_string()) throw ApiError{400, "no-category", "categories must be strings"};
    auto name = c.get<std::string>();
    if (whitelist && !whitelist->contains(name)) throw ApiError{400, "no-category", "unknown category '" + name + "'"};
    categories.push_back(std::move(name));
  }
  auto prices_it = body.find("prices");
  if (prices_it == body.end() || !prices_it->is_array() || prices_it->size() != market::kTierCount) {
    throw ApiError{400, "bad-prices", "exactly three prices are required (personal, editorial, commercial)"};
  }
  std::vector<market::CoinAmount> prices;
  for (const auto& p : *prices_it) {
    if (!p.is_number_unsigned() || p.get<std::uint64_t>() == 0) {
      throw ApiError{400, "bad-prices", "prices must be positive integers"};
    }
    prices.push_back(p.get<std::uint64_t>());
  }
  auto address = blobs_.put(bytes);
  auto photo_id = crypto::to_hex(address);
  auto signer = with_network([&](Network& net) { return net.signer_for(caller); });
  require_valid(drive(signer, ChannelId(kPhotosChannel), "publish",
                      market::args::publish(caller.name, optional_string(body, "title"), categories, prices, photo_id)));
  require_valid(drive(service_, ChannelId(kTradesChannel), "register_listing",
                      market::args::register_listing(photo_id, caller.name, prices)));
  ApiResponse r;
  r.status = 201;
  r.body = {{"photo_id", photo_id}};
  return r;
}

ApiResponse Gateway::do_list(const Identity& caller, const std::string& category) {
  ApiResponse r;
  r.body = {{"photos", photo_listing(caller, category)}};
  return r;
}

ApiResponse Gateway::do_buy(const Identity& caller, const nlohmann::json& body) {
  if (caller.role != Role::customer) throw ApiError{403, "access-denied", "only customers buy photos"};
  auto photo_id = required_string(body, "photo_id");
  auto tier_name = required_string(body, "tier");
  market::PriceTier tier;
  try {
    tier = market::tier_from_string(tier_name);
  } catch (const Error&) {
    throw ApiError{400, "malformed", "tier must be personal, editorial or commercial"};
  }
  auto signer = with_network([&](Network& net) { return net.signer_for(caller); });
  bool conflicted = false;
  for (int attempt = 0; attempt <= config_.buy_retries; ++attempt) {
    InvokeResult r;
    try {
      r = drive(signer, ChannelId(kTradesChannel), "buy", market::args::buy(caller.name, photo_id, tier));
    } catch (const Error& e) {
      if (conflicted && e.code() == Errc::simulation_failure && e.cause() == Errc::insufficient_funds) {
        throw ApiError{409, "mvcc-conflict", "a concurrent purchase spent the funds"};
      }
      throw;
    }
    if (r.status.flag == ValidationFlag::mvcc_conflict) {
      conflicted = true;
      continue;
    }
    require_valid(r);
    auto trade = market::decode_trade(r.tx.response);
    auto balance = market::decode_amount(
        query(caller, ChannelId(kTradesChannel), "balance", {caller.name}).response);
    ApiResponse out;
    out.body = {{"trade_id", trade.trade_id}, {"photo_id", trade.photo_id}, {"tier", to_string(trade.tier)},
                {"price", trade.price},       {"balance", balance}};
    return out;
  }
  throw ApiError{409, "mvcc-conflict", "purchase kept conflicting with concurrent updates"};
}

ApiResponse Gateway::do_download(const Identity& caller, const std::string& photo_id) {
  if (!is_photo_id(photo_id)) throw ApiError{404, "unknown-photo", "no photo '" + photo_id + "'"};
  auto photo = market::decode_photo(query(caller, ChannelId(kPhotosChannel), "get_photo", {photo_id}).response);
  if (photo.owner != caller.name) {
    auto granted = market::decode_amount(
        query(caller, ChannelId(kTradesChannel), "has_grant", {caller.name, photo_id}).response);
    if (granted != 1) throw ApiError{403, "access-denied", "no purchase of this photo"};
  }
  auto bytes = blobs_.get(crypto::hash_from_hex(photo.blob_ref));
  if (!bytes) throw ApiError{404, "unknown-photo", "image bytes are missing from the store"};
  ApiResponse r;
  r.content_type = image_content_type(*bytes).value_or("application/octet-stream");
  r.bytes = std::move(*bytes);
  return r;
}

ApiResponse Gateway::do_mint(const Identity& caller, const nlohmann::json& body) {
  if (caller.role != Role::admin) throw ApiError{403, "access-denied", "only admins mint coins"};
  auto recipient = required_string(body, "recipient");
  auto amount = body.find("amount");
  if (amount == body.end() || !amount->is_number_integer() || amount->get<std::int64_t>() <= 0) {
    throw ApiError{400, "bad-amount", "amount must be a positive integer"};
  }
  auto signer = with_network([&](Network& net) { return net.signer_for(caller); });
  auto r = drive(signer, ChannelId(kTradesChannel), "mint",
                 market::args::mint(recipient, amount->get<std::uint64_t>()));
  require_valid(r);
  ApiResponse out;
  out.body = {{"recipient", recipient}, {"balance", market::decode_amount(r.tx.response)}};
  return out;
}

ApiResponse Gateway::do_wallet(const Identity& caller) {
  auto balance =
      market::decode_amount(query(caller, ChannelId(kTradesChannel), "balance", {caller.name}).response);
  ApiResponse r;
  r.body = {{"name", caller.name}, {"balance", balance}};
  return r;
}

ApiResponse Gateway::do_subscribe(const Identity& caller, const nlohmann::json& body) {
  auto topic = required_string(body, "topic");
  auto height = with_network([&](Network& net) { return net.anchor().ledger(ChannelId(kPhotosChannel)).height(); });
  auto sub = broker_.subscribe(caller, topic, height);
  save_subscriptions();
  ApiResponse r;
  r.body = {{"topic", sub.topic}, {"cursor", sub.cursor}};
  return r;
}

ApiResponse Gateway::do_poll(const Identity& caller, const ApiRequest& req) {
  auto topic_it = req.query.find("topic");
  if (topic_it == req.query.end() || topic_it->second.empty()) {
    throw ApiError{400, "malformed", "query parameter 'topic' is required"};
  }
  const auto& topic = topic_it->second;
  auto existing = broker_.find(caller.id, topic);
  if (!existing) throw ApiError{400, "unknown-topic", "not subscribed to '" + topic + "'"};
  std::vector<pubsub::PublishEvent> events;
  std::uint64_t cursor = 0;
  auto cursor_it = req.query.find("cursor");
  if (cursor_it != req.query.end()) {
    const auto& s = cursor_it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), cursor);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw ApiError{400, "malformed", "cursor must be a block number"};
    }
    auto sub = *existing;
    sub.cursor = cursor;
    auto result = with_network([&](Network& net) {
      return pubsub::poll(sub, net.anchor().ledger(ChannelId(kPhotosChannel)));
    });
    events = std::move(result.first);
    cursor = result.second.cursor;
  } else {
    events = with_network(
        [&](Network& net) { return broker_.poll(caller.id, topic, net.anchor().ledger(ChannelId(kPhotosChannel))); });
    cursor = broker_.find(caller.id, topic)->cursor;
    save_subscriptions();
  }
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : events) list.push_back(pubsub::to_json(e));
  ApiResponse r;
  r.body = {{"topic", topic}, {"events", list}, {"cursor", cursor}};
  return r;
}

ApiResponse Gateway::do_status() {
  return with_network([&](Network& net) {
    ApiResponse r;
    nlohmann::json heights = nlohmann::json::object();
    for (const auto& ch : net.config().channels) heights[ch] = net.anchor().ledger(ch).height();
    auto leader = net.leader();
    r.body = {{"tick", net.now()},
              {"leader", leader ? nlohmann::json(net.target_name(*leader)) : nlohmann::json(nullptr)},
              {"heights", heights}};
    return r;
  });
}

void Gateway::save_subscriptions() {
  if (!config_.subscriptions_file) return;
  std::lock_guard lock(save_mu_);
  auto tmp = *config_.subscriptions_file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << broker_.to_json().dump(2);
    if (!out) throw Error(Errc::io_error, "cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, *config_.subscriptions_file);
}

}  // namespace hps
