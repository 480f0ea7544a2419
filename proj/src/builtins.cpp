#include "hyperpubsub/builtins.hpp"

#include <algorithm>
#include <set>

#include "hyperpubsub/crypto.hpp"

namespace hps::market {
namespace {

void require_args(const std::vector<std::string>& args, std::size_t n, std::string_view fn) {
  if (args.size() != n) {
    throw Error(Errc::chaincode_error, std::string(fn) + " expects " + std::to_string(n) + " arguments");
  }
}

void require_admin(const TxContext& ctx) {
  if (ctx.invoker().role != Role::admin) throw Error(Errc::not_admin, "invoker is not an admin");
}

Prices decode_prices(std::string_view b) {
  Decoder dec(b);
  auto n = dec.count();
  if (n != kTierCount) throw Error(Errc::bad_prices, "exactly three prices are required");
  Prices p{};
  for (auto& v : p) {
    v = dec.u64();
    if (v == 0) throw Error(Errc::bad_prices, "prices must be positive");
  }
  dec.finish();
  return p;
}

void put_prices(Encoder& enc, const Prices& p) {
  enc.count(p.size());
  for (auto v : p) enc.u64(v);
}

Prices get_prices(Decoder& dec) {
  if (dec.count() != kTierCount) throw Error(Errc::malformed, "stored price list is not three tiers");
  Prices p{};
  for (auto& v : p) v = dec.u64();
  return p;
}

bool is_hex_digest(std::string_view s) {
  return s.size() == 64 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

CoinAmount balance_of(TxContext& ctx, std::string_view name) {
  auto raw = ctx.get_state(wallet_key(name));
  return raw ? decode_amount(*raw) : 0;
}

}  // namespace

std::string_view to_string(PriceTier tier) {
  switch (tier) {
    case PriceTier::personal: return "personal";
    case PriceTier::editorial: return "editorial";
    case PriceTier::commercial: return "commercial";
  }
  return "unknown";
}

PriceTier tier_from_string(std::string_view name) {
  for (auto t : {PriceTier::personal, PriceTier::editorial, PriceTier::commercial}) {
    if (to_string(t) == name) return t;
  }
  throw Error(Errc::chaincode_error, "unknown price tier '" + std::string(name) + "'");
}

std::string encode(const Account& a) {
  Encoder enc;
  enc.bytes(a.name).bytes(a.role).bytes(a.display_name).bytes(a.bio).u64(a.registered_at);
  return std::move(enc).take();
}

Account decode_account(std::string_view b) {
  Decoder dec(b);
  Account a;
  a.name = dec.bytes();
  a.role = dec.bytes();
  a.display_name = dec.bytes();
  a.bio = dec.bytes();
  a.registered_at = dec.u64();
  dec.finish();
  return a;
}

std::string encode(const PhotoRecord& p) {
  Encoder enc;
  enc.bytes(p.photo_id).bytes(p.owner).bytes(p.title).strings(p.categories);
  put_prices(enc, p.prices);
  enc.bytes(p.blob_ref).u64(p.published_at);
  return std::move(enc).take();
}

PhotoRecord decode_photo(std::string_view b) {
  Decoder dec(b);
  PhotoRecord p;
  p.photo_id = dec.bytes();
  p.owner = dec.bytes();
  p.title = dec.bytes();
  p.categories = dec.strings();
  p.prices = get_prices(dec);
  p.blob_ref = dec.bytes();
  p.published_at = dec.u64();
  dec.finish();
  return p;
}

std::string encode(const Listing& l) {
  Encoder enc;
  enc.bytes(l.photo_id).bytes(l.owner);
  put_prices(enc, l.prices);
  return std::move(enc).take();
}

Listing decode_listing(std::string_view b) {
  Decoder dec(b);
  Listing l;
  l.photo_id = dec.bytes();
  l.owner = dec.bytes();
  l.prices = get_prices(dec);
  dec.finish();
  return l;
}

std::string encode(const TradeRecord& t) {
  Encoder enc;
  enc.bytes(t.trade_id).bytes(t.buyer).bytes(t.seller).bytes(t.photo_id).u64(static_cast<std::uint64_t>(t.tier)).u64(
      t.price);
  return std::move(enc).take();
}

TradeRecord decode_trade(std::string_view b) {
  Decoder dec(b);
  TradeRecord t;
  t.trade_id = dec.bytes();
  t.buyer = dec.bytes();
  t.seller = dec.bytes();
  t.photo_id = dec.bytes();
  auto tier = dec.u64();
  if (tier >= kTierCount) throw Error(Errc::malformed, "bad tier");
  t.tier = static_cast<PriceTier>(tier);
  t.price = dec.u64();
  dec.finish();
  return t;
}

std::string encode(const MintRecord& m) {
  Encoder enc;
  enc.bytes(m.mint_id).bytes(m.admin).bytes(m.recipient).u64(m.amount);
  return std::move(enc).take();
}

MintRecord decode_mint(std::string_view b) {
  Decoder dec(b);
  MintRecord m;
  m.mint_id = dec.bytes();
  m.admin = dec.bytes();
  m.recipient = dec.bytes();
  m.amount = dec.u64();
  dec.finish();
  return m;
}

std::string encode(const PublishPayload& p) {
  Encoder enc;
  enc.bytes(p.photo_id).bytes(p.topic).bytes(p.publisher);
  return std::move(enc).take();
}

PublishPayload decode_publish_payload(std::string_view b) {
  Decoder dec(b);
  PublishPayload p;
  p.photo_id = dec.bytes();
  p.topic = dec.bytes();
  p.publisher = dec.bytes();
  dec.finish();
  return p;
}

std::string encode_amount(CoinAmount amount) {
  Encoder enc;
  enc.u64(amount);
  return std::move(enc).take();
}

CoinAmount decode_amount(std::string_view b) {
  Decoder dec(b);
  auto v = dec.u64();
  dec.finish();
  return v;
}

std::string encode_prices(const std::vector<CoinAmount>& prices) {
  Encoder enc;
  enc.count(prices.size());
  for (auto v : prices) enc.u64(v);
  return std::move(enc).take();
}

std::string encode_photo_list(const std::vector<PhotoRecord>& photos) {
  Encoder enc;
  enc.count(photos.size());
  for (const auto& p : photos) enc.bytes(encode(p));
  return std::move(enc).take();
}

std::vector<PhotoRecord> decode_photo_list(std::string_view b) {
  Decoder dec(b);
  std::vector<PhotoRecord> out(dec.count());
  for (auto& p : out) p = decode_photo(dec.bytes());
  dec.finish();
  return out;
}

std::optional<std::string> decode_optional(std::string_view b) {
  Decoder dec(b);
  auto present = dec.u64();
  auto value = dec.bytes();
  dec.finish();
  if (!present) return std::nullopt;
  return value;
}

std::string account_key(std::string_view name) { return "acct:" + std::string(name); }
std::string photo_key(std::string_view photo_id) { return "photo:" + std::string(photo_id); }
std::string wallet_key(std::string_view name) { return "wallet:" + std::string(name); }
std::string listing_key(std::string_view photo_id) { return "listing:" + std::string(photo_id); }
std::string trade_key(std::string_view trade_id) { return "trade:" + std::string(trade_id); }
std::string grant_key(std::string_view buyer, std::string_view photo_id) {
  return "grant:" + std::string(buyer) + ":" + std::string(photo_id);
}
std::string mint_key(std::string_view mint_id) { return "mint:" + std::string(mint_id); }
std::string config_key(std::string_view key) { return "cfg:" + std::string(key); }

namespace args {

std::vector<std::string> create_account(const Account& a) { return {a.name, a.role, a.display_name, a.bio}; }

std::vector<std::string> publish(std::string_view owner, std::string_view title,
                                 const std::vector<std::string>& categories,
                                 const std::vector<CoinAmount>& prices, std::string_view blob_ref) {
  Encoder cats;
  cats.strings(categories);
  return {std::string(owner), std::string(title), std::move(cats).take(), encode_prices(prices),
          std::string(blob_ref)};
}

std::vector<std::string> list_by_category(std::string_view category) { return {std::string(category)}; }

std::vector<std::string> mint(std::string_view recipient, CoinAmount amount) {
  return {std::string(recipient), encode_amount(amount)};
}

std::vector<std::string> register_listing(std::string_view photo_id, std::string_view owner,
                                          const std::vector<CoinAmount>& prices) {
  return {std::string(photo_id), std::string(owner), encode_prices(prices)};
}

std::vector<std::string> buy(std::string_view buyer, std::string_view photo_id, PriceTier tier) {
  return {std::string(buyer), std::string(photo_id), std::string(to_string(tier))};
}

std::vector<std::string> put_config(std::string_view key, std::string_view value) {
  return {std::string(key), std::string(value)};
}

}  // namespace args

// E1 -------------------------------------------------------------------------

ClientsChaincode::ClientsChaincode(ChannelId channel, EndorsementPolicy policy)
    : desc_{"clients", std::move(channel), {"create_account", "get_account"}, policy} {}

std::string ClientsChaincode::invoke(TxContext& ctx, std::string_view function,
                                     const std::vector<std::string>& args) const {
  if (function == "create_account") {
    require_args(args, 4, function);
    Account a{args[0], args[1], args[2], args[3], ctx.timestamp()};
    if (a.name.empty()) throw Error(Errc::chaincode_error, "account name must not be empty");
    role_from_string(a.role);
    if (ctx.invoker().name != a.name && ctx.invoker().role != Role::admin) {
      throw Error(Errc::not_owner, "accounts can only be created by their owner");
    }
    auto key = account_key(a.name);
    if (ctx.get_state(key)) throw Error(Errc::account_exists, "account '" + a.name + "' exists");
    auto value = encode(a);
    ctx.put_state(key, value);
    return value;
  }
  // get_account
  require_args(args, 1, function);
  auto value = ctx.get_state(account_key(args[0]));
  if (!value) throw Error(Errc::unknown_identity, "no account '" + args[0] + "'");
  return *value;
}

// E2 -------------------------------------------------------------------------

PhotosChaincode::PhotosChaincode(ChannelId channel, EndorsementPolicy policy)
    : desc_{"photos", std::move(channel), {"publish", "get_photo", "list_by_category"}, policy} {}

std::string PhotosChaincode::invoke(TxContext& ctx, std::string_view function,
                                    const std::vector<std::string>& args) const {
  if (function == "publish") {
    require_args(args, 5, function);
    PhotoRecord p;
    p.owner = args[0];
    p.title = args[1];
    if (ctx.invoker().role != Role::photographer || ctx.invoker().name != p.owner) {
      throw Error(Errc::not_owner, "only the owning photographer may publish");
    }
    auto cats = Decoder(args[2]).strings();
    std::set<std::string> unique;
    for (auto& c : cats) {
      if (c.empty()) throw Error(Errc::no_category, "empty category");
      unique.insert(c);
    }
    if (unique.empty()) throw Error(Errc::no_category, "a photo needs at least one category");
    p.categories.assign(unique.begin(), unique.end());
    p.prices = decode_prices(args[3]);
    p.blob_ref = args[4];
    if (!is_hex_digest(p.blob_ref)) throw Error(Errc::chaincode_error, "blob_ref must be a hex SHA-256");
    p.photo_id = p.blob_ref;
    p.published_at = ctx.timestamp();
    auto key = photo_key(p.photo_id);
    if (ctx.get_state(key)) throw Error(Errc::already_published, "photo already published");
    auto value = encode(p);
    ctx.put_state(key, value);
    for (const auto& c : p.categories) {
      ctx.emit_event(std::string(kPublishEvent), encode(PublishPayload{p.photo_id, c, p.owner}));
    }
    return value;
  }
  if (function == "get_photo") {
    require_args(args, 1, function);
    auto value = ctx.get_state(photo_key(args[0]));
    if (!value) throw Error(Errc::unknown_photo, "no photo '" + args[0] + "'");
    return *value;
  }
  // list_by_category; an empty category lists every photo.
  require_args(args, 1, function);
  std::vector<PhotoRecord> out;
  for (const auto& [key, value] : ctx.get_by_prefix("photo:")) {
    auto p = decode_photo(value);
    if (args[0].empty() || std::binary_search(p.categories.begin(), p.categories.end(), args[0])) {
      out.push_back(std::move(p));
    }
  }
  return encode_photo_list(out);
}

// E3 -------------------------------------------------------------------------

TradesChaincode::TradesChaincode(ChannelId channel, EndorsementPolicy policy)
    : desc_{"trades",
            std::move(channel),
            {"open_wallet", "mint", "register_listing", "buy", "balance", "get_listing", "get_trade", "has_grant"},
            policy} {}

std::string TradesChaincode::invoke(TxContext& ctx, std::string_view function,
                                    const std::vector<std::string>& args) const {
  const std::string tx_hex = crypto::to_hex(ctx.tx_id());

  if (function == "open_wallet") {
    require_args(args, 1, function);
    require_admin(ctx);
    if (args[0].empty()) throw Error(Errc::chaincode_error, "wallet owner must not be empty");
    if (ctx.get_state(wallet_key(args[0]))) throw Error(Errc::account_exists, "wallet exists");
    ctx.put_state(wallet_key(args[0]), encode_amount(0));
    return encode_amount(0);
  }
  if (function == "mint") {
    require_args(args, 2, function);
    require_admin(ctx);
    auto amount = decode_amount(args[1]);
    if (amount == 0) throw Error(Errc::bad_amount, "mint amount must be positive");
    auto current = ctx.get_state(wallet_key(args[0]));
    if (!current) throw Error(Errc::unknown_recipient, "no wallet for '" + args[0] + "'");
    auto balance = decode_amount(*current);
    if (balance > UINT64_MAX - amount) throw Error(Errc::bad_amount, "balance overflow");
    balance += amount;
    ctx.put_state(wallet_key(args[0]), encode_amount(balance));
    ctx.put_state(mint_key(tx_hex), encode(MintRecord{tx_hex, ctx.invoker().name, args[0], amount}));
    return encode_amount(balance);
  }
  if (function == "register_listing") {
    require_args(args, 3, function);
    require_admin(ctx);
    Listing l{args[0], args[1], decode_prices(args[2])};
    if (!is_hex_digest(l.photo_id)) throw Error(Errc::chaincode_error, "photo_id must be a hex SHA-256");
    if (ctx.get_state(listing_key(l.photo_id))) throw Error(Errc::listing_exists, "listing exists");
    ctx.put_state(listing_key(l.photo_id), encode(l));
    return {};
  }
  if (function == "buy") {
    require_args(args, 3, function);
    const auto& buyer = args[0];
    if (ctx.invoker().name != buyer || ctx.invoker().role != Role::customer) {
      throw Error(Errc::not_owner, "purchases are made by the buying customer");
    }
    auto tier = tier_from_string(args[2]);
    auto raw_listing = ctx.get_state(listing_key(args[1]));
    if (!raw_listing) throw Error(Errc::unknown_photo, "no listing for photo '" + args[1] + "'");
    auto listing = decode_listing(*raw_listing);
    if (listing.owner == buyer) throw Error(Errc::self_purchase, "owners cannot buy their own photo");
    auto price = listing.prices[static_cast<std::size_t>(tier)];
    auto buyer_balance = balance_of(ctx, buyer);
    if (buyer_balance < price) {
      throw Error(Errc::insufficient_funds, "balance " + std::to_string(buyer_balance) + " below price " +
                                                std::to_string(price));
    }
    auto seller_balance = balance_of(ctx, listing.owner);
    TradeRecord trade{tx_hex, buyer, listing.owner, listing.photo_id, tier, price};
    ctx.put_state(wallet_key(buyer), encode_amount(buyer_balance - price));
    ctx.put_state(wallet_key(listing.owner), encode_amount(seller_balance + price));
    ctx.put_state(trade_key(tx_hex), encode(trade));
    ctx.put_state(grant_key(buyer, listing.photo_id), tx_hex);
    return encode(trade);
  }
  if (function == "balance") {
    require_args(args, 1, function);
    return encode_amount(balance_of(ctx, args[0]));
  }
  if (function == "get_listing") {
    require_args(args, 1, function);
    auto raw = ctx.get_state(listing_key(args[0]));
    if (!raw) throw Error(Errc::unknown_photo, "no listing for photo '" + args[0] + "'");
    return *raw;
  }
  if (function == "get_trade") {
    require_args(args, 1, function);
    auto raw = ctx.get_state(trade_key(args[0]));
    if (!raw) throw Error(Errc::chaincode_error, "no trade '" + args[0] + "'");
    return *raw;
  }
  // has_grant(buyer, photo_id)
  require_args(args, 2, function);
  return encode_amount(ctx.get_state(grant_key(args[0], args[1])) ? 1 : 0);
}

// E4 -------------------------------------------------------------------------

AdminChaincode::AdminChaincode(ChannelId channel, EndorsementPolicy policy)
    : desc_{"admin", std::move(channel), {"put_config", "get_config"}, policy} {}

std::string AdminChaincode::invoke(TxContext& ctx, std::string_view function,
                                   const std::vector<std::string>& args) const {
  if (function == "put_config") {
    require_args(args, 2, function);
    require_admin(ctx);
    if (args[0].empty()) throw Error(Errc::chaincode_error, "config key must not be empty");
    ctx.put_state(config_key(args[0]), args[1]);
    return {};
  }
  require_args(args, 1, function);
  auto value = ctx.get_state(config_key(args[0]));
  Encoder enc;
  enc.u64(value ? 1 : 0).bytes(value.value_or(""));
  return std::move(enc).take();
}

ChaincodeRegistry builtin_registry(EndorsementPolicy policy) {
  ChaincodeRegistry reg;
  reg.install(std::make_shared<ClientsChaincode>(ChannelId(kClientsChannel), policy));
  reg.install(std::make_shared<PhotosChaincode>(ChannelId(kPhotosChannel), policy));
  reg.install(std::make_shared<TradesChaincode>(ChannelId(kTradesChannel), policy));
  reg.install(std::make_shared<AdminChaincode>(ChannelId(kAdminChannel), policy));
  return reg;
}

}  // namespace hps::market
