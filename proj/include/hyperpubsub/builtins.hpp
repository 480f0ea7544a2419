#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hyperpubsub/chaincode.hpp"

// Built-in chaincodes of the photo trading platform:
//   E1 "clients"  accounts            acct:<name>
//   E2 "photos"   photo metadata      photo:<photo_id>
//   E3 "trades"   wallets, listings, trades, grants, mint records
//   E4 "admin"    configuration       cfg:<key>
namespace hps::market {

using CoinAmount = std::uint64_t;

enum class PriceTier : std::uint8_t { personal = 0, editorial = 1, commercial = 2 };
inline constexpr std::size_t kTierCount = 3;
using Prices = std::array<CoinAmount, kTierCount>;

std::string_view to_string(PriceTier tier);
/// Throws Errc::chaincode_error.
PriceTier tier_from_string(std::string_view name);

struct Account {
  std::string name;
  std::string role;
  std::string display_name;
  std::string bio;
  std::uint64_t registered_at = 0;

  bool operator==(const Account&) const = default;
};

struct PhotoRecord {
  std::string photo_id;  // hex SHA-256 of the image bytes
  std::string owner;
  std::string title;
  std::vector<std::string> categories;  // sorted, unique, non-empty
  Prices prices{};
  std::string blob_ref;
  std::uint64_t published_at = 0;

  bool operator==(const PhotoRecord&) const = default;
};

struct Listing {
  std::string photo_id;
  std::string owner;
  Prices prices{};

  bool operator==(const Listing&) const = default;
};

struct TradeRecord {
  std::string trade_id;  // hex tx id of the buy
  std::string buyer;
  std::string seller;
  std::string photo_id;
  PriceTier tier = PriceTier::personal;
  CoinAmount price = 0;

  bool operator==(const TradeRecord&) const = default;
};

struct MintRecord {
  std::string mint_id;  // hex tx id of the mint
  std::string admin;
  std::string recipient;
  CoinAmount amount = 0;

  bool operator==(const MintRecord&) const = default;
};

/// Payload of a "publish" chaincode event; one per category of the photo.
struct PublishPayload {
  std::string photo_id;
  std::string topic;
  std::string publisher;
};

inline constexpr std::string_view kPublishEvent = "publish";

std::string encode(const Account& a);
Account decode_account(std::string_view b);
std::string encode(const PhotoRecord& p);
PhotoRecord decode_photo(std::string_view b);
std::string encode(const Listing& l);
Listing decode_listing(std::string_view b);
std::string encode(const TradeRecord& t);
TradeRecord decode_trade(std::string_view b);
std::string encode(const MintRecord& m);
MintRecord decode_mint(std::string_view b);
std::string encode(const PublishPayload& p);
PublishPayload decode_publish_payload(std::string_view b);
std::string encode_amount(CoinAmount amount);
CoinAmount decode_amount(std::string_view b);
std::string encode_prices(const std::vector<CoinAmount>& prices);
std::string encode_photo_list(const std::vector<PhotoRecord>& photos);
std::vector<PhotoRecord> decode_photo_list(std::string_view b);
/// get_config response: presence flag + value.
std::optional<std::string> decode_optional(std::string_view b);

// State keys.
std::string account_key(std::string_view name);
std::string photo_key(std::string_view photo_id);
std::string wallet_key(std::string_view name);
std::string listing_key(std::string_view photo_id);
std::string trade_key(std::string_view trade_id);
std::string grant_key(std::string_view buyer, std::string_view photo_id);
std::string mint_key(std::string_view mint_id);
std::string config_key(std::string_view key);

// Argument builders for each function (ABI: list of byte strings).
namespace args {
std::vector<std::string> create_account(const Account& a);
std::vector<std::string> publish(std::string_view owner, std::string_view title,
                                 const std::vector<std::string>& categories,
                                 const std::vector<CoinAmount>& prices, std::string_view blob_ref);
std::vector<std::string> list_by_category(std::string_view category);
std::vector<std::string> mint(std::string_view recipient, CoinAmount amount);
std::vector<std::string> register_listing(std::string_view photo_id, std::string_view owner,
                                          const std::vector<CoinAmount>& prices);
std::vector<std::string> buy(std::string_view buyer, std::string_view photo_id, PriceTier tier);
std::vector<std::string> put_config(std::string_view key, std::string_view value);
}  // namespace args

class ClientsChaincode final : public Chaincode {
 public:
  explicit ClientsChaincode(ChannelId channel = ChannelId(kClientsChannel), EndorsementPolicy policy = {});
  const ChaincodeDescriptor& descriptor() const override { return desc_; }
  std::string invoke(TxContext& ctx, std::string_view function, const std::vector<std::string>& args) const override;

 private:
  ChaincodeDescriptor desc_;
};

class PhotosChaincode final : public Chaincode {
 public:
  explicit PhotosChaincode(ChannelId channel = ChannelId(kPhotosChannel), EndorsementPolicy policy = {});
  const ChaincodeDescriptor& descriptor() const override { return desc_; }
  std::string invoke(TxContext& ctx, std::string_view function, const std::vector<std::string>& args) const override;

 private:
  ChaincodeDescriptor desc_;
};

class TradesChaincode final : public Chaincode {
 public:
  explicit TradesChaincode(ChannelId channel = ChannelId(kTradesChannel), EndorsementPolicy policy = {});
  const ChaincodeDescriptor& descriptor() const override { return desc_; }
  std::string invoke(TxContext& ctx, std::string_view function, const std::vector<std::string>& args) const override;

 private:
  ChaincodeDescriptor desc_;
};

class AdminChaincode final : public Chaincode {
 public:
  explicit AdminChaincode(ChannelId channel = ChannelId(kAdminChannel), EndorsementPolicy policy = {});
  const ChaincodeDescriptor& descriptor() const override { return desc_; }
  std::string invoke(TxContext& ctx, std::string_view function, const std::vector<std::string>& args) const override;

 private:
  ChaincodeDescriptor desc_;
};

/// Registry with the four platform chaincodes, each with the given policy.
ChaincodeRegistry builtin_registry(EndorsementPolicy policy = {});

}  // namespace hps::market
