#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "hyperpubsub/crypto.hpp"

namespace hps {

using ChannelId = std::string;
using IdentityId = std::string;

// Default channel layout of the photo trading platform.
inline constexpr std::string_view kClientsChannel = "E1";
inline constexpr std::string_view kPhotosChannel = "E2";
inline constexpr std::string_view kTradesChannel = "E3";
inline constexpr std::string_view kAdminChannel = "E4";

std::vector<ChannelId> default_channels();

enum class Role { photographer, customer, admin, peer, orderer };

std::string_view to_string(Role role);
/// Throws Errc::unknown_role.
Role role_from_string(std::string_view name);

struct Identity {
  IdentityId id;
  std::string name;
  Role role = Role::customer;
  std::string public_key;  // raw Ed25519 key
  bool enrolled = true;

  bool operator==(const Identity&) const = default;
};

/// Private counterpart of an identity; used by clients and endorsers to sign.
struct Signer {
  Identity identity;
  std::string secret_key;

  std::string sign(std::string_view message) const { return crypto::sign(secret_key, message); }
};

enum class AccessMode : std::uint8_t { none = 0, read = 1, write = 2 };

std::string_view to_string(AccessMode mode);

/// (Role, Channel) -> access level. Write implies read. Channels that were
/// never configured resolve to `none`.
class AccessMatrix {
 public:
  /// Least-privilege layout for the four platform channels.
  static AccessMatrix defaults();

  void set(Role role, const ChannelId& channel, AccessMode mode);
  AccessMode get(Role role, const ChannelId& channel) const;
  bool grants(Role role, const ChannelId& channel, AccessMode mode) const;
  const std::vector<ChannelId>& channels() const { return channels_; }

 private:
  std::map<std::pair<Role, ChannelId>, AccessMode> cells_;
  std::vector<ChannelId> channels_;
};

struct SessionToken {
  std::string value;
  std::string subject;
  std::int64_t expires_at = 0;  // unix seconds
};

/// Membership service: identity registry, credentials, sessions and channel
/// access control. All public members are safe to call concurrently.
class Msp {
 public:
  struct Options {
    AccessMatrix access = AccessMatrix::defaults();
    std::chrono::seconds session_ttl{3600};
    crypto::HashCost credential_cost = crypto::HashCost::interactive;
    /// Wall clock in unix seconds; injectable for tests.
    std::function<std::int64_t()> clock;
    /// 32-byte MAC key for session tokens; random when empty.
    std::string session_key;
  };

  Msp();
  explicit Msp(Options options);

  /// Throws Errc::duplicate_name. The credential, when given, is stored
  /// salted-hashed and enables `authenticate`.
  Identity register_identity(const std::string& name, Role role, const std::string& public_key,
                             std::optional<std::string> credential = std::nullopt);

  std::optional<Identity> find_by_name(std::string_view name) const;
  std::optional<Identity> find_by_id(std::string_view id) const;
  std::vector<Identity> identities() const;

  void set_enrolled(std::string_view name, bool enrolled);

  /// Throws Errc::unknown_identity or Errc::bad_credential.
  SessionToken authenticate(std::string_view name, std::string_view credential);
  /// Resolves a bearer token to its identity. Throws Errc::bad_credential for
  /// forged or revoked tokens and Errc::session_expired past expiry.
  Identity validate_session(std::string_view token) const;
  void revoke_session(std::string_view token);

  bool verify_signature(const Identity& identity, std::string_view message,
                        std::string_view signature) const;
  /// Looks the identity up by id; the registry, not the caller's copy, is
  /// authoritative for role and enrolment.
  bool check_channel_access(const Identity& identity, const ChannelId& channel, AccessMode mode) const;
  bool check_channel_access(std::string_view identity_id, const ChannelId& channel, AccessMode mode) const;

  const AccessMatrix& access() const { return options_.access; }
  std::chrono::seconds session_ttl() const { return options_.session_ttl; }

  nlohmann::json to_json() const;
  /// Replaces the registry content with a document produced by `to_json`.
  void load_json(const nlohmann::json& doc);
  void save(const std::string& path) const;
  void load(const std::string& path);

 private:
  struct Record {
    Identity identity;
    std::string credential_hash;
  };

  std::int64_t now() const;

  Options options_;
  mutable std::shared_mutex mu_;
  std::unordered_map<std::string, Record> by_name_;
  std::unordered_map<std::string, std::string> id_to_name_;
  std::vector<std::string> order_;  // registration order, for stable persistence
  std::unordered_set<std::string> revoked_;
};

/// Opaque identifier derived from the name and key.
IdentityId make_identity_id(std::string_view name, std::string_view public_key);

}  // namespace hps
