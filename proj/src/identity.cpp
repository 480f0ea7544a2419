#include "hyperpubsub/identity.hpp"

#include <fstream>
#include <mutex>

#include "hyperpubsub/error.hpp"

namespace hps {

std::vector<ChannelId> default_channels() {
  return {ChannelId(kClientsChannel), ChannelId(kPhotosChannel), ChannelId(kTradesChannel),
          ChannelId(kAdminChannel)};
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::photographer: return "photographer";
    case Role::customer: return "customer";
    case Role::admin: return "admin";
    case Role::peer: return "peer";
    case Role::orderer: return "orderer";
  }
  return "unknown";
}

Role role_from_string(std::string_view name) {
  for (Role r : {Role::photographer, Role::customer, Role::admin, Role::peer, Role::orderer}) {
    if (to_string(r) == name) return r;
  }
  throw Error(Errc::unknown_role, "unknown role '" + std::string(name) + "'");
}

std::string_view to_string(AccessMode mode) {
  switch (mode) {
    case AccessMode::none: return "none";
    case AccessMode::read: return "read";
    case AccessMode::write: return "write";
  }
  return "none";
}

AccessMatrix AccessMatrix::defaults() {
  AccessMatrix m;
  const ChannelId e1(kClientsChannel), e2(kPhotosChannel), e3(kTradesChannel), e4(kAdminChannel);
  // Row-level ownership ("own record", "own photos") is enforced by the chaincodes.
  m.set(Role::customer, e1, AccessMode::write);
  m.set(Role::customer, e2, AccessMode::read);
  m.set(Role::customer, e3, AccessMode::write);
  m.set(Role::customer, e4, AccessMode::none);
  m.set(Role::photographer, e1, AccessMode::write);
  m.set(Role::photographer, e2, AccessMode::write);
  m.set(Role::photographer, e3, AccessMode::read);
  m.set(Role::photographer, e4, AccessMode::none);
  for (const auto& ch : {e1, e2, e3, e4}) {
    m.set(Role::admin, ch, AccessMode::write);
    m.set(Role::peer, ch, AccessMode::none);
    m.set(Role::orderer, ch, AccessMode::none);
  }
  return m;
}

void AccessMatrix::set(Role role, const ChannelId& channel, AccessMode mode) {
  cells_[{role, channel}] = mode;
  if (std::find(channels_.begin(), channels_.end(), channel) == channels_.end()) {
    channels_.push_back(channel);
  }
}

AccessMode AccessMatrix::get(Role role, const ChannelId& channel) const {
  auto it = cells_.find({role, channel});
  return it == cells_.end() ? AccessMode::none : it->second;
}

bool AccessMatrix::grants(Role role, const ChannelId& channel, AccessMode mode) const {
  if (mode == AccessMode::none) return true;
  return static_cast<int>(get(role, channel)) >= static_cast<int>(mode);
}

IdentityId make_identity_id(std::string_view name, std::string_view public_key) {
  Encoder enc;
  enc.bytes(name).bytes(public_key);
  return "id-" + crypto::to_hex(crypto::sha256(enc.data())).substr(0, 32);
}

Msp::Msp() : Msp(Options{}) {}

Msp::Msp(Options options) : options_(std::move(options)) {
  if (options_.session_key.empty()) options_.session_key = crypto::random_bytes(32);
}

std::int64_t Msp::now() const {
  if (options_.clock) return options_.clock();
  return std::chrono::duration_cast<std::chrono::seconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Identity Msp::register_identity(const std::string& name, Role role, const std::string& public_key,
                                std::optional<std::string> credential) {
  if (name.empty()) throw Error(Errc::malformed, "identity name must not be empty");
  // Hash outside the lock; Argon2 is deliberately slow.
  std::string stored = credential ? crypto::hash_credential(*credential, options_.credential_cost) : "";
  std::unique_lock lock(mu_);
  if (by_name_.contains(name)) throw Error(Errc::duplicate_name, "name '" + name + "' already registered");
  Identity id{make_identity_id(name, public_key), name, role, public_key, true};
  by_name_.emplace(name, Record{id, std::move(stored)});
  id_to_name_.emplace(id.id, name);
  order_.push_back(name);
  return id;
}

std::optional<Identity> Msp::find_by_name(std::string_view name) const {
  std::shared_lock lock(mu_);
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) return std::nullopt;
  return it->second.identity;
}

std::optional<Identity> Msp::find_by_id(std::string_view id) const {
  std::shared_lock lock(mu_);
  auto it = id_to_name_.find(std::string(id));
  if (it == id_to_name_.end()) return std::nullopt;
  return by_name_.at(it->second).identity;
}

std::vector<Identity> Msp::identities() const {
  std::shared_lock lock(mu_);
  std::vector<Identity> out;
  for (const auto& name : order_) out.push_back(by_name_.at(name).identity);
  return out;
}

void Msp::set_enrolled(std::string_view name, bool enrolled) {
  std::unique_lock lock(mu_);
  auto it = by_name_.find(std::string(name));
  if (it == by_name_.end()) throw Error(Errc::unknown_identity, "unknown identity '" + std::string(name) + "'");
  it->second.identity.enrolled = enrolled;
}

SessionToken Msp::authenticate(std::string_view name, std::string_view credential) {
  std::string stored;
  {
    std::shared_lock lock(mu_);
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) throw Error(Errc::unknown_identity, "unknown identity '" + std::string(name) + "'");
    if (!it->second.identity.enrolled) throw Error(Errc::bad_credential, "identity is not enrolled");
    stored = it->second.credential_hash;
  }
  if (stored.empty() || !crypto::check_credential(stored, credential)) {
    throw Error(Errc::bad_credential, "credential rejected");
  }
  SessionToken token;
  token.subject = std::string(name);
  token.expires_at = now() + options_.session_ttl.count();
  std::string payload = crypto::to_hex(token.subject) + "." + std::to_string(token.expires_at) + "." +
                        crypto::to_hex(crypto::random_bytes(16));
  token.value = payload + "." + crypto::to_hex(crypto::hmac(options_.session_key, payload));
  return token;
}

Identity Msp::validate_session(std::string_view token) const {
  auto mac_dot = token.rfind('.');
  if (mac_dot == std::string_view::npos) throw Error(Errc::bad_credential, "malformed session token");
  auto payload = token.substr(0, mac_dot);
  std::string mac;
  try {
    mac = crypto::from_hex(token.substr(mac_dot + 1));
  } catch (const Error&) {
    throw Error(Errc::bad_credential, "malformed session token");
  }
  if (!crypto::hmac_verify(options_.session_key, payload, mac)) {
    throw Error(Errc::bad_credential, "session token signature invalid");
  }
  auto first = payload.find('.');
  auto second = payload.find('.', first + 1);
  if (first == std::string_view::npos || second == std::string_view::npos) {
    throw Error(Errc::bad_credential, "malformed session token");
  }
  std::string subject = crypto::from_hex(payload.substr(0, first));
  std::int64_t expires = std::stoll(std::string(payload.substr(first + 1, second - first - 1)));
  if (now() >= expires) throw Error(Errc::session_expired, "session expired");

  std::shared_lock lock(mu_);
  if (revoked_.contains(std::string(token))) throw Error(Errc::bad_credential, "session revoked");
  auto it = by_name_.find(subject);
  if (it == by_name_.end() || !it->second.identity.enrolled) {
    throw Error(Errc::bad_credential, "session subject no longer enrolled");
  }
  return it->second.identity;
}

void Msp::revoke_session(std::string_view token) {
  std::unique_lock lock(mu_);
  revoked_.insert(std::string(token));
}

bool Msp::verify_signature(const Identity& identity, std::string_view message,
                           std::string_view signature) const {
  auto registered = find_by_id(identity.id);
  if (!registered || !registered->enrolled) return false;
  return crypto::verify(registered->public_key, message, signature);
}

bool Msp::check_channel_access(const Identity& identity, const ChannelId& channel, AccessMode mode) const {
  return check_channel_access(identity.id, channel, mode);
}

bool Msp::check_channel_access(std::string_view identity_id, const ChannelId& channel, AccessMode mode) const {
  auto registered = find_by_id(identity_id);
  if (!registered || !registered->enrolled) return false;
  return options_.access.grants(registered->role, channel, mode);
}

nlohmann::json Msp::to_json() const {
  std::shared_lock lock(mu_);
  nlohmann::json records = nlohmann::json::array();
  for (const auto& name : order_) {
    const auto& rec = by_name_.at(name);
    records.push_back({{"id", rec.identity.id},
                       {"name", rec.identity.name},
                       {"role", to_string(rec.identity.role)},
                       {"public_key", crypto::to_hex(rec.identity.public_key)},
                       {"enrolled", rec.identity.enrolled},
                       {"credential", rec.credential_hash}});
  }
  return {{"identities", records}};
}

void Msp::load_json(const nlohmann::json& doc) {
  std::unordered_map<std::string, Record> by_name;
  std::unordered_map<std::string, std::string> id_to_name;
  std::vector<std::string> order;
  for (const auto& r : doc.at("identities")) {
    Record rec;
    rec.identity.id = r.at("id").get<std::string>();
    rec.identity.name = r.at("name").get<std::string>();
    rec.identity.role = role_from_string(r.at("role").get<std::string>());
    rec.identity.public_key = crypto::from_hex(r.at("public_key").get<std::string>());
    rec.identity.enrolled = r.at("enrolled").get<bool>();
    rec.credential_hash = r.value("credential", "");
    if (by_name.contains(rec.identity.name)) {
      throw Error(Errc::duplicate_name, "registry lists '" + rec.identity.name + "' twice");
    }
    id_to_name[rec.identity.id] = rec.identity.name;
    order.push_back(rec.identity.name);
    by_name.emplace(rec.identity.name, std::move(rec));
  }
  std::unique_lock lock(mu_);
  by_name_ = std::move(by_name);
  id_to_name_ = std::move(id_to_name);
  order_ = std::move(order);
}

void Msp::save(const std::string& path) const {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot write " + tmp);
    out << to_json().dump(2) << '\n';
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw Error(Errc::io_error, "cannot replace " + path);
}

void Msp::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read " + path);
  load_json(nlohmann::json::parse(in));
}

}  // namespace hps
