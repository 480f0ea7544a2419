#include "hyperpubsub/codec.hpp"

#include "hyperpubsub/error.hpp"

namespace hps {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::malformed: return "malformed";
    case Errc::duplicate_name: return "duplicate-name";
    case Errc::unknown_role: return "unknown-role";
    case Errc::unknown_identity: return "unknown-identity";
    case Errc::bad_credential: return "bad-credential";
    case Errc::session_expired: return "session-expired";
    case Errc::sequence_gap: return "sequence-gap";
    case Errc::chain_break: return "chain-break";
    case Errc::out_of_range: return "out-of-range";
    case Errc::unknown_function: return "unknown-function";
    case Errc::chaincode_error: return "chaincode-error";
    case Errc::account_exists: return "account-exists";
    case Errc::not_owner: return "not-owner";
    case Errc::bad_prices: return "bad-prices";
    case Errc::no_category: return "no-category";
    case Errc::not_admin: return "not-admin";
    case Errc::bad_amount: return "bad-amount";
    case Errc::listing_exists: return "listing-exists";
    case Errc::unknown_photo: return "unknown-photo";
    case Errc::unknown_recipient: return "unknown-recipient";
    case Errc::insufficient_funds: return "insufficient-funds";
    case Errc::self_purchase: return "self-purchase";
    case Errc::already_published: return "already-published";
    case Errc::access_denied: return "access-denied";
    case Errc::bad_proposal_signature: return "bad-proposal-signature";
    case Errc::simulation_failure: return "simulation-failure";
    case Errc::insufficient_endorsements: return "insufficient-endorsements";
    case Errc::divergent_results: return "divergent-results";
    case Errc::unavailable: return "unavailable";
    case Errc::unknown_topic: return "unknown-topic";
    case Errc::bad_config: return "bad-config";
    case Errc::unknown_channel: return "unknown-channel";
    case Errc::unknown_target: return "unknown-target";
    case Errc::timeout: return "timeout";
    case Errc::mvcc_conflict: return "mvcc-conflict";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

Encoder& Encoder::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<char>((v >> shift) & 0xff));
  }
  return *this;
}

Encoder& Encoder::bytes(std::string_view b) {
  if (b.size() > 0xffffffffULL) throw Error(Errc::malformed, "field too large");
  auto n = static_cast<std::uint32_t>(b.size());
  for (int shift = 24; shift >= 0; shift -= 8) {
    out_.push_back(static_cast<char>((n >> shift) & 0xff));
  }
  out_.append(b);
  return *this;
}

Encoder& Encoder::hash(const Hash256& h) {
  return bytes(std::string_view(reinterpret_cast<const char*>(h.data()), h.size()));
}

void Decoder::need(std::size_t n) const {
  if (in_.size() - pos_ < n) throw Error(Errc::malformed, "truncated canonical encoding");
}

std::uint64_t Decoder::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | static_cast<std::uint8_t>(in_[pos_++]);
  return v;
}

std::string Decoder::bytes() {
  need(4);
  std::uint32_t n = 0;
  for (int i = 0; i < 4; ++i) n = (n << 8) | static_cast<std::uint8_t>(in_[pos_++]);
  need(n);
  std::string out(in_.substr(pos_, n));
  pos_ += n;
  return out;
}

Hash256 Decoder::hash() {
  auto raw = bytes();
  if (raw.size() != 32) throw Error(Errc::malformed, "hash field is not 32 bytes");
  Hash256 h;
  std::copy(raw.begin(), raw.end(), h.begin());
  return h;
}

std::size_t Decoder::count() {
  auto n = u64();
  // Every element takes at least four bytes.
  if (n > (in_.size() - pos_) / 4) throw Error(Errc::malformed, "list count exceeds input");
  return static_cast<std::size_t>(n);
}

std::vector<std::string> Decoder::strings() {
  std::vector<std::string> out(count());
  for (auto& s : out) s = bytes();
  return out;
}

void Decoder::finish() const {
  if (!done()) throw Error(Errc::malformed, "trailing bytes after canonical encoding");
}

}  // namespace hps
