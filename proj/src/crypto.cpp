#include "hyperpubsub/crypto.hpp"

#include <sodium.h>

#include <stdexcept>

#include "hyperpubsub/error.hpp"

namespace hps::crypto {
namespace {

const unsigned char* u8(std::string_view s) {
  return reinterpret_cast<const unsigned char*>(s.data());
}

struct SodiumInit {
  SodiumInit() {
    if (sodium_init() < 0) throw std::runtime_error("libsodium initialisation failed");
  }
};

void ensure_init() { static SodiumInit init; }

}  // namespace

Hash256 sha256(std::string_view data) {
  Hash256 out;
  crypto_hash_sha256(out.data(), u8(data), data.size());
  return out;
}

std::string to_hex(std::string_view bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char c : bytes) {
    out.push_back(kDigits[c >> 4]);
    out.push_back(kDigits[c & 0xf]);
  }
  return out;
}

std::string to_hex(const Hash256& h) {
  return to_hex(std::string_view(reinterpret_cast<const char*>(h.data()), h.size()));
}

std::string from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) throw Error(Errc::malformed, "odd-length hex string");
  std::string out;
  out.reserve(hex.size() / 2);
  for (std::size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::malformed, "invalid hex digit");
    out.push_back(static_cast<char>((hi << 4) | lo));
  }
  return out;
}

Hash256 hash_from_hex(std::string_view hex) {
  auto raw = from_hex(hex);
  if (raw.size() != 32) throw Error(Errc::malformed, "expected 64 hex digits");
  Hash256 h;
  std::copy(raw.begin(), raw.end(), h.begin());
  return h;
}

std::string to_base64(std::string_view bytes) {
  constexpr int variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_encoded_len(bytes.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), u8(bytes), bytes.size(), variant);
  out.resize(out.size() - 1);  // trailing NUL
  return out;
}

std::string from_base64(std::string_view text) {
  std::string out(text.size() / 4 * 3 + 3, '\0');
  size_t len = 0;
  if (sodium_base642bin(reinterpret_cast<unsigned char*>(out.data()), out.size(), text.data(),
                        text.size(), nullptr, &len, nullptr, sodium_base64_VARIANT_ORIGINAL) != 0) {
    throw Error(Errc::malformed, "invalid base64");
  }
  out.resize(len);
  return out;
}

std::string random_bytes(std::size_t n) {
  ensure_init();
  std::string out(n, '\0');
  randombytes_buf(out.data(), n);
  return out;
}

KeyPair generate_keypair() {
  return keypair_from_seed(random_bytes(crypto_sign_SEEDBYTES));
}

KeyPair keypair_from_seed(std::string_view seed) {
  ensure_init();
  if (seed.size() != crypto_sign_SEEDBYTES) throw Error(Errc::malformed, "seed must be 32 bytes");
  KeyPair kp{std::string(crypto_sign_PUBLICKEYBYTES, '\0'), std::string(crypto_sign_SECRETKEYBYTES, '\0')};
  crypto_sign_seed_keypair(reinterpret_cast<unsigned char*>(kp.public_key.data()),
                           reinterpret_cast<unsigned char*>(kp.secret_key.data()), u8(seed));
  return kp;
}

std::string sign(std::string_view secret_key, std::string_view message) {
  if (secret_key.size() != crypto_sign_SECRETKEYBYTES) throw Error(Errc::malformed, "bad secret key");
  std::string sig(crypto_sign_BYTES, '\0');
  crypto_sign_detached(reinterpret_cast<unsigned char*>(sig.data()), nullptr, u8(message),
                       message.size(), u8(secret_key));
  return sig;
}

bool verify(std::string_view public_key, std::string_view message, std::string_view signature) {
  if (public_key.size() != crypto_sign_PUBLICKEYBYTES || signature.size() != crypto_sign_BYTES) {
    return false;
  }
  ensure_init();
  return crypto_sign_verify_detached(u8(signature), u8(message), message.size(), u8(public_key)) == 0;
}

std::string hash_credential(std::string_view secret, HashCost cost) {
  ensure_init();
  auto ops = cost == HashCost::interactive ? crypto_pwhash_OPSLIMIT_INTERACTIVE : crypto_pwhash_OPSLIMIT_MIN;
  auto mem = cost == HashCost::interactive ? crypto_pwhash_MEMLIMIT_INTERACTIVE : crypto_pwhash_MEMLIMIT_MIN;
  char out[crypto_pwhash_STRBYTES];
  if (crypto_pwhash_str(out, secret.data(), secret.size(), ops, mem) != 0) {
    throw std::runtime_error("credential hashing ran out of memory");
  }
  return out;
}

bool check_credential(std::string_view stored, std::string_view secret) {
  ensure_init();
  std::string z(stored);
  return crypto_pwhash_str_verify(z.c_str(), secret.data(), secret.size()) == 0;
}

std::string hmac(std::string_view key, std::string_view message) {
  if (key.size() != crypto_auth_hmacsha256_KEYBYTES) throw Error(Errc::malformed, "bad hmac key");
  std::string mac(crypto_auth_hmacsha256_BYTES, '\0');
  crypto_auth_hmacsha256(reinterpret_cast<unsigned char*>(mac.data()), u8(message), message.size(), u8(key));
  return mac;
}

bool hmac_verify(std::string_view key, std::string_view message, std::string_view mac) {
  if (key.size() != crypto_auth_hmacsha256_KEYBYTES || mac.size() != crypto_auth_hmacsha256_BYTES) {
    return false;
  }
  return crypto_auth_hmacsha256_verify(u8(mac), u8(message), message.size(), u8(key)) == 0;
}

}  // namespace hps::crypto
