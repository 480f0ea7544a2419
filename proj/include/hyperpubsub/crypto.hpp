#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "hyperpubsub/codec.hpp"

namespace hps::crypto {

/// SHA-256; the canonical hash for block linkage, tx ids and content addresses.
Hash256 sha256(std::string_view data);

std::string to_hex(std::string_view bytes);
std::string to_hex(const Hash256& h);
/// Throws Errc::malformed on odd length or non-hex characters.
std::string from_hex(std::string_view hex);
Hash256 hash_from_hex(std::string_view hex);

std::string to_base64(std::string_view bytes);
std::string from_base64(std::string_view text);

std::string random_bytes(std::size_t n);

// Ed25519. Public keys are 32 bytes, secret keys 64 bytes, signatures 64 bytes.
struct KeyPair {
  std::string public_key;
  std::string secret_key;
};

KeyPair generate_keypair();
/// Deterministic key generation from a 32-byte seed (simulation reproducibility).
KeyPair keypair_from_seed(std::string_view seed);

std::string sign(std::string_view secret_key, std::string_view message);
/// Never throws; malformed keys or signatures simply fail verification.
bool verify(std::string_view public_key, std::string_view message, std::string_view signature);

// Credential storage (Argon2id, salted, self-describing string).
enum class HashCost { interactive, minimal };
std::string hash_credential(std::string_view secret, HashCost cost);
bool check_credential(std::string_view stored, std::string_view secret);

/// HMAC-SHA256 with a 32-byte key.
std::string hmac(std::string_view key, std::string_view message);
bool hmac_verify(std::string_view key, std::string_view message, std::string_view mac);

}  // namespace hps::crypto
