#include <doctest.h>

#include <random>

#include "hyperpubsub/crypto.hpp"
#include "hyperpubsub/error.hpp"

using namespace hps;

// Reference values computed with Python's hashlib/hmac and the
// `cryptography` package (RFC 8032 test 1 key).
TEST_CASE("sha256 matches the reference digest") {
  CHECK(crypto::to_hex(crypto::sha256("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("ed25519 seed, public key and signatures match the reference") {
  auto seed = crypto::from_hex("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60");
  auto kp = crypto::keypair_from_seed(seed);
  CHECK(crypto::to_hex(kp.public_key) == "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a");
  CHECK(crypto::to_hex(crypto::sign(kp.secret_key, "")) ==
        "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e065224901555fb8821590a33bacc61e39701cf9b46bd25bf5f0595"
        "bbe24655141438e7a100b");
  CHECK(crypto::to_hex(crypto::sign(kp.secret_key, "hyperpubsub")) ==
        "4f7127e7e85f02e804f138616dc54bfebd6163cea02be3ec433c0ccc242b2ad552e01fa26694bffedf42ba2acebe20efdf086e3eac3"
        "550f04caa0d1ae3b1670e");
}

TEST_CASE("hmac matches the reference") {
  std::string key;
  for (int i = 0; i < 32; ++i) key.push_back(static_cast<char>(i));
  auto mac = crypto::hmac(key, "message");
  CHECK(crypto::to_hex(mac) == "6297b77508a1a30ea4dfadd8f847c31b49aba45de10a79daf721d3f7ec112a24");
  CHECK(crypto::hmac_verify(key, "message", mac));
  CHECK_FALSE(crypto::hmac_verify(key, "messagf", mac));
  CHECK_FALSE(crypto::hmac_verify(key, "message", mac.substr(1)));
}

TEST_CASE("tampered messages and signatures never verify") {
  auto kp = crypto::generate_keypair();
  std::mt19937_64 rng(2024);
  int accepted = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string msg = "tx-" + std::to_string(i);
    auto sig = crypto::sign(kp.secret_key, msg);
    if (i % 2 == 0) {
      msg[rng() % msg.size()] ^= static_cast<char>(1 + rng() % 255);
    } else {
      sig[rng() % sig.size()] ^= static_cast<char>(1 + rng() % 255);
    }
    accepted += crypto::verify(kp.public_key, msg, sig);
  }
  CHECK(accepted == 0);
}

TEST_CASE("verify tolerates malformed keys and signatures") {
  auto kp = crypto::generate_keypair();
  auto sig = crypto::sign(kp.secret_key, "m");
  CHECK(crypto::verify(kp.public_key, "m", sig));
  CHECK_FALSE(crypto::verify("short", "m", sig));
  CHECK_FALSE(crypto::verify(kp.public_key, "m", "short"));
  CHECK_FALSE(crypto::verify("", "", ""));
}

TEST_CASE("hex and base64 reject bad input") {
  CHECK(crypto::from_hex("00ff") == std::string("\x00\xff", 2));
  CHECK_THROWS_AS(crypto::from_hex("abc"), Error);
  CHECK_THROWS_AS(crypto::from_hex("zz"), Error);
  CHECK_THROWS_AS(crypto::hash_from_hex("00"), Error);
  CHECK(crypto::from_base64(crypto::to_base64("photo bytes")) == "photo bytes");
  CHECK_THROWS_AS(crypto::from_base64("@@@"), Error);
}

TEST_CASE("credential hashes are salted and check only the right secret") {
  auto a = crypto::hash_credential("s3cret", crypto::HashCost::minimal);
  auto b = crypto::hash_credential("s3cret", crypto::HashCost::minimal);
  CHECK(a != b);
  CHECK(crypto::check_credential(a, "s3cret"));
  CHECK_FALSE(crypto::check_credential(a, "s3creT"));
  CHECK_FALSE(crypto::check_credential("garbage", "s3cret"));
}
