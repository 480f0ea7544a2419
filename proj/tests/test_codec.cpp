#include <doctest.h>

#include <random>

#include "hyperpubsub/codec.hpp"
#include "hyperpubsub/error.hpp"

using namespace hps;

TEST_CASE("integers are 8-byte big-endian, byte strings 4-byte length-prefixed") {
  Encoder enc;
  enc.u64(0x0102030405060708ULL).bytes("ab");
  CHECK(enc.data() == std::string("\x01\x02\x03\x04\x05\x06\x07\x08\x00\x00\x00\x02" "ab", 14));
}

TEST_CASE("strings are a u64 count followed by elements") {
  Encoder enc;
  enc.strings({"x", ""});
  CHECK(enc.data() == std::string("\0\0\0\0\0\0\0\x02\0\0\0\x01x\0\0\0\0", 17));
}

TEST_CASE("decoder rejects truncation and trailing bytes") {
  Encoder enc;
  enc.u64(7).bytes("hello");
  auto data = enc.data();
  SUBCASE("truncated byte string") {
    Decoder dec(std::string_view(data).substr(0, data.size() - 1));
    CHECK(dec.u64() == 7);
    CHECK_THROWS_AS(dec.bytes(), Error);
  }
  SUBCASE("trailing bytes") {
    std::string padded = data + "x";
    Decoder dec(padded);
    dec.u64();
    dec.bytes();
    CHECK_FALSE(dec.done());
    CHECK_THROWS_AS(dec.finish(), Error);
  }
  SUBCASE("empty input") {
    Decoder dec("");
    CHECK_THROWS_AS(dec.u64(), Error);
  }
}

TEST_CASE("decoder refuses list counts the remaining input cannot hold") {
  Encoder enc;
  enc.count(1'000'000'000);
  Decoder dec(enc.data());
  try {
    dec.strings();
    FAIL("expected malformed");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::malformed);
  }
}

TEST_CASE("property: decoding arbitrary bytes either succeeds or throws malformed") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 5000; ++i) {
    std::string junk(rng() % 48, '\0');
    for (auto& c : junk) c = static_cast<char>(rng() & 0xff);
    Decoder dec(junk);
    try {
      dec.strings();
      dec.finish();
    } catch (const Error& e) {
      CHECK(e.code() == Errc::malformed);
    }
  }
}

TEST_CASE("property: encoded strings decode to the same list") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::string> items(rng() % 6);
    for (auto& s : items) {
      s.resize(rng() % 20);
      for (auto& c : s) c = static_cast<char>(rng() & 0xff);
    }
    Encoder enc;
    enc.strings(items);
    Decoder dec(enc.data());
    CHECK(dec.strings() == items);
    CHECK(dec.done());
  }
}
