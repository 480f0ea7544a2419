#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hps {

using Hash256 = std::array<std::uint8_t, 32>;

// Canonical encoding. Fields are written in declared order: byte strings as
// a 4-byte big-endian length followed by the raw bytes, integers as 8-byte
// big-endian. Lists are an 8-byte count followed by the elements; nested
// records are written as a length-prefixed byte string of their own encoding.
class Encoder {
 public:
  Encoder& u64(std::uint64_t v);
  Encoder& bytes(std::string_view b);
  Encoder& hash(const Hash256& h);
  Encoder& count(std::size_t n) { return u64(n); }

  Encoder& strings(const std::vector<std::string>& items) {
    count(items.size());
    for (const auto& s : items) bytes(s);
    return *this;
  }

  const std::string& data() const& { return out_; }
  std::string take() && { return std::move(out_); }

 private:
  std::string out_;
};

class Decoder {
 public:
  explicit Decoder(std::string_view in) : in_(in) {}

  std::uint64_t u64();
  std::string bytes();
  Hash256 hash();
  std::size_t count();
  std::vector<std::string> strings();

  bool done() const { return pos_ == in_.size(); }
  /// Throws if trailing bytes remain.
  void finish() const;

 private:
  void need(std::size_t n) const;

  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace hps
