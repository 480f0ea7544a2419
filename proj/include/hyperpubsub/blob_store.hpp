#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "hyperpubsub/codec.hpp"

namespace hps {

/// Content-addressed image store: one file per SHA-256, fanned out by the
/// first two hex characters (root/ab/abcd...).
class BlobStore {
 public:
  explicit BlobStore(std::filesystem::path root);

  /// Idempotent; files are written to a temporary name and renamed.
  Hash256 put(std::string_view bytes);
  std::optional<std::string> get(const Hash256& address) const;
  bool contains(const Hash256& address) const;
  std::filesystem::path path_for(const Hash256& address) const;

 private:
  std::filesystem::path root_;
};

}  // namespace hps
