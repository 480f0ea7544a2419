#include "hyperpubsub/blob_store.hpp"

#include <fstream>
#include <iterator>

#include "hyperpubsub/crypto.hpp"
#include "hyperpubsub/error.hpp"

namespace hps {

BlobStore::BlobStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::filesystem::path BlobStore::path_for(const Hash256& address) const {
  auto hex = crypto::to_hex(address);
  return root_ / hex.substr(0, 2) / hex;
}

Hash256 BlobStore::put(std::string_view bytes) {
  auto address = crypto::sha256(bytes);
  auto target = path_for(address);
  if (std::filesystem::exists(target)) return address;
  std::filesystem::create_directories(target.parent_path());
  auto tmp = target;
  tmp += ".tmp-" + crypto::to_hex(crypto::random_bytes(8));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(Errc::io_error, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::io_error, "cannot store blob " + crypto::to_hex(address));
  }
  return address;
}

std::optional<std::string> BlobStore::get(const Hash256& address) const {
  std::ifstream in(path_for(address), std::ios::binary);
  if (!in) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(in), {});
}

bool BlobStore::contains(const Hash256& address) const { return std::filesystem::exists(path_for(address)); }

}  // namespace hps
