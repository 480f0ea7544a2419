#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperpubsub/network.hpp"

namespace hps {

struct GatewayConfig {
  std::string listen = "127.0.0.1:8080";
  /// Empty: a fresh directory under the system temp dir.
  std::filesystem::path blob_dir;
  std::chrono::seconds session_ttl{3600};
  std::size_t max_image_bytes = 25u * 1024 * 1024;
  /// Category whitelist, stored on the admin channel at bootstrap.
  std::vector<std::string> categories = {"nature", "sport", "human", "animal"};
  int buy_retries = 2;
  /// Ticks a request may drive the network while waiting for its commit.
  raft::Tick commit_timeout = 20000;
  std::optional<std::filesystem::path> subscriptions_file;

  /// Throws Errc::bad_config.
  void validate() const;
  static GatewayConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

/// Splits "host:port"; throws Errc::bad_config.
std::pair<std::string, int> parse_listen(std::string_view listen);

/// Config file: {"network": {...}, "gateway": {...}}; both optional.
struct AppConfig {
  NetworkConfig network;
  GatewayConfig gateway;

  static AppConfig from_json(const nlohmann::json& j);
  /// Throws Errc::bad_config, Errc::io_error.
  static AppConfig load(const std::filesystem::path& file);
  nlohmann::json to_json() const;
};

}  // namespace hps
