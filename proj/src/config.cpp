#include "hyperpubsub/config.hpp"

#include <charconv>
#include <fstream>

#include "hyperpubsub/error.hpp"

namespace hps {

void GatewayConfig::validate() const {
  parse_listen(listen);
  if (session_ttl.count() <= 0) throw Error(Errc::bad_config, "session_ttl must be positive");
  if (max_image_bytes == 0) throw Error(Errc::bad_config, "max_image_bytes must be positive");
  if (categories.empty()) throw Error(Errc::bad_config, "at least one category is required");
  for (const auto& c : categories) {
    if (c.empty() || c.find(',') != std::string::npos) throw Error(Errc::bad_config, "bad category '" + c + "'");
  }
  if (buy_retries < 0) throw Error(Errc::bad_config, "buy_retries must not be negative");
  if (commit_timeout == 0) throw Error(Errc::bad_config, "commit_timeout must be positive");
}

GatewayConfig GatewayConfig::from_json(const nlohmann::json& j) {
  GatewayConfig c;
  try {
    c.listen = j.value("listen", c.listen);
    c.blob_dir = j.value("blob_dir", c.blob_dir.string());
    c.session_ttl = std::chrono::seconds(j.value("session_ttl", c.session_ttl.count()));
    c.max_image_bytes = j.value("max_image_bytes", c.max_image_bytes);
    c.categories = j.value("categories", c.categories);
    c.buy_retries = j.value("buy_retries", c.buy_retries);
    c.commit_timeout = j.value("commit_timeout", c.commit_timeout);
    if (j.contains("subscriptions_file") && !j.at("subscriptions_file").is_null()) {
      c.subscriptions_file = j.at("subscriptions_file").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::bad_config, std::string("gateway config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json GatewayConfig::to_json() const {
  nlohmann::json j{{"listen", listen},
                   {"blob_dir", blob_dir.string()},
                   {"session_ttl", session_ttl.count()},
                   {"max_image_bytes", max_image_bytes},
                   {"categories", categories},
                   {"buy_retries", buy_retries},
                   {"commit_timeout", commit_timeout}};
  j["subscriptions_file"] = subscriptions_file ? nlohmann::json(subscriptions_file->string()) : nlohmann::json(nullptr);
  return j;
}

std::pair<std::string, int> parse_listen(std::string_view listen) {
  auto colon = listen.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(Errc::bad_config, "listen address must be host:port");
  }
  int port = -1;
  auto digits = listen.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || port < 0 || port > 65535) {
    throw Error(Errc::bad_config, "bad port in '" + std::string(listen) + "'");
  }
  return {std::string(listen.substr(0, colon)), port};
}

AppConfig AppConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::bad_config, "config must be an object");
  AppConfig c;
  if (j.contains("network")) c.network = NetworkConfig::from_json(j.at("network"));
  if (j.contains("gateway")) c.gateway = GatewayConfig::from_json(j.at("gateway"));
  c.network.validate();
  return c;
}

AppConfig AppConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::io_error, "cannot read " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::bad_config, file.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json AppConfig::to_json() const { return {{"network", network.to_json()}, {"gateway", gateway.to_json()}}; }

}  // namespace hps
