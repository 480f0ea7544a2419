#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "hyperpubsub/blob_store.hpp"
#include "hyperpubsub/config.hpp"
#include "hyperpubsub/network.hpp"
#include "hyperpubsub/pubsub.hpp"

namespace hps {

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string bearer;
  std::string body;
};

/// JSON body unless `bytes` is set (downloads).
struct ApiResponse {
  int status = 200;
  nlohmann::json body = nlohmann::json::object();
  std::optional<std::string> bytes;
  std::string content_type = "application/json";
};

/// HTTP status an error code maps to.
int http_status(Errc code);

/// Sniffs common raster formats; nullopt for anything else.
std::optional<std::string> image_content_type(std::string_view bytes);

/// Gateway core behind the HTTP surface: authenticates clients, stores
/// blobs and drives chaincode transactions through the network. Requests
/// may be handled concurrently; the network is advanced under one lock that
/// is released between waiting rounds.
class Gateway {
 public:
  Gateway(NetworkConfig network, GatewayConfig config);

  ApiResponse handle(const ApiRequest& request);

  /// Runs `fn(Network&)` under the network lock.
  template <class F>
  auto with_network(F&& fn) {
    std::lock_guard lock(mu_);
    return fn(*net_);
  }

  const GatewayConfig& config() const { return config_; }
  const Signer& service() const { return service_; }
  pubsub::Broker& broker() { return broker_; }
  BlobStore& blobs() { return blobs_; }

 private:
  ApiResponse do_register(const nlohmann::json& body);
  ApiResponse do_login(const nlohmann::json& body);
  ApiResponse do_logout(const ApiRequest& request);
  ApiResponse do_upload(const Identity& caller, const nlohmann::json& body);
  ApiResponse do_list(const Identity& caller, const std::string& category);
  ApiResponse do_buy(const Identity& caller, const nlohmann::json& body);
  ApiResponse do_download(const Identity& caller, const std::string& photo_id);
  ApiResponse do_mint(const Identity& caller, const nlohmann::json& body);
  ApiResponse do_wallet(const Identity& caller);
  ApiResponse do_subscribe(const Identity& caller, const nlohmann::json& body);
  ApiResponse do_poll(const Identity& caller, const ApiRequest& request);
  ApiResponse do_status();

  Identity authenticate(const ApiRequest& request) const;
  /// Endorses, submits and waits for the commit, releasing the lock while
  /// the network runs.
  InvokeResult drive(const Signer& client, const ChannelId& channel, const std::string& function,
                     std::vector<std::string> args);
  ExecutionResult query(const Identity& caller, const ChannelId& channel, const std::string& function,
                        std::vector<std::string> args);
  nlohmann::json photo_listing(const Identity& caller, const std::string& category);
  void save_subscriptions();

  GatewayConfig config_;
  std::mutex mu_;
  std::mutex save_mu_;
  std::unique_ptr<Network> net_;
  BlobStore blobs_;
  pubsub::Broker broker_;
  Signer service_;
};

}  // namespace hps
