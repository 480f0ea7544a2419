#include "hyperpubsub/http_server.hpp"

#include <httplib.h>

#include "hyperpubsub/error.hpp"

namespace hps {
namespace {

ApiRequest to_api(const httplib::Request& req) {
  ApiRequest out;
  out.method = req.method;
  out.path = req.path;
  for (const auto& [k, v] : req.params) out.query.emplace(k, v);
  auto auth = req.get_header_value("Authorization");
  if (auth.starts_with("Bearer ")) out.bearer = auth.substr(7);
  out.body = req.body;
  return out;
}

}  // namespace

HttpServer::HttpServer(Gateway& gateway) : gateway_(gateway), server_(std::make_unique<httplib::Server>()) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    auto r = gateway_.handle(to_api(req));
    res.status = r.status;
    if (r.bytes) {
      res.set_content(*r.bytes, r.content_type);
    } else {
      res.set_content(r.body.dump(), "application/json");
    }
  };
  server_->Get(".*", handler);
  server_->Post(".*", handler);
  server_->Put(".*", handler);
  server_->Delete(".*", handler);
  server_->set_payload_max_length(gateway_.config().max_image_bytes / 3 * 4 + (1u << 20));
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error(Errc::io_error, "cannot listen on " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void HttpServer::run(const std::string& host, int port) {
  port_ = port;
  if (!server_->listen(host, port)) throw Error(Errc::io_error, "cannot listen on " + host + ":" + std::to_string(port));
}

void HttpServer::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace hps
