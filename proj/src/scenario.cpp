#include "hyperpubsub/scenario.hpp"

#include <map>
#include <random>
#include <set>

#include <httplib.h>

#include "hyperpubsub/builtins.hpp"
#include "hyperpubsub/error.hpp"
#include "hyperpubsub/http_server.hpp"

namespace hps {
namespace {

struct StepFailure {
  std::string reason;
};

struct Reply {
  int status = 0;
  std::string body;
  nlohmann::json json() const { return nlohmann::json::parse(body, nullptr, false); }
};

struct Photo {
  std::string id;
  std::string bytes;
};

class Runner {
 public:
  Runner(Gateway& gw, int port) : gw_(gw), cli_("127.0.0.1", port) {
    cli_.set_read_timeout(120, 0);
    cli_.set_write_timeout(120, 0);
  }

  std::string run_step(const nlohmann::json& step);

 private:
  Reply call(const std::string& method, const std::string& path, const std::string& token,
             const nlohmann::json* body = nullptr) {
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    httplib::Result res;
    if (method == "GET") {
      res = cli_.Get(path, headers);
    } else {
      res = cli_.Post(path, headers, body ? body->dump() : std::string("{}"), "application/json");
    }
    if (!res) throw StepFailure{"HTTP request failed: " + httplib::to_string(res.error())};
    return {res->status, res->body};
  }

  const std::string& token(const nlohmann::json& step) {
    auto name = step.value("as", std::string("admin"));
    auto it = tokens_.find(name);
    if (it == tokens_.end()) throw StepFailure{"actor '" + name + "' has not logged in"};
    return it->second;
  }

  const Photo& photo(const nlohmann::json& step) {
    auto label = step.value("photo", std::string("photo"));
    auto it = photos_.find(label);
    if (it == photos_.end()) throw StepFailure{"no photo labelled '" + label + "'"};
    return it->second;
  }

  static void expect(const nlohmann::json& step, const Reply& r, int fallback) {
    int want = step.value("expect_status", fallback);
    if (r.status != want) {
      throw StepFailure{"expected HTTP " + std::to_string(want) + ", got " + std::to_string(r.status) + " " + r.body};
    }
  }

  static void expect_balance(const nlohmann::json& step, const nlohmann::json& body) {
    if (!step.contains("expect_balance")) return;
    auto want = step.at("expect_balance").get<std::uint64_t>();
    auto got = body.value("balance", std::uint64_t{0});
    if (got != want) throw StepFailure{"balance " + std::to_string(got) + ", expected " + std::to_string(want)};
  }

  std::vector<std::string> photo_ids(const nlohmann::json& labels) {
    std::vector<std::string> out;
    for (const auto& l : labels) {
      auto it = photos_.find(l.get<std::string>());
      if (it == photos_.end()) throw StepFailure{"no photo labelled '" + l.get<std::string>() + "'"};
      out.push_back(it->second.id);
    }
    return out;
  }

  raft::NodeId resolve(const std::string& target) {
    return gw_.with_network([&](Network& net) -> raft::NodeId {
      if (target == "leader") {
        auto l = net.leader();
        if (!l) throw StepFailure{"no leader to target"};
        return *l;
      }
      if (target == "crashed") {
        if (!last_crashed_) throw StepFailure{"nothing was crashed"};
        return *last_crashed_;
      }
      return net.resolve_target(target);
    });
  }

  Gateway& gw_;
  httplib::Client cli_;
  std::map<std::string, std::string> tokens_;
  std::map<std::string, Photo> photos_;
  std::optional<raft::NodeId> last_crashed_;
};

std::string Runner::run_step(const nlohmann::json& step) {
  auto op = step.at("op").get<std::string>();
  if (op == "register") {
    nlohmann::json body{{"name", step.at("name")},
                        {"credential", step.value("credential", step.at("name").get<std::string>())},
                        {"role", step.value("role", std::string("customer"))}};
    if (step.contains("display_name")) body["display_name"] = step.at("display_name");
    auto r = call("POST", "/register", "", &body);
    expect(step, r, 201);
    return "registered " + step.at("name").get<std::string>();
  }
  if (op == "login") {
    auto name = step.at("name").get<std::string>();
    nlohmann::json body{{"name", name}, {"credential", step.value("credential", name)}};
    auto r = call("POST", "/login", "", &body);
    expect(step, r, 200);
    if (r.status == 200) tokens_[name] = r.json().at("token").get<std::string>();
    return "logged in " + name;
  }
  if (op == "logout") {
    auto r = call("POST", "/logout", token(step));
    expect(step, r, 200);
    return "logged out";
  }
  if (op == "mint") {
    nlohmann::json body{{"recipient", step.at("recipient")}, {"amount", step.at("amount")}};
    auto r = call("POST", "/admin/mint", token(step), &body);
    expect(step, r, 200);
    if (r.status == 200) expect_balance(step, r.json());
    return "minted " + step.at("amount").dump() + " to " + step.at("recipient").get<std::string>();
  }
  if (op == "publish") {
    const auto& img = step.contains("image") ? step.at("image") : nlohmann::json::object();
    auto bytes = synthetic_image(img.value("format", std::string("png")), img.value("size", std::size_t{4096}),
                                 img.value("seed", std::uint64_t{1}));
    nlohmann::json body{{"image", crypto::to_base64(bytes)},
                        {"title", step.value("title", std::string())},
                        {"categories", step.at("categories")},
                        {"prices", step.at("prices")}};
    auto r = call("POST", "/photos", token(step), &body);
    expect(step, r, 201);
    auto label = step.value("label", std::string("photo"));
    if (r.status == 201) photos_[label] = {r.json().at("photo_id").get<std::string>(), bytes};
    return "published " + label;
  }
  if (op == "subscribe") {
    nlohmann::json body{{"topic", step.at("topic")}};
    auto r = call("POST", "/subscriptions", token(step), &body);
    expect(step, r, 200);
    return "subscribed to " + step.at("topic").get<std::string>();
  }
  if (op == "buy") {
    const auto& p = photo(step);
    nlohmann::json body{{"photo_id", p.id}, {"tier", step.value("tier", std::string("personal"))}};
    auto r = call("POST", "/buy", token(step), &body);
    expect(step, r, 200);
    if (r.status == 200) expect_balance(step, r.json());
    return "bought " + step.value("photo", std::string("photo"));
  }
  if (op == "poll") {
    auto path = "/subscriptions?topic=" + httplib::detail::encode_query_param(step.at("topic").get<std::string>());
    if (step.contains("cursor")) path += "&cursor=" + std::to_string(step.at("cursor").get<std::uint64_t>());
    auto r = call("GET", path, token(step));
    expect(step, r, 200);
    if (r.status != 200) return "poll refused";
    std::vector<std::string> got;
    auto doc = r.json();
    for (const auto& e : doc.at("events")) got.push_back(e.at("photo_id").get<std::string>());
    if (step.contains("expect_photos") && got != photo_ids(step.at("expect_photos"))) {
      throw StepFailure{"poll returned " + nlohmann::json(got).dump()};
    }
    if (step.contains("expect_count") && got.size() != step.at("expect_count").get<std::size_t>()) {
      throw StepFailure{"poll returned " + std::to_string(got.size()) + " events"};
    }
    return "polled " + std::to_string(got.size()) + " events";
  }
  if (op == "download") {
    const auto& p = photo(step);
    auto r = call("GET", "/download/" + p.id, token(step));
    expect(step, r, 200);
    if (r.status == 200 && r.body != p.bytes) throw StepFailure{"downloaded bytes differ from the upload"};
    return "downloaded " + std::to_string(r.body.size()) + " bytes";
  }
  if (op == "wallet") {
    auto r = call("GET", "/wallet", token(step));
    expect(step, r, 200);
    if (r.status == 200) expect_balance(step, r.json());
    return "wallet " + r.body;
  }
  if (op == "list") {
    auto path = "/photos?category=" + httplib::detail::encode_query_param(step.value("category", std::string()));
    auto r = call("GET", path, token(step));
    expect(step, r, 200);
    std::vector<std::string> got;
    if (r.status == 200) {
      auto doc = r.json();
      for (const auto& p : doc.at("photos")) got.push_back(p.at("photo_id").get<std::string>());
    }
    if (step.contains("expect_photos")) {
      auto want = photo_ids(step.at("expect_photos"));
      if (std::set(got.begin(), got.end()) != std::set(want.begin(), want.end())) {
        throw StepFailure{"listing returned " + nlohmann::json(got).dump()};
      }
    }
    return "listed " + std::to_string(got.size()) + " photos";
  }
  if (op == "assert-state") {
    gw_.with_network([&](Network& net) {
      const auto& e3 = net.anchor().ledger(ChannelId(kTradesChannel));
      if (step.contains("balances")) {
        for (const auto& [name, want] : step.at("balances").items()) {
          auto raw = e3.get_state(market::wallet_key(name));
          auto got = raw ? market::decode_amount(raw->value) : 0;
          if (got != want.get<std::uint64_t>()) {
            throw StepFailure{"balance of " + name + " is " + std::to_string(got) + ", expected " + want.dump()};
          }
        }
      }
      if (step.contains("grants")) {
        for (const auto& g : step.at("grants")) {
          auto buyer = g.at(0).get<std::string>();
          auto label = g.at(1).get<std::string>();
          auto it = photos_.find(label);
          if (it == photos_.end() || !e3.get_state(market::grant_key(buyer, it->second.id))) {
            throw StepFailure{"no grant for " + buyer + " on " + label};
          }
        }
      }
      if (step.value("converged", false)) {
        for (const auto& ch : net.config().channels) {
          const auto& first = net.anchor().ledger(ch);
          for (const auto& p : net.peers()) {
            if (!p->up()) continue;
            const auto& l = p->ledger(ch);
            if (l.height() != first.height() || l.tip_hash() != first.tip_hash()) {
              throw StepFailure{"peers disagree on channel " + ch};
            }
          }
        }
      }
    });
    return "state as expected";
  }
  if (op == "partition") {
    std::set<raft::NodeId> group;
    for (const auto& t : step.at("group")) group.insert(resolve(t.get<std::string>()));
    gw_.with_network([&](Network& net) {
      auto ticks = step.value("ticks", raft::Tick{1} << 40);
      net.partition(group, net.now(), net.now() + ticks);
    });
    return "partitioned " + std::to_string(group.size()) + " nodes";
  }
  if (op == "heal") {
    gw_.with_network([](Network& net) { net.heal(); });
    return "healed";
  }
  if (op == "crash-node") {
    auto node = resolve(step.at("target").get<std::string>());
    gw_.with_network([&](Network& net) { net.crash(node); });
    last_crashed_ = node;
    return "crashed node " + std::to_string(node);
  }
  if (op == "restart-node") {
    auto node = resolve(step.value("target", std::string("crashed")));
    gw_.with_network([&](Network& net) { net.restart(node); });
    return "restarted node " + std::to_string(node);
  }
  if (op == "set-drop") {
    auto p = step.at("probability").get<double>();
    if (p < 0.0 || p >= 1.0) throw StepFailure{"drop probability must be in [0, 1)"};
    gw_.with_network([&](Network& net) { net.set_drop_probability(p); });
    return "drop probability " + std::to_string(p);
  }
  if (op == "advance-ticks") {
    auto ticks = step.at("ticks").get<raft::Tick>();
    gw_.with_network([&](Network& net) { net.advance(ticks); });
    return "advanced " + std::to_string(ticks) + " ticks";
  }
  throw StepFailure{"unknown op '" + op + "'"};
}

}  // namespace

nlohmann::json ScenarioReport::to_json() const {
  nlohmann::json j{{"passed", passed}, {"log", log}, {"state_digest", state_digest}};
  if (failed_step) {
    j["failed_step"] = *failed_step;
    j["reason"] = reason;
  }
  return j;
}

std::string synthetic_image(std::string_view format, std::size_t size, std::uint64_t seed) {
  std::string magic;
  if (format == "png") {
    magic = "\x89PNG\r\n\x1a\n";
  } else if (format == "jpeg") {
    magic = "\xff\xd8\xff\xe0";
  } else if (format == "gif") {
    magic = "GIF89a";
  } else {
    throw Error(Errc::malformed, "unknown image format '" + std::string(format) + "'");
  }
  std::string out = magic;
  std::mt19937_64 rng(seed);
  while (out.size() < size) out.push_back(static_cast<char>(rng() & 0xff));
  return out;
}

ScenarioReport run_scenario(Gateway& gateway, const nlohmann::json& scenario) {
  if (!scenario.is_object() || !scenario.contains("steps") || !scenario.at("steps").is_array()) {
    throw Error(Errc::malformed, "scenario must be an object with a 'steps' list");
  }
  ScenarioReport report;
  HttpServer server(gateway);
  int port = server.start("127.0.0.1", 0);
  Runner runner(gateway, port);
  const auto& steps = scenario.at("steps");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    try {
      report.log.push_back("step " + std::to_string(i) + ": " + runner.run_step(steps[i]));
    } catch (const StepFailure& f) {
      report.reason = f.reason;
    } catch (const std::exception& e) {
      report.reason = e.what();
    }
    if (!report.reason.empty()) {
      report.passed = false;
      report.failed_step = i;
      report.log.push_back("step " + std::to_string(i) + " failed: " + report.reason);
      break;
    }
  }
  server.stop();
  report.state_digest = crypto::to_hex(gateway.with_network([](Network& net) { return net.state_digest(); }));
  return report;
}

}  // namespace hps
