// hpsctl: bring up a simulated network, run scenarios, inspect chains and
// inject faults.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "hyperpubsub/builtins.hpp"
#include "hyperpubsub/config.hpp"
#include "hyperpubsub/error.hpp"
#include "hyperpubsub/gateway.hpp"
#include "hyperpubsub/http_server.hpp"
#include "hyperpubsub/scenario.hpp"

using namespace hps;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
};

AppConfig load(const Common& c) {
  AppConfig cfg = c.config.empty() ? AppConfig{} : AppConfig::load(c.config);
  if (c.seed) cfg.network.simnet.seed = *c.seed;
  return cfg;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON config file {network, gateway}");
  cmd->add_option("--seed", c.seed, "simulation seed (overrides the config)");
}

int net_up(const Common& c) {
  auto cfg = load(c);
  Network net(cfg.network);
  net.run_until([&] { return net.leader().has_value(); }, 10000);
  nlohmann::json heights = nlohmann::json::object(), genesis = nlohmann::json::object();
  for (const auto& ch : cfg.network.channels) {
    heights[ch] = net.anchor().ledger(ch).height();
    genesis[ch] = crypto::to_hex(compute_block_hash(net.anchor().ledger(ch).get_block(0).header));
  }
  auto leader = net.leader();
  nlohmann::json out{{"endorsers", cfg.network.endorsers},
                     {"orderers", cfg.network.orderers},
                     {"leader", leader ? nlohmann::json(net.target_name(*leader)) : nlohmann::json(nullptr)},
                     {"tick", net.now()},
                     {"heights", heights},
                     {"genesis", genesis},
                     {"trace", crypto::to_hex(net.net().trace_digest())}};
  std::cout << out.dump(2) << "\n";
  return leader ? 0 : 1;
}

int run_scenario_cmd(const Common& c, const std::string& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::io_error, "cannot read " + file);
  auto scenario = nlohmann::json::parse(in);
  auto cfg = load(c);
  Gateway gateway(cfg.network, cfg.gateway);
  auto report = run_scenario(gateway, scenario);
  for (const auto& line : report.log) std::cout << line << "\n";
  if (report.passed) {
    std::cout << "PASS state_digest=" << report.state_digest << "\n";
    return 0;
  }
  std::cout << "FAIL step " << *report.failed_step << ": " << report.reason << "\n";
  return 1;
}

int inspect(const Common& c, const std::string& data_dir_opt, const std::string& peer, const std::string& channel,
            std::uint64_t from, std::optional<std::uint64_t> to) {
  auto cfg = load(c);
  const auto& chans = cfg.network.channels;
  if (std::find(chans.begin(), chans.end(), channel) == chans.end()) {
    throw Error(Errc::unknown_channel, "unknown channel '" + channel + "'");
  }
  std::filesystem::path dir = data_dir_opt.empty() ? cfg.network.data_dir.value_or("") : std::filesystem::path(data_dir_opt);
  if (dir.empty()) throw Error(Errc::bad_config, "no data_dir given");
  auto file = dir / peer / (channel + ".blocks");
  if (!std::filesystem::exists(file)) throw Error(Errc::io_error, "no block file " + file.string());
  Ledger ledger(channel, file);
  ledger.verify_chain();
  for (const auto& s : ledger.inspect(from, to.value_or(ledger.height()))) std::cout << format_summary(s) << "\n";
  std::cout << "chain ok height=" << ledger.height() << " tip=" << crypto::to_hex(ledger.tip_hash()) << "\n";
  return 0;
}

std::pair<raft::Tick, raft::Tick> parse_window(const std::string& w) {
  auto colon = w.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(w);
    return {std::stoull(w.substr(0, colon)), std::stoull(w.substr(colon + 1))};
  } catch (const std::logic_error&) {
    throw Error(Errc::bad_config, "window must be start:end ticks");
  }
}

int inject_fault(const Common& c, const std::string& kind, const std::string& target, const std::string& window,
                 double probability, std::size_t txs) {
  auto cfg = load(c);
  auto [start, end] = parse_window(window);
  if (end <= start) throw Error(Errc::bad_config, "window end must follow its start");
  if (kind != "partition" && kind != "crash" && kind != "drop") {
    throw Error(Errc::bad_config, "fault kind must be partition, crash or drop");
  }
  Network net(cfg.network);
  auto resolve = [&]() -> raft::NodeId {
    if (target == "leader") {
      net.run_until([&] { return net.leader().has_value(); }, 10000);
      auto l = net.leader();
      if (!l) throw Error(Errc::unavailable, "no leader elected");
      return *l;
    }
    return net.resolve_target(target);
  };
  if (kind != "drop") resolve();
  auto report = [&](const char* label) {
    std::cout << "tick " << net.now() << " " << label << ":";
    for (const auto& p : net.peers()) {
      std::cout << " " << net.target_name(p->node()) << "=" << p->ledger(ChannelId(kAdminChannel)).height();
    }
    std::cout << "\n";
  };
  std::optional<raft::NodeId> node;
  bool applied = false, lifted = false;
  std::size_t sent = 0, refused = 0;
  const raft::Tick horizon = end + 3000;
  while (net.now() < horizon) {
    if (!applied && net.now() >= start) {
      applied = true;
      if (kind == "drop") {
        net.set_drop_probability(probability);
      } else {
        node = resolve();
        if (kind == "crash") net.crash(*node);
        else net.partition({*node}, net.now(), end);
      }
      report("fault applied");
    }
    if (applied && !lifted && net.now() >= end) {
      lifted = true;
      if (kind == "drop") net.set_drop_probability(0.0);
      else if (kind == "crash") net.restart(*node);
      else net.heal();
      report("fault lifted");
    }
    if (sent < txs && net.now() % 100 == 0) {
      auto tx = net.endorse(net.admin(), ChannelId(kAdminChannel), "put_config",
                            market::args::put_config("load" + std::to_string(sent), std::to_string(net.now())));
      ++sent;
      try {
        net.submit(tx, 0);
      } catch (const Error& e) {
        if (e.code() != Errc::unavailable) throw;
        ++refused;
      }
    }
    net.step();
  }
  report("end");
  std::set<std::pair<std::uint64_t, std::string>> tips;
  for (const auto& p : net.peers()) {
    const auto& l = p->ledger(ChannelId(kAdminChannel));
    tips.insert({l.height(), crypto::to_hex(l.tip_hash())});
  }
  bool converged = tips.size() == 1;
  std::cout << "submitted " << sent << " transactions, " << refused << " refused without a leader\n";
  std::cout << (converged ? "converged" : "diverged") << "\n";
  return converged ? 0 : 1;
}

int serve(const Common& c, const std::string& listen_opt) {
  auto cfg = load(c);
  auto [host, port] = parse_listen(listen_opt.empty() ? cfg.gateway.listen : listen_opt);
  Gateway gateway(cfg.network, cfg.gateway);
  HttpServer server(gateway);
  std::cout << "listening on " << host << ":" << port << std::endl;
  server.run(host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HyperPubSub network control"};
  app.require_subcommand(1);

  Common up_opts, run_opts, inspect_opts, fault_opts, serve_opts;
  auto* up = app.add_subcommand("net-up", "start a network, elect a leader and print its summary");
  add_common(up, up_opts);

  auto* run = app.add_subcommand("run-scenario", "run a scenario file through the HTTP gateway");
  add_common(run, run_opts);
  std::string scenario_file;
  run->add_option("file", scenario_file, "scenario JSON")->required();

  auto* insp = app.add_subcommand("inspect", "print block summaries of a persisted channel");
  add_common(insp, inspect_opts);
  std::string channel, data_dir, peer = "peer0";
  std::uint64_t from = 0;
  std::optional<std::uint64_t> to;
  insp->add_option("--channel", channel, "channel id")->required();
  insp->add_option("--from", from, "first block");
  insp->add_option("--to", to, "end block (exclusive)");
  insp->add_option("--data-dir", data_dir, "data directory (defaults to the config's)");
  insp->add_option("--peer", peer, "peer whose copy to read");

  auto* fault = app.add_subcommand("inject-fault", "run load through a simulated fault and report convergence");
  add_common(fault, fault_opts);
  std::string kind, target = "leader", window = "500:2000";
  double probability = 0.05;
  std::size_t txs = 40;
  fault->add_option("--kind", kind, "partition | crash | drop")->required();
  fault->add_option("--target", target, "node name or 'leader'");
  fault->add_option("--window", window, "start:end ticks");
  fault->add_option("--probability", probability, "drop probability for kind=drop");
  fault->add_option("--txs", txs, "transactions to submit");

  auto* srv = app.add_subcommand("serve", "serve the HTTP gateway");
  add_common(srv, serve_opts);
  std::string listen;
  srv->add_option("--listen", listen, "host:port");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*up) return net_up(up_opts);
    if (*run) return run_scenario_cmd(run_opts, scenario_file);
    if (*insp) return inspect(inspect_opts, data_dir, peer, channel, from, to);
    if (*fault) return inject_fault(fault_opts, kind, target, window, probability, txs);
    if (*srv) return serve(serve_opts, listen);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
