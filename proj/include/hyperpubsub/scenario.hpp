#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperpubsub/gateway.hpp"

namespace hps {

struct ScenarioReport {
  bool passed = true;
  std::optional<std::size_t> failed_step;  // zero-based
  std::string reason;
  std::vector<std::string> log;
  std::string state_digest;  // hex, over every peer's chains and state

  nlohmann::json to_json() const;
};

/// Runs {"steps": [...]} against the gateway through its HTTP surface on an
/// ephemeral local port. Steps (field "op"):
///   register, login, logout, mint, publish, subscribe, buy, poll, download,
///   wallet, list, assert-state, partition, heal, crash-node, restart-node,
///   set-drop, advance-ticks
/// HTTP steps accept "expect_status"; stops at the first failing step.
ScenarioReport run_scenario(Gateway& gateway, const nlohmann::json& scenario);

/// Deterministic filler bytes behind a real magic number ("png", "jpeg",
/// "gif"); used for scenario uploads.
std::string synthetic_image(std::string_view format, std::size_t size, std::uint64_t seed);

}  // namespace hps
