#pragma once

// Self-checks run by the `validate` subcommand: conservation, analytic
// oracles and Monte Carlo cross-checks against the configured solver setup.

#include <string>
#include <vector>

#include <json.hpp>

#include "thc/config.hpp"

namespace thc {

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

/// Names accepted by `run_checks`, in execution order.
const std::vector<std::string>& check_names();

/// Runs the checks named in cfg.checks (all when empty). Unknown names throw
/// ConfigError. A check whose solver throws is reported as failed.
std::vector<CheckResult> run_checks(const RunConfig& cfg);

nlohmann::json to_json(const std::vector<CheckResult>& results);

}  // namespace thc
