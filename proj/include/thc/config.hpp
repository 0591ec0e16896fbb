#pragma once

// Flat JSON run configuration. Every key has a built-in default; a config
// file and then `--param key=value` overrides are layered on top.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "thc/bridge.hpp"
#include "thc/fpe.hpp"
#include "thc/model.hpp"
#include "thc/montecarlo.hpp"

namespace thc {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message)
      : std::runtime_error(key.empty() ? message : "config key '" + key + "': " + message),
        key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  // model
  std::string drift = "cessi";  // cessi | zero | ou | double_well
  std::optional<double> f_bar;  // nondimensional overrides
  std::optional<double> mu2;
  std::optional<double> alpha;
  DimensionalParams dimensional;  // times in seconds
  double ou_rate = 1.0;
  double dw_a = 1.0;
  double dw_b = 1.0;

  // grids
  double y_min = -1.0;
  double y_max = 2.5;
  std::size_t n_cells = 800;
  double t_end = 10.0;
  std::size_t n_steps = 4000;

  // noise and bridge
  double epsilon = 0.2;
  std::vector<double> eps_list;  // empty -> default sweep 0.18..0.30
  double y_start = 0.2402;
  double y_end = 1.0687;
  double jump_threshold = kDefaultJumpThreshold;
  BackwardFactor backward_factor = BackwardFactor::kolmogorov;
  Refinement refinement = Refinement::quadratic_subgrid;

  // Monte Carlo
  std::uint64_t seed = 20200101;
  std::size_t n_paths = 100000;
  double dt_sde = 1e-3;
  bool reflect = true;
  std::vector<double> mc_times;  // empty -> {t_end}
  std::optional<double> hit_y;   // empty -> middle equilibrium
  double hit_t = 5.0;
  double hit_window = 0.05;

  // output
  std::size_t dump_every = 1;
  std::string surface_format = "csv";  // csv | binary
  bool require_jump = false;
  std::vector<std::string> checks;  // empty -> all
  unsigned threads = 0;

  /// Keys set by a file or an override (as opposed to defaults).
  std::vector<std::string> explicit_keys;

  bool is_explicit(const std::string& key) const;

  SpatialGrid spatial_grid() const;
  TimeGrid time_grid() const;
  BridgeSpec bridge_spec() const { return {y_start, y_end, t_end}; }
  EnsembleConfig ensemble() const;
  /// eps_list, or 0.18, 0.19, ..., 0.30 when none was given.
  std::vector<double> sweep_list() const;

  /// F_bar and mu2: explicit values win; otherwise derived from the
  /// dimensional constants when f_flux was given; otherwise 1.1 and 6.2.
  NondimensionalParams nondimensional() const;
  DriftModel drift_model() const;

  nlohmann::json to_json() const;
};

/// Builds a config from a flat JSON object. Unknown keys and type errors
/// throw ConfigError naming the key.
RunConfig config_from_json(const nlohmann::json& j);

/// Parses `key=value`. The value is read as JSON when it parses, otherwise
/// as a string. Throws ConfigError on a missing '='.
std::pair<std::string, nlohmann::json> parse_override(const std::string& text);

/// Reads the file (if any), applies overrides in order, validates.
RunConfig load_config(const std::optional<std::string>& path,
                      const std::vector<std::string>& overrides);

/// "lo:hi:step" ranges, comma lists or JSON arrays.
std::vector<double> parse_eps_list(const nlohmann::json& value);

}  // namespace thc
