#include "thc/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "thc/validation.hpp"

namespace thc {

using nlohmann::json;

namespace {

using Setter = std::function<void(RunConfig&, const json&)>;

double as_number(const json& v) {
  if (!v.is_number()) throw json::type_error::create(302, "expected a number", nullptr);
  return v.get<double>();
}

std::size_t as_count(const json& v) {
  const double d = as_number(v);
  if (d < 0 || d != std::floor(d)) throw json::type_error::create(302, "expected a non-negative integer", nullptr);
  return static_cast<std::size_t>(d);
}

bool as_bool(const json& v) {
  if (v.is_boolean()) return v.get<bool>();
  if (v.is_number_integer()) return v.get<long long>() != 0;
  throw json::type_error::create(302, "expected a boolean", nullptr);
}

std::vector<double> as_number_list(const json& v) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw json::type_error::create(302, "expected a list of numbers", nullptr);
  std::vector<double> out;
  for (const auto& x : v) out.push_back(as_number(x));
  return out;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"drift", [](RunConfig& c, const json& v) { c.drift = v.get<std::string>(); }},
      {"f_bar", [](RunConfig& c, const json& v) { c.f_bar = as_number(v); }},
      {"mu2", [](RunConfig& c, const json& v) { c.mu2 = as_number(v); }},
      {"alpha", [](RunConfig& c, const json& v) { c.alpha = as_number(v); }},
      {"t0", [](RunConfig& c, const json& v) { c.dimensional.t0_reference_temperature = as_number(v); }},
      {"s0", [](RunConfig& c, const json& v) { c.dimensional.s0_reference_salinity = as_number(v); }},
      {"rho0", [](RunConfig& c, const json& v) { c.dimensional.rho0_reference_density = as_number(v); }},
      {"t_d_years",
       [](RunConfig& c, const json& v) { c.dimensional.t_d_diffusion_time = as_number(v) * kSecondsPerYear; }},
      {"t_r_days",
       [](RunConfig& c, const json& v) { c.dimensional.t_r_relaxation_time = as_number(v) * kSecondsPerDay; }},
      {"t_a_years",
       [](RunConfig& c, const json& v) { c.dimensional.t_a_advection_time = as_number(v) * kSecondsPerYear; }},
      {"q", [](RunConfig& c, const json& v) { c.dimensional.q_transport_coefficient = as_number(v); }},
      {"alpha_s", [](RunConfig& c, const json& v) { c.dimensional.alpha_s_salinity_coefficient = as_number(v); }},
      {"alpha_t", [](RunConfig& c, const json& v) { c.dimensional.alpha_t_thermal_expansion = as_number(v); }},
      {"theta",
       [](RunConfig& c, const json& v) { c.dimensional.theta_meridional_temp_difference = as_number(v); }},
      {"h_depth", [](RunConfig& c, const json& v) { c.dimensional.h_mean_ocean_depth = as_number(v); }},
      {"volume_m3", [](RunConfig& c, const json& v) { c.dimensional.v_control_volume = as_number(v); }},
      {"f_flux", [](RunConfig& c, const json& v) { c.dimensional.f_freshwater_flux = as_number(v); }},
      {"ou_rate", [](RunConfig& c, const json& v) { c.ou_rate = as_number(v); }},
      {"dw_a", [](RunConfig& c, const json& v) { c.dw_a = as_number(v); }},
      {"dw_b", [](RunConfig& c, const json& v) { c.dw_b = as_number(v); }},
      {"y_min", [](RunConfig& c, const json& v) { c.y_min = as_number(v); }},
      {"y_max", [](RunConfig& c, const json& v) { c.y_max = as_number(v); }},
      {"n_cells", [](RunConfig& c, const json& v) { c.n_cells = as_count(v); }},
      {"t_end", [](RunConfig& c, const json& v) { c.t_end = as_number(v); }},
      {"n_steps", [](RunConfig& c, const json& v) { c.n_steps = as_count(v); }},
      {"epsilon", [](RunConfig& c, const json& v) { c.epsilon = as_number(v); }},
      {"eps_list", [](RunConfig& c, const json& v) { c.eps_list = parse_eps_list(v); }},
      {"y_start", [](RunConfig& c, const json& v) { c.y_start = as_number(v); }},
      {"y_end", [](RunConfig& c, const json& v) { c.y_end = as_number(v); }},
      {"jump_threshold", [](RunConfig& c, const json& v) { c.jump_threshold = as_number(v); }},
      {"backward_factor",
       [](RunConfig& c, const json& v) {
         const auto s = v.get<std::string>();
         if (s == "kolmogorov") {
           c.backward_factor = BackwardFactor::kolmogorov;
         } else if (s == "reversed_forward") {
           c.backward_factor = BackwardFactor::reversed_forward_density;
         } else {
           throw json::type_error::create(302, "expected kolmogorov or reversed_forward", nullptr);
         }
       }},
      {"refinement",
       [](RunConfig& c, const json& v) {
         const auto s = v.get<std::string>();
         if (s == "grid-argmax") {
           c.refinement = Refinement::grid_argmax;
         } else if (s == "quadratic-subgrid") {
           c.refinement = Refinement::quadratic_subgrid;
         } else {
           throw json::type_error::create(302, "expected grid-argmax or quadratic-subgrid", nullptr);
         }
       }},
      {"seed",
       [](RunConfig& c, const json& v) {
         if (v.is_number_unsigned() || v.is_number_integer()) {
           c.seed = v.get<std::uint64_t>();
         } else {
           c.seed = std::stoull(v.get<std::string>());
         }
       }},
      {"n_paths", [](RunConfig& c, const json& v) { c.n_paths = as_count(v); }},
      {"dt_sde", [](RunConfig& c, const json& v) { c.dt_sde = as_number(v); }},
      {"reflect", [](RunConfig& c, const json& v) { c.reflect = as_bool(v); }},
      {"mc_times", [](RunConfig& c, const json& v) { c.mc_times = as_number_list(v); }},
      {"hit_y", [](RunConfig& c, const json& v) { c.hit_y = as_number(v); }},
      {"hit_t", [](RunConfig& c, const json& v) { c.hit_t = as_number(v); }},
      {"hit_window", [](RunConfig& c, const json& v) { c.hit_window = as_number(v); }},
      {"dump_every", [](RunConfig& c, const json& v) { c.dump_every = as_count(v); }},
      {"surface_format", [](RunConfig& c, const json& v) { c.surface_format = v.get<std::string>(); }},
      {"require_jump", [](RunConfig& c, const json& v) { c.require_jump = as_bool(v); }},
      {"checks",
       [](RunConfig& c, const json& v) {
         c.checks.clear();
         if (v.is_string()) {
           std::stringstream ss(v.get<std::string>());
           for (std::string item; std::getline(ss, item, ',');) {
             if (!item.empty()) c.checks.push_back(item);
           }
         } else {
           c.checks = v.get<std::vector<std::string>>();
         }
       }},
      {"threads", [](RunConfig& c, const json& v) { c.threads = static_cast<unsigned>(as_count(v)); }},
  };
  return table;
}

template <class Fn>
void check_key(const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(key, e.what());
  }
}

void validate(const RunConfig& c) {
  static const std::vector<std::string> drifts = {"cessi", "zero", "ou", "double_well"};
  if (std::find(drifts.begin(), drifts.end(), c.drift) == drifts.end()) {
    throw ConfigError("drift", "unknown drift '" + c.drift + "'");
  }
  check_key("n_cells", [&] { (void)c.spatial_grid(); });
  check_key("n_steps", [&] { (void)c.time_grid(); });
  check_key("epsilon", [&] { (void)NoiseIntensity(c.epsilon); });
  if (c.is_explicit("eps_list") && c.eps_list.empty()) throw ConfigError("eps_list", "list is empty");
  check_key("eps_list", [&] {
    for (double e : c.sweep_list()) (void)NoiseIntensity(e);
  });
  check_key("dimensional", [&] { c.dimensional.validate(); });
  check_key("mu2", [&] { c.nondimensional().validate(); });
  check_key("y_start", [&] { c.bridge_spec().validate(c.spatial_grid()); });
  if (!(c.jump_threshold > 0.0)) throw ConfigError("jump_threshold", "must be positive");
  check_key("n_paths", [&] { c.ensemble().validate(); });
  if (c.dump_every < 1) throw ConfigError("dump_every", "must be at least 1");
  if (c.surface_format != "csv" && c.surface_format != "binary") {
    throw ConfigError("surface_format", "expected csv or binary");
  }
  for (const auto& name : c.checks) {
    if (std::find(check_names().begin(), check_names().end(), name) == check_names().end()) {
      throw ConfigError("checks", "unknown check '" + name + "'");
    }
  }
  if (c.drift == "ou" && !(c.ou_rate > 0.0)) throw ConfigError("ou_rate", "must be positive");
}

}  // namespace

bool RunConfig::is_explicit(const std::string& key) const {
  return std::find(explicit_keys.begin(), explicit_keys.end(), key) != explicit_keys.end();
}

SpatialGrid RunConfig::spatial_grid() const { return SpatialGrid(y_min, y_max, n_cells); }

TimeGrid RunConfig::time_grid() const { return TimeGrid(0.0, t_end, n_steps); }

EnsembleConfig RunConfig::ensemble() const {
  EnsembleConfig e;
  e.n_paths = n_paths;
  e.dt_sde = dt_sde;
  e.seed = seed;
  e.reflect_at_bounds = reflect;
  e.threads = threads;
  return e;
}

std::vector<double> RunConfig::sweep_list() const {
  if (!eps_list.empty()) return eps_list;
  return parse_eps_list(json("0.18:0.30:0.01"));
}

NondimensionalParams RunConfig::nondimensional() const {
  NondimensionalParams nd;
  if (is_explicit("f_flux")) {
    nd = nondimensionalize(dimensional, f_bar);
  } else {
    nd.f_bar = f_bar.value_or(1.1);
    nd.alpha = dimensional.t_d_diffusion_time / dimensional.t_r_relaxation_time;
    nd.mu2 = 6.2;
  }
  if (mu2) nd.mu2 = *mu2;
  if (alpha) nd.alpha = *alpha;
  return nd;
}

DriftModel RunConfig::drift_model() const {
  if (drift == "zero") return DriftModel(ZeroDrift{});
  if (drift == "ou") return DriftModel(LinearOU{ou_rate});
  if (drift == "double_well") return DriftModel(DoubleWell{dw_a, dw_b});
  return DriftModel::cessi(nondimensional());
}

json RunConfig::to_json() const {
  json j;
  j["drift"] = drift;
  const auto nd = nondimensional();
  j["f_bar"] = nd.f_bar;
  j["mu2"] = nd.mu2;
  j["alpha"] = nd.alpha;
  j["t0"] = dimensional.t0_reference_temperature;
  j["s0"] = dimensional.s0_reference_salinity;
  j["rho0"] = dimensional.rho0_reference_density;
  j["t_d_years"] = dimensional.t_d_diffusion_time / kSecondsPerYear;
  j["t_r_days"] = dimensional.t_r_relaxation_time / kSecondsPerDay;
  j["t_a_years"] = dimensional.t_a_advection_time / kSecondsPerYear;
  j["q"] = dimensional.q_transport_coefficient;
  j["alpha_s"] = dimensional.alpha_s_salinity_coefficient;
  j["alpha_t"] = dimensional.alpha_t_thermal_expansion;
  j["theta"] = dimensional.theta_meridional_temp_difference;
  j["h_depth"] = dimensional.h_mean_ocean_depth;
  j["volume_m3"] = dimensional.v_control_volume;
  j["f_flux"] = dimensional.f_freshwater_flux ? json(*dimensional.f_freshwater_flux) : json(nullptr);
  j["ou_rate"] = ou_rate;
  j["dw_a"] = dw_a;
  j["dw_b"] = dw_b;
  j["y_min"] = y_min;
  j["y_max"] = y_max;
  j["n_cells"] = n_cells;
  j["t_end"] = t_end;
  j["n_steps"] = n_steps;
  j["epsilon"] = epsilon;
  j["eps_list"] = sweep_list();
  j["y_start"] = y_start;
  j["y_end"] = y_end;
  j["jump_threshold"] = jump_threshold;
  j["backward_factor"] = to_string(backward_factor);
  j["refinement"] = to_string(refinement);
  j["seed"] = seed;
  j["n_paths"] = n_paths;
  j["dt_sde"] = dt_sde;
  j["reflect"] = reflect;
  j["mc_times"] = mc_times.empty() ? std::vector<double>{t_end} : mc_times;
  j["hit_y"] = hit_y ? json(*hit_y) : json(nullptr);
  j["hit_t"] = hit_t;
  j["hit_window"] = hit_window;
  j["dump_every"] = dump_every;
  j["surface_format"] = surface_format;
  j["require_jump"] = require_jump;
  j["checks"] = checks;
  j["threads"] = threads;
  return j;
}

namespace {

double parse_number(const std::string& item) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(item, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos) {
    throw ConfigError("eps_list", "'" + item + "' is not a number");
  }
  return v;
}

}  // namespace

std::vector<double> parse_eps_list(const json& value) {
  std::vector<double> out;
  if (value.is_array() || value.is_number()) {
    try {
      return as_number_list(value);
    } catch (const json::exception& e) {
      throw ConfigError("eps_list", e.what());
    }
  }
  if (!value.is_string()) throw ConfigError("eps_list", "expected a list, 'lo:hi:step' or 'a,b,c'");
  const auto text = value.get<std::string>();
  if (text.empty()) return out;
  if (text.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(text);
    if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0.0) || hi < lo) {
      throw ConfigError("eps_list", "malformed range '" + text + "'");
    }
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
    for (std::size_t i = 0; i <= n; ++i) {
      // Round to 12 decimals so 0.18 + 0.01*k prints as 0.19, 0.2, ...
      out.push_back(std::round((lo + static_cast<double>(i) * step) * 1e12) / 1e12);
    }
    return out;
  }
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(parse_number(item));
  }
  return out;
}

namespace {

const std::set<std::string>& optional_keys() {
  static const std::set<std::string> keys = {"f_bar", "mu2", "alpha", "f_flux", "hit_y"};
  return keys;
}

}  // namespace

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(key, "unknown key");
    // null leaves an optional key unset (the resolved-config echo writes them so).
    if (value.is_null() && optional_keys().contains(key)) continue;
    check_key(key, [&] { it->second(c, value); });
    c.explicit_keys.push_back(key);
  }
  validate(c);
  return c;
}

std::pair<std::string, json> parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("", "override '" + text + "' is not of the form key=value");
  }
  const std::string key = text.substr(0, eq);
  const std::string raw = text.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  return {key, value};
}

RunConfig load_config(const std::optional<std::string>& path,
                      const std::vector<std::string>& overrides) {
  json merged = json::object();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw ConfigError("config", "cannot open '" + *path + "'");
    merged = json::parse(in, nullptr, false);
    if (merged.is_discarded()) throw ConfigError("config", "'" + *path + "' is not valid JSON");
    if (!merged.is_object()) throw ConfigError("config", "'" + *path + "' must hold a JSON object");
  }
  for (const auto& o : overrides) {
    auto [key, value] = parse_override(o);
    merged[key] = value;
  }
  return config_from_json(merged);
}

}  // namespace thc
