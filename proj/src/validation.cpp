#include "thc/validation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

namespace thc {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CheckResult make(std::string name, double measured, double tolerance, bool pass, std::string detail = {}) {
  return {std::move(name), measured, tolerance, pass, std::move(detail)};
}

CheckResult check_equilibria(const RunConfig& cfg) {
  const auto drift = cfg.drift_model();
  double worst = 0.0;
  const auto eqs = find_equilibria(drift, {cfg.y_min, cfg.y_max});
  for (const auto& e : eqs) worst = std::max(worst, std::abs(drift(e.y)));
  return make("equilibria", worst, 1e-10, worst <= 1e-10, std::to_string(eqs.size()) + " equilibria");
}

CheckResult check_mass(const RunConfig& cfg) {
  const auto fwd = solve_forward(cfg.drift_model(), NoiseIntensity(cfg.epsilon), cfg.spatial_grid(),
                                 cfg.time_grid(), cfg.y_start);
  const double m = fwd.diagnostics.max_mass_drift;
  return make("mass", m, 1e-6, m <= 1e-6);
}

CheckResult check_positivity(const RunConfig& cfg) {
  const auto drift = cfg.drift_model();
  const NoiseIntensity eps(cfg.epsilon);
  const auto fwd = solve_forward(drift, eps, cfg.spatial_grid(), cfg.time_grid(), cfg.y_start);
  const auto bwd = solve_backward(drift, eps, cfg.spatial_grid(), cfg.time_grid(), cfg.y_end);
  const double worst = -std::min(fwd.diagnostics.min_before_clamp, bwd.diagnostics.min_before_clamp);
  const double fraction =
      static_cast<double>(fwd.diagnostics.clamp_events + bwd.diagnostics.clamp_events) /
      static_cast<double>(fwd.diagnostics.total_nodes + bwd.diagnostics.total_nodes);
  return make("positivity", worst, 1e-12, worst <= 1e-12 && fraction <= 1e-3,
              "clamped fraction " + std::to_string(fraction));
}

CheckResult check_chapman_kolmogorov(const RunConfig& cfg) {
  const auto drift = cfg.drift_model();
  const NoiseIntensity eps(cfg.epsilon);
  const auto grid = cfg.spatial_grid();
  const auto times = cfg.time_grid();
  const auto fwd = solve_forward(drift, eps, grid, times, cfg.y_start);
  const auto bwd = solve_backward(drift, eps, grid, times, cfg.y_end);
  double lo = kInf, hi = -kInf;
  for (std::size_t n = 0; n < fwd.n_slices(); ++n) {
    const double t = times.time(n);
    if (t < 0.1 * times.t_end() || t > 0.9 * times.t_end()) continue;
    const double v = pairing(bwd.slice(n), fwd.slice(n), grid);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double rel = hi > 0.0 ? (hi - lo) / hi : kInf;
  return make("chapman_kolmogorov", rel, 0.01, rel < 0.01);
}

CheckResult check_brownian_bridge(const RunConfig& cfg) {
  const SpatialGrid grid(-1.5, 2.5, cfg.n_cells);
  const TimeGrid times(0.0, 1.0, cfg.n_steps);
  const auto run = run_bridge(DriftModel(ZeroDrift{}), NoiseIntensity(cfg.epsilon), {0.0, 1.0, 1.0},
                              grid, times, cfg.jump_threshold);
  double worst = 0.0;
  for (std::size_t k = 0; k < run.path.psi.size(); ++k) {
    worst = std::max(worst, std::abs(run.path.psi[k] - run.path.times[k]));
  }
  const double tol = 2.0 * grid.spacing();
  return make("brownian_bridge", worst, tol, worst <= tol);
}

CheckResult check_antisymmetry(const RunConfig& cfg) {
  const SpatialGrid grid(-2.5, 2.5, cfg.n_cells);
  const auto times = cfg.time_grid();
  const auto run = run_bridge(DriftModel(DoubleWell{1.0, 1.0}), NoiseIntensity(cfg.epsilon),
                              {-1.0, 1.0, cfg.t_end}, grid, times, cfg.jump_threshold);
  const double worst = antisymmetry_defect(run.path);
  const double tol = 2.0 * grid.spacing();
  return make("antisymmetry", worst, tol, worst <= tol);
}

CheckResult check_grid_convergence(const RunConfig& cfg) {
  const auto drift = cfg.drift_model();
  const NoiseIntensity eps(cfg.epsilon);
  const auto coarse_grid = cfg.spatial_grid();
  const auto coarse_times = cfg.time_grid();
  const SpatialGrid fine_grid(cfg.y_min, cfg.y_max, 2 * cfg.n_cells);
  const TimeGrid fine_times(0.0, cfg.t_end, 2 * cfg.n_steps);
  BridgeOptions opts;
  opts.backward_factor = cfg.backward_factor;
  const auto coarse = run_bridge(drift, eps, cfg.bridge_spec(), coarse_grid, coarse_times,
                                 cfg.jump_threshold, opts);
  const auto fine = run_bridge(drift, eps, cfg.bridge_spec(), fine_grid, fine_times,
                               cfg.jump_threshold, opts);
  const double tol = 2.0 * coarse_times.dt();
  if (!coarse.jump || !fine.jump) {
    return make("grid_convergence", kInf, tol, false, "no jump detected at one of the resolutions");
  }
  const double shift = std::abs(fine.jump->t_jump - coarse.jump->t_jump);
  return make("grid_convergence", shift, tol, shift <= tol,
              "t_jump coarse " + std::to_string(coarse.jump->t_jump) + ", fine " +
                  std::to_string(fine.jump->t_jump));
}

CheckResult check_mc_forward(const RunConfig& cfg) {
  const auto drift = cfg.drift_model();
  const NoiseIntensity eps(cfg.epsilon);
  const auto grid = cfg.spatial_grid();
  const auto fwd = solve_forward(drift, eps, grid, cfg.time_grid(), cfg.y_start);
  const double t_out[] = {cfg.t_end};
  const auto hist = euler_maruyama_ensemble(drift, eps, cfg.y_start, grid, t_out, cfg.ensemble());
  const double l1 = l1_distance(hist.slice(0), fwd.slice(fwd.n_slices() - 1), grid);
  return make("mc_forward", l1, 0.05, l1 < 0.05);
}

CheckResult check_mc_hitting(const RunConfig& cfg) {
  const auto drift = cfg.drift_model();
  const NoiseIntensity eps(cfg.epsilon);
  const auto grid = cfg.spatial_grid();
  double y = cfg.y_start;
  if (cfg.hit_y) {
    y = *cfg.hit_y;
  } else {
    const auto eqs = find_equilibria(drift, {cfg.y_min, cfg.y_max});
    if (eqs.size() == 3) y = eqs[1].y;
  }
  const auto times = cfg.time_grid();
  const auto u = solve_backward_terminal(drift, eps, grid, times,
                                         window_indicator(grid, cfg.y_end, cfg.hit_window), cfg.y_end);
  const auto n = static_cast<std::size_t>(std::llround(cfg.hit_t / times.dt()));
  const double pde = interpolate(u.slice(n), grid, y);
  const auto mc = estimate_hitting_probability(drift, eps, y, times.time(n), cfg.y_end, cfg.t_end,
                                               cfg.hit_window, grid, cfg.ensemble());
  const double tol = 3.0 * mc.std_error;
  const double diff = std::abs(mc.probability - pde);
  return make("mc_hitting", diff, tol, diff <= tol,
              "pde " + std::to_string(pde) + ", mc " + std::to_string(mc.probability));
}

using CheckFn = std::function<CheckResult(const RunConfig&)>;

const std::vector<std::pair<std::string, CheckFn>>& registry() {
  static const std::vector<std::pair<std::string, CheckFn>> table = {
      {"equilibria", check_equilibria},
      {"mass", check_mass},
      {"positivity", check_positivity},
      {"chapman_kolmogorov", check_chapman_kolmogorov},
      {"brownian_bridge", check_brownian_bridge},
      {"antisymmetry", check_antisymmetry},
      {"grid_convergence", check_grid_convergence},
      {"mc_forward", check_mc_forward},
      {"mc_hitting", check_mc_hitting},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    return out;
  }();
  return names;
}

std::vector<CheckResult> run_checks(const RunConfig& cfg) {
  for (const auto& name : cfg.checks) {
    if (std::find(check_names().begin(), check_names().end(), name) == check_names().end()) {
      throw ConfigError("checks", "unknown check '" + name + "'");
    }
  }
  std::vector<CheckResult> out;
  for (const auto& [name, fn] : registry()) {
    if (!cfg.checks.empty() && std::find(cfg.checks.begin(), cfg.checks.end(), name) == cfg.checks.end()) {
      continue;
    }
    try {
      out.push_back(fn(cfg));
    } catch (const std::exception& e) {
      out.push_back(make(name, kInf, 0.0, false, std::string("error: ") + e.what()));
    }
  }
  return out;
}

json to_json(const std::vector<CheckResult>& results) {
  json checks = json::array();
  bool all = true;
  for (const auto& r : results) {
    json c;
    c["name"] = r.name;
    c["measured"] = std::isfinite(r.measured) ? json(r.measured) : json(nullptr);
    c["tolerance"] = r.tolerance;
    c["pass"] = r.pass;
    if (!r.detail.empty()) c["detail"] = r.detail;
    checks.push_back(c);
    all = all && r.pass;
  }
  return {{"checks", checks}, {"all_pass", all}};
}

}  // namespace thc
