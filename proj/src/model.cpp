#include "thc/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "thc/log.hpp"

namespace thc {
namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(name) + " must be positive and finite");
  }
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

void DimensionalParams::validate() const {
  require_positive(s0_reference_salinity, "s0_reference_salinity");
  require_positive(t_d_diffusion_time, "t_d_diffusion_time");
  require_positive(t_r_relaxation_time, "t_r_relaxation_time");
  require_positive(t_a_advection_time, "t_a_advection_time");
  require_positive(q_transport_coefficient, "q_transport_coefficient");
  require_positive(alpha_s_salinity_coefficient, "alpha_s_salinity_coefficient");
  require_positive(alpha_t_thermal_expansion, "alpha_t_thermal_expansion");
  require_positive(theta_meridional_temp_difference, "theta_meridional_temp_difference");
  require_positive(h_mean_ocean_depth, "h_mean_ocean_depth");
  require_positive(v_control_volume, "v_control_volume");
  if (f_freshwater_flux && !std::isfinite(*f_freshwater_flux)) {
    throw std::invalid_argument("f_freshwater_flux must be finite");
  }
}

void NondimensionalParams::validate() const {
  require_positive(alpha, "alpha");
  require_positive(mu2, "mu2");
  if (!std::isfinite(f_bar)) throw std::invalid_argument("f_bar must be finite");
}

double DriftModel::operator()(double y) const {
  return std::visit([y](const auto& k) { return evaluate(k, y); }, kind_);
}

double DriftModel::derivative(double y) const {
  return std::visit(Overloaded{
                        // d/dy [y + mu2 (y - 2y^2 + y^3)]
                        [y](const CessiReduced& c) {
                          return -(1.0 + c.mu2 * (1.0 - 4.0 * y + 3.0 * y * y));
                        },
                        [y](const DoubleWell& w) { return w.a - 3.0 * w.b * y * y; },
                        [](const LinearOU& o) { return -o.rate; },
                        [](const ZeroDrift&) { return 0.0; },
                    },
                    kind_);
}

double DriftModel::potential(double y) const {
  const double y2 = y * y;
  return std::visit(Overloaded{
                        [y, y2](const CessiReduced& c) {
                          return -c.f_bar * y + 0.5 * y2 +
                                 c.mu2 * (0.5 * y2 - 2.0 / 3.0 * y2 * y + 0.25 * y2 * y2);
                        },
                        [y2](const DoubleWell& w) { return -0.5 * w.a * y2 + 0.25 * w.b * y2 * y2; },
                        [y2](const LinearOU& o) { return 0.5 * o.rate * y2; },
                        [](const ZeroDrift&) { return 0.0; },
                    },
                    kind_);
}

std::string DriftModel::name() const {
  return std::visit(Overloaded{
                        [](const CessiReduced&) { return std::string("cessi"); },
                        [](const DoubleWell&) { return std::string("double_well"); },
                        [](const LinearOU&) { return std::string("ou"); },
                        [](const ZeroDrift&) { return std::string("zero"); },
                    },
                    kind_);
}

std::string to_string(Stability s) { return s == Stability::stable ? "stable" : "unstable"; }

double density_difference(double s_p, double s_e, double t_p, double t_e,
                          const DimensionalParams& params) {
  return params.alpha_s_salinity_coefficient * (s_p - s_e) -
         params.alpha_t_thermal_expansion * (t_p - t_e);
}

double exchange_function(double delta_rho, const DimensionalParams& params) {
  return 1.0 / params.t_d_diffusion_time +
         params.q_transport_coefficient / params.v_control_volume * delta_rho * delta_rho;
}

std::pair<double, double> drift_dimensional(double delta_t, double delta_s,
                                            const DimensionalParams& params) {
  if (!params.f_freshwater_flux) {
    throw std::invalid_argument("f_freshwater_flux is required for the dimensional drift");
  }
  // DeltaT = T_e - T_p and DeltaS = S_e - S_p, so S_p - S_e = -DeltaS.
  const double delta_rho = density_difference(0.0, delta_s, 0.0, delta_t, params);
  const double q = exchange_function(delta_rho, params);
  const double dT = -(delta_t - params.theta_meridional_temp_difference) / params.t_r_relaxation_time -
                    q * delta_t;
  const double dS = *params.f_freshwater_flux / params.h_mean_ocean_depth *
                        params.s0_reference_salinity -
                    q * delta_s;
  return {dT, dS};
}

double advection_time_from_transport(const DimensionalParams& params) {
  const double a = params.alpha_t_thermal_expansion * params.theta_meridional_temp_difference;
  return params.v_control_volume / (params.q_transport_coefficient * a * a);
}

NondimensionalParams nondimensionalize(const DimensionalParams& params,
                                       std::optional<double> f_bar_override) {
  params.validate();
  NondimensionalParams nd;
  nd.alpha = params.t_d_diffusion_time / params.t_r_relaxation_time;
  nd.mu2 = params.t_d_diffusion_time / params.t_a_advection_time;
  if (f_bar_override) {
    if (params.f_freshwater_flux) {
      warn("both f_freshwater_flux and f_bar given; using f_bar");
    }
    nd.f_bar = *f_bar_override;
  } else if (params.f_freshwater_flux) {
    nd.f_bar = params.alpha_s_salinity_coefficient * params.s0_reference_salinity *
               params.t_d_diffusion_time * *params.f_freshwater_flux /
               (params.alpha_t_thermal_expansion * params.theta_meridional_temp_difference *
                params.h_mean_ocean_depth);
  } else {
    throw std::invalid_argument("f_freshwater_flux absent and no f_bar given");
  }
  return nd;
}

std::pair<double, double> drift_2d(const BoxState2D& state, const NondimensionalParams& nd) {
  const double d = state.x - state.y;
  const double exchange = 1.0 + nd.mu2 * d * d;
  return {-nd.alpha * (state.x - 1.0) - state.x * exchange, nd.f_bar - state.y * exchange};
}

double drift_reduced(double y, const NondimensionalParams& nd) {
  return DriftModel::cessi(nd)(y);
}

double potential(double y, const NondimensionalParams& nd) {
  return DriftModel::cessi(nd).potential(y);
}

std::vector<Equilibrium> find_equilibria(const DriftModel& drift, Bracket bracket,
                                         int scan_points) {
  if (!(bracket.hi > bracket.lo)) throw std::invalid_argument("bracket must have positive width");
  if (scan_points < 2) throw std::invalid_argument("scan_points must be at least 2");

  const double step = (bracket.hi - bracket.lo) / (scan_points - 1);
  auto node = [&](int i) { return i == scan_points - 1 ? bracket.hi : bracket.lo + i * step; };

  std::vector<double> roots;
  double y_prev = node(0);
  double f_prev = drift(y_prev);
  if (f_prev == 0.0) roots.push_back(y_prev);
  for (int i = 1; i < scan_points; ++i) {
    const double y_cur = node(i);
    const double f_cur = drift(y_cur);
    if (f_cur == 0.0) {
      roots.push_back(y_cur);
    } else if (f_prev != 0.0 && (f_prev < 0.0) != (f_cur < 0.0)) {
      double lo = y_prev, hi = y_cur, f_lo = f_prev;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = drift(mid);
        if (f_mid == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
          lo = mid;
          f_lo = f_mid;
        } else {
          hi = mid;
        }
      }
      double root = 0.5 * (lo + hi);
      // Newton polish, kept only while it stays in the cell and improves |f|.
      for (int it = 0; it < 8; ++it) {
        const double fr = drift(root);
        const double dfr = drift.derivative(root);
        if (fr == 0.0 || dfr == 0.0) break;
        const double next = root - fr / dfr;
        if (next < y_prev || next > y_cur || std::abs(drift(next)) >= std::abs(fr)) break;
        root = next;
      }
      roots.push_back(root);
    }
    y_prev = y_cur;
    f_prev = f_cur;
  }

  std::vector<Equilibrium> out;
  out.reserve(roots.size());
  for (double r : roots) {
    Equilibrium e;
    e.y = r;
    e.derivative = drift.derivative(r);
    if (e.derivative < 0.0) {
      e.stability = Stability::stable;
    } else {
      if (e.derivative == 0.0) warn("degenerate equilibrium with zero derivative; classified unstable");
      e.stability = Stability::unstable;
    }
    out.push_back(e);
  }
  return out;
}

std::vector<Equilibrium> find_equilibria(const NondimensionalParams& nd, Bracket bracket) {
  nd.validate();
  return find_equilibria(DriftModel::cessi(nd), bracket);
}

std::vector<BoxState2D> integrate_deterministic_2d(const NondimensionalParams& nd,
                                                   BoxState2D initial, double horizon,
                                                   double step) {
  nd.validate();
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");

  const auto n = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));
  std::vector<BoxState2D> traj;
  traj.reserve(n + 1);
  traj.push_back(initial);
  BoxState2D s = initial;
  for (std::size_t i = 1; i <= n; ++i) {
    const double dt = std::min(step, horizon - static_cast<double>(i - 1) * step);
    const double d = s.x - s.y;
    const double exchange = 1.0 + nd.mu2 * d * d;
    const double y_next = s.y + dt * (nd.f_bar - s.y * exchange);
    s.x = (s.x + dt * nd.alpha) / (1.0 + dt * (nd.alpha + exchange));
    s.y = y_next;
    if (!std::isfinite(s.x) || !std::isfinite(s.y)) {
      throw std::runtime_error("deterministic integration produced a non-finite state at step " +
                               std::to_string(i));
    }
    traj.push_back(s);
  }
  return traj;
}

}  // namespace thc
