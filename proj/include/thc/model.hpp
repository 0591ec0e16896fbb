#pragma once

// Two-box thermohaline circulation model: dimensional form, the
// nondimensional slow-fast system and its reduction to a scalar drift
// for the salinity difference.

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace thc {

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kSecondsPerYear = 365.25 * kSecondsPerDay;

/// Physical constants of the two-box model. Times are stored in seconds.
struct DimensionalParams {
  double t0_reference_temperature = 5.0;     // degC, unused by the dynamics
  double s0_reference_salinity = 35.0;       // psu
  double rho0_reference_density = 1029.0;    // kg m^-3, unused by the dynamics
  double t_d_diffusion_time = 219.0 * kSecondsPerYear;
  double t_r_relaxation_time = 25.0 * kSecondsPerDay;
  double t_a_advection_time = 35.0 * kSecondsPerYear;
  double q_transport_coefficient = 8.84e11;  // m^3 s^-1
  double alpha_s_salinity_coefficient = 7.5e-4;
  double alpha_t_thermal_expansion = 1.7e-4;
  double theta_meridional_temp_difference = 20.0;  // degC
  double h_mean_ocean_depth = 4500.0;              // m
  double v_control_volume = 8250.0 * 4.5 * 300.0 * 1e9;  // m^3
  std::optional<double> f_freshwater_flux;               // m s^-1

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const;
};

struct NondimensionalParams {
  double f_bar = 1.1;
  double alpha = 219.0 * 365.25 / 25.0;
  double mu2 = 6.2;

  void validate() const;
};

struct BoxState2D {
  double x = 0.0;  // temperature difference / theta
  double y = 0.0;  // scaled salinity difference
};

// Drift kinds. All are gradient drifts f = -V'.
struct CessiReduced {
  double f_bar = 1.1;
  double mu2 = 6.2;
};
struct DoubleWell {  // f(y) = a*y - b*y^3
  double a = 1.0;
  double b = 1.0;
};
struct LinearOU {  // f(y) = -rate*y
  double rate = 1.0;
};
struct ZeroDrift {};

// Drift values per kind; inline so hot loops can dispatch once per run.
inline double evaluate(const CessiReduced& c, double y) {
  const double d = 1.0 - y;
  return c.f_bar - y * (1.0 + c.mu2 * d * d);
}
inline double evaluate(const DoubleWell& w, double y) { return w.a * y - w.b * y * y * y; }
inline double evaluate(const LinearOU& o, double y) { return -o.rate * y; }
inline double evaluate(const ZeroDrift&, double) { return 0.0; }

/// Scalar drift f(y) of a one-dimensional SDE dY = f(Y)dt + eps dB.
class DriftModel {
 public:
  using Kind = std::variant<CessiReduced, DoubleWell, LinearOU, ZeroDrift>;

  DriftModel() : kind_(ZeroDrift{}) {}
  DriftModel(Kind kind) : kind_(std::move(kind)) {}  // NOLINT(google-explicit-constructor)

  static DriftModel cessi(const NondimensionalParams& nd) {
    return DriftModel(CessiReduced{nd.f_bar, nd.mu2});
  }

  double operator()(double y) const;
  double derivative(double y) const;
  /// V(y) = -int_0^y f(s) ds, so V(0) = 0.
  double potential(double y) const;

  const Kind& kind() const { return kind_; }
  std::string name() const;

 private:
  Kind kind_;
};

enum class Stability { stable, unstable };

struct Equilibrium {
  double y = 0.0;
  Stability stability = Stability::unstable;
  double derivative = 0.0;
};

std::string to_string(Stability s);

// Dimensional model.
double density_difference(double s_p, double s_e, double t_p, double t_e,
                          const DimensionalParams& params);
double exchange_function(double delta_rho, const DimensionalParams& params);
/// Returns (d DeltaT/dt, d DeltaS/dt) in degC/s and psu/s. Requires F.
std::pair<double, double> drift_dimensional(double delta_t, double delta_s,
                                            const DimensionalParams& params);

/// V / (q (alpha_T theta)^2): the advection time implied by the transport
/// coefficient. Roughly 34.5 years for the built-in constants.
double advection_time_from_transport(const DimensionalParams& params);

/// alpha = t_d/t_r, mu2 = t_d/t_a, f_bar from F. An explicit f_bar override
/// wins over F (a warning is printed when both are present).
NondimensionalParams nondimensionalize(const DimensionalParams& params,
                                       std::optional<double> f_bar_override = std::nullopt);

// Nondimensional model.
std::pair<double, double> drift_2d(const BoxState2D& state, const NondimensionalParams& nd);
double drift_reduced(double y, const NondimensionalParams& nd);
double potential(double y, const NondimensionalParams& nd);

struct Bracket {
  double lo = -1.0;
  double hi = 2.5;
};

/// Roots of the drift inside the bracket, ascending. Sign-change scan on
/// `scan_points` nodes, bisection, then Newton polish.
std::vector<Equilibrium> find_equilibria(const DriftModel& drift, Bracket bracket = {},
                                         int scan_points = 2001);
std::vector<Equilibrium> find_equilibria(const NondimensionalParams& nd, Bracket bracket = {});

/// IMEX Euler on the 2D system: the x equation is implicit (linear in x with
/// the exchange factor frozen), the y equation explicit. Stable for any
/// alpha. Returns states at t = 0, step, 2*step, ..., horizon.
std::vector<BoxState2D> integrate_deterministic_2d(const NondimensionalParams& nd,
                                                   BoxState2D initial, double horizon,
                                                   double step);

}  // namespace thc
