#include "thc/fpe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tridiagonal.hpp"

namespace thc {

using detail::ThomasSolver;
using detail::Tridiagonal;

SpatialGrid::SpatialGrid(double y_min, double y_max, std::size_t n_cells)
    : y_min_(y_min), y_max_(y_max), n_cells_(n_cells), spacing_(0.0) {
  if (!std::isfinite(y_min) || !std::isfinite(y_max) || !(y_min < y_max)) {
    throw std::invalid_argument("grid requires finite y_min < y_max");
  }
  if (n_cells < kMinCells) {
    throw std::invalid_argument("grid requires n_cells >= " + std::to_string(kMinCells));
  }
  spacing_ = (y_max - y_min) / static_cast<double>(n_cells);
}

std::vector<double> SpatialGrid::nodes() const {
  std::vector<double> out(n_cells_);
  for (std::size_t i = 0; i < n_cells_; ++i) out[i] = node(i);
  return out;
}

TimeGrid::TimeGrid(double t_start, double t_end, std::size_t n_steps)
    : t_start_(t_start), t_end_(t_end), n_steps_(n_steps), dt_(0.0) {
  if (!std::isfinite(t_start) || !std::isfinite(t_end) || !(t_start < t_end)) {
    throw std::invalid_argument("time grid requires finite t_start < t_end");
  }
  if (n_steps < 1) throw std::invalid_argument("time grid requires n_steps >= 1");
  dt_ = (t_end - t_start) / static_cast<double>(n_steps);
}

NoiseIntensity::NoiseIntensity(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("noise intensity must be positive and finite");
  }
}

DensitySurface::DensitySurface(SpatialGrid grid, TimeGrid times, SurfaceKind kind, double anchor)
    : grid_(grid),
      times_(times),
      kind_(kind),
      anchor_(anchor),
      values_((times.n_steps() + 1) * grid.n_cells(), 0.0) {}

double mass(std::span<const double> density, const SpatialGrid& grid) {
  if (density.size() != grid.n_cells()) throw std::invalid_argument("density length does not match grid");
  double s = 0.0;
  for (double v : density) s += v;
  return s * grid.spacing();
}

double pairing(std::span<const double> a, std::span<const double> b, const SpatialGrid& grid) {
  if (a.size() != grid.n_cells() || b.size() != grid.n_cells()) {
    throw std::invalid_argument("slice length does not match grid");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * grid.spacing();
}

double mean(std::span<const double> density, const SpatialGrid& grid) {
  if (density.size() != grid.n_cells()) throw std::invalid_argument("density length does not match grid");
  double s = 0.0;
  for (std::size_t i = 0; i < density.size(); ++i) s += grid.node(i) * density[i];
  return s * grid.spacing();
}

std::vector<double> delta_init(const SpatialGrid& grid, double y0) {
  if (!grid.contains(y0)) {
    throw std::invalid_argument("delta location " + std::to_string(y0) + " outside the grid");
  }
  const std::size_t n = grid.n_cells();
  const double h = grid.spacing();
  std::vector<double> v(n, 0.0);
  const double s = (y0 - grid.node(0)) / h;
  if (s <= 0.0) {
    v[0] = 1.0 / h;
    return v;
  }
  if (s >= static_cast<double>(n - 1)) {
    v[n - 1] = 1.0 / h;
    return v;
  }
  auto i = static_cast<std::size_t>(std::floor(s));
  double w = s - static_cast<double>(i);
  constexpr double kSnap = 1e-12;
  if (w < kSnap) w = 0.0;
  if (w > 1.0 - kSnap) {
    ++i;
    w = 0.0;
  }
  v[i] = (1.0 - w) / h;
  if (w > 0.0) v[i + 1] = w / h;
  return v;
}

namespace {

Tridiagonal assemble_forward_operator(const DriftModel& drift, double diffusion,
                                      const SpatialGrid& grid) {
  const std::size_t n = grid.n_cells();
  const double h = grid.spacing();
  Tridiagonal op(n);
  // Interior face k sits between cells k and k+1 and carries
  // J_k = a_k p_k + b_k p_{k+1}; walls carry no flux.
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double f = drift(grid.face(k + 1));
    const double a = 0.5 * f + diffusion / h;
    const double b = 0.5 * f - diffusion / h;
    op.diag[k] -= a / h;
    op.upper[k] -= b / h;
    op.lower[k + 1] += a / h;
    op.diag[k + 1] += b / h;
  }
  return op;
}

class Propagator {
 public:
  Propagator(const Tridiagonal& op, double dt, std::size_t n_steps, std::size_t smoothing)
      : n_steps_(n_steps),
        smoothing_(smoothing),
        cn_explicit_(op.shifted_identity(0.5 * dt)),
        cn_explicit_t_(cn_explicit_.transposed()),
        cn_implicit_(op.shifted_identity(-0.5 * dt)),
        cn_implicit_t_(op.shifted_identity(-0.5 * dt).transposed()),
        half_euler_(op.shifted_identity(-0.5 * dt)),
        half_euler_t_(op.shifted_identity(-0.5 * dt).transposed()),
        scratch_(op.size()) {}

  bool smoothed(std::size_t step) const {
    return step < smoothing_ || step + smoothing_ >= n_steps_;
  }

  void forward(std::size_t step, std::span<double> p) {
    if (smoothed(step)) {
      half_euler_.solve(p);
      half_euler_.solve(p);
      return;
    }
    cn_explicit_.multiply(p, scratch_);
    cn_implicit_.solve(scratch_);
    std::copy(scratch_.begin(), scratch_.end(), p.begin());
  }

  void adjoint(std::size_t step, std::span<double> g) {
    if (smoothed(step)) {
      half_euler_t_.solve(g);
      half_euler_t_.solve(g);
      return;
    }
    std::copy(g.begin(), g.end(), scratch_.begin());
    cn_implicit_t_.solve(scratch_);
    cn_explicit_t_.multiply(scratch_, g);
  }

 private:
  std::size_t n_steps_;
  std::size_t smoothing_;
  Tridiagonal cn_explicit_;
  Tridiagonal cn_explicit_t_;
  ThomasSolver cn_implicit_;
  ThomasSolver cn_implicit_t_;
  ThomasSolver half_euler_;
  ThomasSolver half_euler_t_;
  std::vector<double> scratch_;
};

void clamp_and_check(std::span<double> v, SolverDiagnostics& diag, double t) {
  for (double& x : v) {
    if (!std::isfinite(x)) {
      throw SolverError("non-finite density at t=" + std::to_string(t) + " (scheme divergence)");
    }
    diag.min_before_clamp = std::min(diag.min_before_clamp, x);
    if (x < 0.0) {
      x = 0.0;
      ++diag.clamp_events;
    }
  }
  diag.total_nodes += v.size();
}

}  // namespace

DensitySurface solve_forward(const DriftModel& drift, NoiseIntensity eps, const SpatialGrid& grid,
                             const TimeGrid& times, double y1, const SchemeOptions& opts) {
  DensitySurface surface(grid, times, SurfaceKind::forward, y1);
  const auto init = delta_init(grid, y1);
  std::copy(init.begin(), init.end(), surface.slice(0).begin());

  Propagator prop(assemble_forward_operator(drift, eps.diffusion(), grid), times.dt(),
                  times.n_steps(), opts.smoothing_steps);
  auto& diag = surface.diagnostics;
  diag.total_nodes = grid.n_cells();
  diag.max_mass_drift = std::abs(mass(surface.slice(0), grid) - 1.0);
  std::vector<double> state(init);
  for (std::size_t k = 0; k < times.n_steps(); ++k) {
    prop.forward(k, state);
    const double t = times.time(k + 1);
    clamp_and_check(state, diag, t);
    const double drift_err = std::abs(mass(state, grid) - 1.0);
    diag.max_mass_drift = std::max(diag.max_mass_drift, drift_err);
    if (drift_err > opts.mass_tolerance) {
      throw SolverError("forward mass drift " + std::to_string(drift_err) + " at t=" +
                        std::to_string(t));
    }
    std::copy(state.begin(), state.end(), surface.slice(k + 1).begin());
  }
  return surface;
}

DensitySurface solve_backward(const DriftModel& drift, NoiseIntensity eps,
                              const SpatialGrid& grid, const TimeGrid& times, double y3,
                              const SchemeOptions& opts) {
  if (!grid.contains(y3)) throw std::invalid_argument("terminal location outside the grid");
  return solve_backward_terminal(drift, eps, grid, times, delta_init(grid, y3), y3, opts);
}

DensitySurface solve_backward_terminal(const DriftModel& drift, NoiseIntensity eps,
                                       const SpatialGrid& grid, const TimeGrid& times,
                                       std::span<const double> terminal, double anchor,
                                       const SchemeOptions& opts) {
  if (terminal.size() != grid.n_cells()) throw std::invalid_argument("terminal length does not match grid");
  DensitySurface surface(grid, times, SurfaceKind::backward, anchor);
  const std::size_t last = times.n_steps();
  std::copy(terminal.begin(), terminal.end(), surface.slice(last).begin());

  Propagator prop(assemble_forward_operator(drift, eps.diffusion(), grid), times.dt(),
                  times.n_steps(), opts.smoothing_steps);
  auto& diag = surface.diagnostics;
  diag.total_nodes = grid.n_cells();
  std::vector<double> state(terminal.begin(), terminal.end());
  for (std::size_t k = last; k-- > 0;) {
    prop.adjoint(k, state);
    clamp_and_check(state, diag, times.time(k));
    std::copy(state.begin(), state.end(), surface.slice(k).begin());
  }
  return surface;
}

std::vector<double> window_indicator(const SpatialGrid& grid, double centre, double half_width) {
  if (!(half_width > 0.0)) throw std::invalid_argument("window half-width must be positive");
  const double lo = centre - half_width, hi = centre + half_width;
  std::vector<double> out(grid.n_cells(), 0.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double overlap = std::min(hi, grid.face(i + 1)) - std::max(lo, grid.face(i));
    out[i] = std::clamp(overlap / grid.spacing(), 0.0, 1.0);
  }
  return out;
}

double interpolate(std::span<const double> values, const SpatialGrid& grid, double y) {
  if (values.size() != grid.n_cells()) throw std::invalid_argument("value length does not match grid");
  const double s = (y - grid.node(0)) / grid.spacing();
  if (s <= 0.0) return values.front();
  if (s >= static_cast<double>(values.size() - 1)) return values.back();
  const auto i = static_cast<std::size_t>(std::floor(s));
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

std::vector<double> stationary_density(const DriftModel& drift, NoiseIntensity eps,
                                       const SpatialGrid& grid) {
  const std::size_t n = grid.n_cells();
  const double scale = 2.0 / (eps.value() * eps.value());
  std::vector<double> out(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = -scale * drift.potential(grid.node(i));
    top = std::max(top, out[i]);
  }
  if (!std::isfinite(top)) throw SolverError("stationary density exponent is not finite");
  for (double& v : out) v = std::exp(v - top);
  const double m = mass(out, grid);
  if (!(m > 0.0) || !std::isfinite(m)) throw SolverError("stationary density cannot be normalised");
  for (double& v : out) v /= m;
  return out;
}

}  // namespace thc
