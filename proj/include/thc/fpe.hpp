#pragma once

// Finite-difference Fokker-Planck solvers on a cell-centred grid.
//
// Forward:  dp/dt = -d/dy (f p) + D d2p/dy2,  zero-flux walls
// Backward: -dg/dt = f dg/dy + D d2g/dy2,     g(., T) = delta(. - y3)
//
// with D = eps^2/2. The forward operator L is assembled in flux form with
// central face averages; time stepping is Crank-Nicolson, with the first and
// last `smoothing_steps` steps each replaced by two implicit-Euler half steps
// to damp the delta data. The backward solve applies the transposes of the
// same one-step propagators in reverse order, so the pairing
// h * sum_i g_n[i] p_n[i] is conserved exactly by the discrete scheme.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "thc/model.hpp"

namespace thc {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform cell-centred grid on [y_min, y_max]; node i sits at the centre of
/// cell i.
class SpatialGrid {
 public:
  static constexpr std::size_t kMinCells = 64;

  SpatialGrid(double y_min, double y_max, std::size_t n_cells);

  double y_min() const { return y_min_; }
  double y_max() const { return y_max_; }
  std::size_t n_cells() const { return n_cells_; }
  double spacing() const { return spacing_; }
  double node(std::size_t i) const { return y_min_ + (static_cast<double>(i) + 0.5) * spacing_; }
  /// Face between cells i-1 and i; face(0) = y_min, face(n_cells) = y_max.
  double face(std::size_t i) const { return y_min_ + static_cast<double>(i) * spacing_; }
  bool contains(double y) const { return y > y_min_ && y < y_max_; }
  std::vector<double> nodes() const;

  bool operator==(const SpatialGrid&) const = default;

 private:
  double y_min_;
  double y_max_;
  std::size_t n_cells_;
  double spacing_;
};

class TimeGrid {
 public:
  TimeGrid(double t_start, double t_end, std::size_t n_steps);

  double t_start() const { return t_start_; }
  double t_end() const { return t_end_; }
  std::size_t n_steps() const { return n_steps_; }
  double dt() const { return dt_; }
  double time(std::size_t n) const {
    return n == n_steps_ ? t_end_ : t_start_ + static_cast<double>(n) * dt_;
  }
  double horizon() const { return t_end_ - t_start_; }

  bool operator==(const TimeGrid&) const = default;

 private:
  double t_start_;
  double t_end_;
  std::size_t n_steps_;
  double dt_;
};

class NoiseIntensity {
 public:
  explicit NoiseIntensity(double epsilon);
  double value() const { return epsilon_; }
  double diffusion() const { return 0.5 * epsilon_ * epsilon_; }

 private:
  double epsilon_;
};

enum class SurfaceKind { forward, backward, bridge };

struct SolverDiagnostics {
  std::size_t clamp_events = 0;
  std::size_t total_nodes = 0;
  double min_before_clamp = 0.0;
  double max_mass_drift = 0.0;  // forward only
};

/// Values on a (time step) x (cell) lattice, row-major, one row per stored
/// time. `anchor` is the delta location the surface was started from.
class DensitySurface {
 public:
  DensitySurface(SpatialGrid grid, TimeGrid times, SurfaceKind kind, double anchor);

  const SpatialGrid& grid() const { return grid_; }
  const TimeGrid& times() const { return times_; }
  SurfaceKind kind() const { return kind_; }
  double anchor() const { return anchor_; }
  std::size_t n_slices() const { return times_.n_steps() + 1; }

  std::span<const double> slice(std::size_t n) const {
    return {values_.data() + n * grid_.n_cells(), grid_.n_cells()};
  }
  std::span<double> slice(std::size_t n) {
    return {values_.data() + n * grid_.n_cells(), grid_.n_cells()};
  }
  double at(std::size_t n, std::size_t i) const { return values_[n * grid_.n_cells() + i]; }
  std::span<const double> values() const { return values_; }

  SolverDiagnostics diagnostics;

 private:
  SpatialGrid grid_;
  TimeGrid times_;
  SurfaceKind kind_;
  double anchor_;
  std::vector<double> values_;
};

struct SchemeOptions {
  std::size_t smoothing_steps = 2;
  /// Forward solves fail if |mass - 1| exceeds this at any step.
  double mass_tolerance = 1e-4;
};

inline constexpr const char* kSchemeId =
    "fv-central-flux/crank-nicolson+rannacher(2x2 implicit-euler half steps at both ends)";

/// h * sum(values): the trapezoid rule over [y_min, y_max] with the wall
/// half-cells extended flat (zero-flux walls).
double mass(std::span<const double> density, const SpatialGrid& grid);

std::vector<double> delta_init(const SpatialGrid& grid, double y0);

DensitySurface solve_forward(const DriftModel& drift, NoiseIntensity eps, const SpatialGrid& grid,
                             const TimeGrid& times, double y1, const SchemeOptions& opts = {});

DensitySurface solve_backward(const DriftModel& drift, NoiseIntensity eps,
                              const SpatialGrid& grid, const TimeGrid& times, double y3,
                              const SchemeOptions& opts = {});

/// Backward solve from an arbitrary terminal function u(., T); u(y, t) is
/// then E[u(Y_T) | Y_t = y]. With an indicator terminal this is a hitting
/// probability.
DensitySurface solve_backward_terminal(const DriftModel& drift, NoiseIntensity eps,
                                       const SpatialGrid& grid, const TimeGrid& times,
                                       std::span<const double> terminal, double anchor,
                                       const SchemeOptions& opts = {});

/// Cell averages of the indicator of [centre - half_width, centre + half_width].
std::vector<double> window_indicator(const SpatialGrid& grid, double centre, double half_width);

/// Linear interpolation of nodal values at y (flat beyond the outer nodes).
double interpolate(std::span<const double> values, const SpatialGrid& grid, double y);

/// Normalised exp(-2 V / eps^2) on the grid nodes.
std::vector<double> stationary_density(const DriftModel& drift, NoiseIntensity eps,
                                       const SpatialGrid& grid);

/// h * sum_i a[i] b[i].
double pairing(std::span<const double> a, std::span<const double> b, const SpatialGrid& grid);

/// Mean of a density slice, h * sum y_i p_i.
double mean(std::span<const double> density, const SpatialGrid& grid);

}  // namespace thc
