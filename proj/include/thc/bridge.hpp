#pragma once

// Bridge density p(y,t | Y(T)=y_end, Y(0)=y_start), the maximum-likelihood
// path psi(t) = argmax_y of that density, and jump detection on psi.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "thc/fpe.hpp"
#include "thc/model.hpp"

namespace thc {

struct BridgeSpec {
  double y_start = 0.2402;
  double y_end = 1.0687;
  double horizon = 10.0;

  /// Throws std::invalid_argument if the horizon is not positive or an
  /// endpoint lies outside the grid.
  void validate(const SpatialGrid& grid) const;
};

enum class Refinement { grid_argmax, quadratic_subgrid };

/// What multiplies the forward density inside the argmax.
///  - kolmogorov: g(y,t) = p(y_end, T | y, t), the backward Kolmogorov
///    solution. This is the exact bridge factor.
///  - reversed_forward_density: the forward density started at y_end and
///    evaluated at T - t. Differs from the exact factor by rho(y_end)/rho(y)
///    for a reversible drift; kept for comparison runs only.
enum class BackwardFactor { kolmogorov, reversed_forward_density };

std::string to_string(Refinement r);
std::string to_string(BackwardFactor f);

struct MLPath {
  std::vector<double> times;
  std::vector<double> psi;
  std::vector<std::size_t> argmax_index;
  /// Location of a second mode whose height is within kTieTolerance of the
  /// first (NaN when the slice mode is unique). psi always holds the smaller y.
  std::vector<double> psi_alternate;
  Refinement refinement = Refinement::quadratic_subgrid;
  std::size_t log_space_slices = 0;
  std::size_t tied_slices = 0;
};

struct JumpEvent {
  double t_jump = 0.0;
  double y_before = 0.0;
  double y_after = 0.0;
  double gap = 0.0;
  std::size_t step = 0;  // jump happens between times[step] and times[step+1]
};

struct SweepRecord {
  double epsilon = 0.0;
  std::optional<double> t_jump;
  double gap = 0.0;
  bool converged = false;
  std::optional<JumpEvent> jump;
  double max_mass_drift = 0.0;
  std::size_t clamp_events = 0;
  std::size_t total_nodes = 0;
  std::string error;
};

inline constexpr double kDefaultJumpThreshold = 0.3;
/// Two local maxima whose heights differ by less than this relative amount
/// are treated as a tie.
inline constexpr double kTieTolerance = 1e-9;
/// Below this slice maximum the product is formed as log g + log p.
inline constexpr double kUnderflowGuard = 1e-280;

/// Pointwise g * p. With `normalize`, every slice is rescaled to unit mass
/// (computed through logs when either factor is near underflow).
DensitySurface bridge_density(const DensitySurface& forward, const DensitySurface& backward,
                              bool normalize);

MLPath ml_path(const DensitySurface& forward, const DensitySurface& backward,
               Refinement refinement = Refinement::quadratic_subgrid);

/// Argmax path of an already formed product surface. Endpoints are pinned to
/// y_start and y_end.
MLPath ml_path_from_product(const DensitySurface& product, double y_start, double y_end,
                            Refinement refinement = Refinement::quadratic_subgrid);

/// Largest single-step displacement of psi, reported when it exceeds
/// `threshold`. t_jump is the midpoint of that step.
std::optional<JumpEvent> detect_jump(const MLPath& path, double threshold = kDefaultJumpThreshold);

/// max over stored t of |psi(T - t) + psi(t)|. At tied slices either mode
/// may be used, since the maximum-likelihood state is then a set.
double antisymmetry_defect(const MLPath& path);

struct BridgeOptions {
  BackwardFactor backward_factor = BackwardFactor::kolmogorov;
  Refinement refinement = Refinement::quadratic_subgrid;
  SchemeOptions scheme;
};

struct BridgeRun {
  DensitySurface forward;
  DensitySurface backward;
  MLPath path;
  std::optional<JumpEvent> jump;
};

/// Backward factor according to `factor`.
DensitySurface solve_backward_factor(const DriftModel& drift, NoiseIntensity eps,
                                     const SpatialGrid& grid, const TimeGrid& times, double y_end,
                                     BackwardFactor factor, const SchemeOptions& scheme = {});

BridgeRun run_bridge(const DriftModel& drift, NoiseIntensity eps, const BridgeSpec& spec,
                     const SpatialGrid& grid, const TimeGrid& times, double threshold,
                     const BridgeOptions& options = {});

struct SweepOptions {
  BridgeOptions bridge;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

/// One record per epsilon, in input order. Failures are recorded per
/// epsilon (converged = false, error set); the remaining values still run.
std::vector<SweepRecord> sweep_noise(const DriftModel& drift, const BridgeSpec& spec,
                                     const std::vector<double>& eps_list,
                                     const SpatialGrid& grid, const TimeGrid& times,
                                     double threshold, const SweepOptions& options = {});

}  // namespace thc
