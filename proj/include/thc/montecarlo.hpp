#pragma once

// Euler-Maruyama ensembles of dY = f(Y) dt + eps dB, used as an independent
// check on the finite-difference solvers.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "thc/fpe.hpp"
#include "thc/model.hpp"

namespace thc {

struct EnsembleConfig {
  std::size_t n_paths = 100000;
  double dt_sde = 1e-3;
  std::uint64_t seed = 20200101;
  bool reflect_at_bounds = true;
  /// 0 picks std::thread::hardware_concurrency(). Results do not depend on it.
  unsigned threads = 0;

  void validate() const;
};

/// Random source: one std::mt19937_64 per batch of kPathsPerBatch paths,
/// seeded with splitmix64(seed, batch index); normals by the Marsaglia polar
/// method, both coordinates taken from the two 32-bit halves of one draw
/// (no std::normal_distribution, whose algorithm is implementation-defined).
inline constexpr const char* kRngId = "mt19937_64/splitmix64-batch-substreams/marsaglia-polar-32x2";
inline constexpr std::size_t kPathsPerBatch = 4096;

struct HistogramSurface {
  SpatialGrid grid;
  std::vector<double> times;
  std::vector<double> density;  // row-major [time][cell], counts / (n_paths * h)
  std::size_t n_paths = 0;
  std::size_t dropped = 0;      // paths that left the grid (reflection off)

  std::span<const double> slice(std::size_t n) const {
    return {density.data() + n * grid.n_cells(), grid.n_cells()};
  }
  double dropped_fraction() const {
    return n_paths ? static_cast<double>(dropped) / static_cast<double>(n_paths) : 0.0;
  }
};

/// Simulates n_paths paths from y0 over [t_start, max(output_times)] and
/// histograms them at each output time (rounded to the nearest SDE step).
HistogramSurface euler_maruyama_ensemble(const DriftModel& drift, NoiseIntensity eps, double y0,
                                         const SpatialGrid& grid,
                                         std::span<const double> output_times,
                                         const EnsembleConfig& cfg, double t_start = 0.0);

struct HittingEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  std::size_t hits = 0;
  std::size_t n_paths = 0;
};

/// Fraction of paths started at (y, t) that lie within `window` of y3 at
/// time `horizon`. Reflection at grid bounds follows cfg.
HittingEstimate estimate_hitting_probability(const DriftModel& drift, NoiseIntensity eps,
                                             double y, double t, double y3, double horizon,
                                             double window, const SpatialGrid& grid,
                                             const EnsembleConfig& cfg);

/// h * sum |a - b|.
double l1_distance(std::span<const double> a, std::span<const double> b, const SpatialGrid& grid);

}  // namespace thc
