#include "thc/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>

namespace thc {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class NormalSource {
 public:
  NormalSource(std::uint64_t seed, std::uint64_t batch)
      : engine_(splitmix64(seed ^ splitmix64(batch + 0x632BE59BD9B4E019ULL))) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      // Both coordinates from one 64-bit draw, 32 bits each.
      const std::uint64_t bits = engine_();
      u = static_cast<double>(bits >> 32) * 0x1.0p-31 - 1.0;
      v = static_cast<double>(bits & 0xFFFFFFFFULL) * 0x1.0p-31 - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Mirror at the walls until inside.
double reflect(double y, double lo, double hi) {
  for (int i = 0; i < 8 && (y < lo || y > hi); ++i) {
    if (y > hi) y = 2.0 * hi - y;
    if (y < lo) y = 2.0 * lo - y;
  }
  return std::clamp(y, lo, hi);
}

std::size_t steps_to(double t, double t_start, double dt) {
  const double s = (t - t_start) / dt;
  if (s < -1e-9) throw std::invalid_argument("output time precedes the start time");
  return static_cast<std::size_t>(std::llround(std::max(0.0, s)));
}

std::size_t bin_of(double y, const SpatialGrid& grid) {
  const auto b = static_cast<long long>(std::floor((y - grid.y_min()) / grid.spacing()));
  return static_cast<std::size_t>(std::clamp<long long>(b, 0, static_cast<long long>(grid.n_cells()) - 1));
}

// Runs batches in parallel; `batch_fn(batch_index, first_path, count)`.
template <class Fn>
void for_each_batch(std::size_t n_paths, unsigned threads, Fn&& batch_fn) {
  const std::size_t n_batches = (n_paths + kPathsPerBatch - 1) / kPathsPerBatch;
  unsigned workers = threads ? threads : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_batches)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t b = next++; b < n_batches; b = next++) {
      const std::size_t first = b * kPathsPerBatch;
      batch_fn(b, first, std::min(kPathsPerBatch, n_paths - first));
    }
  };
  if (workers == 1) {
    work();
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
}


template <class Drift>
HistogramSurface ensemble_impl(Drift drift, NoiseIntensity eps, double y0, const SpatialGrid& grid,
                               std::span<const double> output_times, const EnsembleConfig& cfg,
                               double t_start) {
  cfg.validate();
  if (!grid.contains(y0)) throw std::invalid_argument("y0 outside the grid");
  if (output_times.empty()) throw std::invalid_argument("no output times requested");

  std::vector<std::size_t> out_steps;
  for (double t : output_times) out_steps.push_back(steps_to(t, t_start, cfg.dt_sde));
  if (!std::is_sorted(out_steps.begin(), out_steps.end())) {
    throw std::invalid_argument("output times must be ascending");
  }
  const std::size_t n_out = out_steps.size();
  const std::size_t n_cells = grid.n_cells();
  const std::size_t total_steps = out_steps.back();

  const std::size_t n_batches = (cfg.n_paths + kPathsPerBatch - 1) / kPathsPerBatch;
  std::vector<std::vector<std::uint64_t>> batch_counts(n_batches);
  std::vector<std::size_t> batch_dropped(n_batches, 0);
  std::vector<std::string> batch_errors(n_batches);

  const double dt = cfg.dt_sde;
  const double noise_scale = eps.value() * std::sqrt(dt);
  const double lo = grid.y_min(), hi = grid.y_max();

  for_each_batch(cfg.n_paths, cfg.threads, [&](std::size_t b, std::size_t, std::size_t count) {
    NormalSource normal(cfg.seed, b);
    std::vector<double> y(count, y0);
    std::vector<char> alive(count, 1);
    std::vector<std::uint64_t> counts(n_out * n_cells, 0);
    std::size_t dropped = 0;
    std::size_t next_out = 0;
    auto record = [&](std::size_t slot) {
      for (std::size_t j = 0; j < count; ++j) {
        if (alive[j]) ++counts[slot * n_cells + bin_of(y[j], grid)];
      }
    };
    while (next_out < n_out && out_steps[next_out] == 0) record(next_out++);
    for (std::size_t step = 1; step <= total_steps; ++step) {
      for (std::size_t j = 0; j < count; ++j) {
        // Dead paths still draw so every path keeps its own noise sequence.
        const double xi = normal();
        if (!alive[j]) continue;
        double v = y[j] + drift(y[j]) * dt + noise_scale * xi;
        if (!std::isfinite(v)) {
          batch_errors[b] = "non-finite Euler-Maruyama state at step " + std::to_string(step);
          return;
        }
        if (v < lo || v > hi) {
          if (cfg.reflect_at_bounds) {
            v = reflect(v, lo, hi);
          } else {
            alive[j] = 0;
            ++dropped;
            continue;
          }
        }
        y[j] = v;
      }
      while (next_out < n_out && out_steps[next_out] == step) record(next_out++);
    }
    batch_counts[b] = std::move(counts);
    batch_dropped[b] = dropped;
  });

  for (const auto& err : batch_errors) {
    if (!err.empty()) throw SolverError(err);
  }

  HistogramSurface out{grid, {}, std::vector<double>(n_out * n_cells, 0.0), cfg.n_paths, 0};
  for (std::size_t k = 0; k < n_out; ++k) out.times.push_back(t_start + out_steps[k] * dt);
  std::vector<std::uint64_t> total(n_out * n_cells, 0);
  for (std::size_t b = 0; b < n_batches; ++b) {
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += batch_counts[b][i];
    out.dropped += batch_dropped[b];
  }
  const double norm = 1.0 / (static_cast<double>(cfg.n_paths) * grid.spacing());
  for (std::size_t i = 0; i < total.size(); ++i) out.density[i] = static_cast<double>(total[i]) * norm;
  return out;
}

template <class Drift>
HittingEstimate hitting_impl(Drift drift, NoiseIntensity eps, double y, double t, double y3,
                             double horizon, double window, const SpatialGrid& grid,
                             const EnsembleConfig& cfg) {
  cfg.validate();
  if (!(window > 0.0)) throw std::invalid_argument("window must be positive");
  if (!(t < horizon)) throw std::invalid_argument("start time must precede the horizon");

  const std::size_t n_steps = steps_to(horizon, t, cfg.dt_sde);
  const double dt = n_steps ? (horizon - t) / static_cast<double>(n_steps) : 0.0;
  const double noise_scale = eps.value() * std::sqrt(dt);
  const double lo = grid.y_min(), hi = grid.y_max();
  const std::size_t n_batches = (cfg.n_paths + kPathsPerBatch - 1) / kPathsPerBatch;
  std::vector<std::size_t> hits(n_batches, 0);
  std::vector<std::string> errors(n_batches);

  for_each_batch(cfg.n_paths, cfg.threads, [&](std::size_t b, std::size_t, std::size_t count) {
    NormalSource normal(cfg.seed, b);
    std::size_t local = 0;
    for (std::size_t j = 0; j < count; ++j) {
      double v = y;
      bool alive = true;
      for (std::size_t s = 0; s < n_steps; ++s) {
        v += drift(v) * dt + noise_scale * normal();
        if (!std::isfinite(v)) {
          errors[b] = "non-finite Euler-Maruyama state";
          return;
        }
        if (v < lo || v > hi) {
          if (!cfg.reflect_at_bounds) {
            alive = false;
            break;
          }
          v = reflect(v, lo, hi);
        }
      }
      if (alive && std::abs(v - y3) <= window) ++local;
    }
    hits[b] = local;
  });
  for (const auto& err : errors) {
    if (!err.empty()) throw SolverError(err);
  }

  HittingEstimate est;
  est.n_paths = cfg.n_paths;
  for (auto h : hits) est.hits += h;
  est.probability = static_cast<double>(est.hits) / static_cast<double>(cfg.n_paths);
  est.std_error = std::sqrt(est.probability * (1.0 - est.probability) / static_cast<double>(cfg.n_paths));
  return est;
}

}  // namespace

HistogramSurface euler_maruyama_ensemble(const DriftModel& drift, NoiseIntensity eps, double y0,
                                         const SpatialGrid& grid,
                                         std::span<const double> output_times,
                                         const EnsembleConfig& cfg, double t_start) {
  return std::visit(
      [&](const auto& kind) {
        return ensemble_impl([kind](double v) { return evaluate(kind, v); }, eps, y0, grid,
                             output_times, cfg, t_start);
      },
      drift.kind());
}

HittingEstimate estimate_hitting_probability(const DriftModel& drift, NoiseIntensity eps,
                                             double y, double t, double y3, double horizon,
                                             double window, const SpatialGrid& grid,
                                             const EnsembleConfig& cfg) {
  return std::visit(
      [&](const auto& kind) {
        return hitting_impl([kind](double v) { return evaluate(kind, v); }, eps, y, t, y3, horizon,
                            window, grid, cfg);
      },
      drift.kind());
}

void EnsembleConfig::validate() const {
  if (n_paths < 1) throw std::invalid_argument("n_paths must be at least 1");
  if (!(dt_sde > 0.0) || !std::isfinite(dt_sde)) throw std::invalid_argument("dt_sde must be positive");
}

double l1_distance(std::span<const double> a, std::span<const double> b, const SpatialGrid& grid) {
  if (a.size() != grid.n_cells() || b.size() != grid.n_cells()) {
    throw std::invalid_argument("slice length does not match grid");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * grid.spacing();
}

}  // namespace thc
