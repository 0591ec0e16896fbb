#include "thc/bridge.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace thc {
namespace {

void require_compatible(const DensitySurface& a, const DensitySurface& b) {
  if (!(a.grid() == b.grid()) || !(a.times() == b.times())) {
    throw std::invalid_argument("forward and backward surfaces use different grids");
  }
}

double slice_max(std::span<const double> v) { return *std::max_element(v.begin(), v.end()); }

// Fills `out` with g*p, or with exp(log g + log p - max) when either factor
// is close to underflow. Returns true when the log route was taken.
bool form_product(std::span<const double> p, std::span<const double> g, std::span<double> out) {
  const bool use_logs = slice_max(p) < kUnderflowGuard || slice_max(g) < kUnderflowGuard;
  if (!use_logs) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = g[i] * p[i];
    return false;
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double top = kNegInf;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (p[i] > 0.0 && g[i] > 0.0) ? std::log(g[i]) + std::log(p[i]) : kNegInf;
    top = std::max(top, out[i]);
  }
  for (double& v : out) v = top == kNegInf ? 0.0 : std::exp(v - top);
  return true;
}

struct SliceArgmax {
  std::size_t index;
  std::optional<std::size_t> alternate;
};

// Local maxima within kTieTolerance of the global maximum are tied; the one
// at the smallest y wins and the largest-y rival is kept as the alternate.
SliceArgmax argmax(std::span<const double> v) {
  const double top = slice_max(v);
  const double floor = top * (1.0 - kTieTolerance);
  std::optional<std::size_t> first, last;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < floor) continue;
    const bool rises = i == 0 || v[i] > v[i - 1];
    const bool falls = i + 1 == v.size() || v[i] >= v[i + 1];
    if (!rises || !falls) continue;
    if (!first) first = i;
    last = i;
  }
  if (!first) return {static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin()), {}};
  if (*last == *first) return {*first, {}};
  return {*first, last};
}

double refine(std::span<const double> v, std::size_t i, const SpatialGrid& grid) {
  const double y = grid.node(i);
  if (i == 0 || i + 1 >= v.size()) return y;
  const double left = v[i - 1], mid = v[i], right = v[i + 1];
  const double curvature = left - 2.0 * mid + right;
  if (!(curvature < 0.0)) return y;
  const double offset = 0.5 * (left - right) / curvature;
  // Vertex must stay inside the two cells bracketing the node.
  if (!(std::abs(offset) <= 1.0)) return y;
  return y + offset * grid.spacing();
}

void fill_path(MLPath& path, std::span<const double> product_slice, std::size_t n,
               const SpatialGrid& grid, Refinement refinement) {
  if (slice_max(product_slice) <= 0.0) {
    throw SolverError("bridge product vanishes at slice " + std::to_string(n) +
                      "; grid too narrow or noise too small for the horizon");
  }
  const auto [idx, alternate] = argmax(product_slice);
  auto locate = [&](std::size_t i) {
    return refinement == Refinement::quadratic_subgrid ? refine(product_slice, i, grid) : grid.node(i);
  };
  path.argmax_index[n] = idx;
  path.psi[n] = locate(idx);
  path.psi_alternate[n] = std::numeric_limits<double>::quiet_NaN();
  if (alternate) {
    ++path.tied_slices;
    path.psi_alternate[n] = locate(*alternate);
  }
}

MLPath make_path(const TimeGrid& times, Refinement refinement) {
  MLPath path;
  const std::size_t n = times.n_steps() + 1;
  path.times.resize(n);
  for (std::size_t k = 0; k < n; ++k) path.times[k] = times.time(k);
  path.psi.resize(n);
  path.argmax_index.resize(n);
  path.psi_alternate.resize(n);
  path.refinement = refinement;
  return path;
}

void pin_endpoints(MLPath& path, double y_start, double y_end) {
  path.psi.front() = y_start;
  path.psi.back() = y_end;
}

}  // namespace

void BridgeSpec::validate(const SpatialGrid& grid) const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw std::invalid_argument("bridge horizon must be positive");
  }
  if (!grid.contains(y_start)) throw std::invalid_argument("y_start outside the grid");
  if (!grid.contains(y_end)) throw std::invalid_argument("y_end outside the grid");
}

std::string to_string(Refinement r) {
  return r == Refinement::grid_argmax ? "grid-argmax" : "quadratic-subgrid";
}

std::string to_string(BackwardFactor f) {
  return f == BackwardFactor::kolmogorov ? "kolmogorov" : "reversed_forward";
}

DensitySurface bridge_density(const DensitySurface& forward, const DensitySurface& backward,
                              bool normalize) {
  require_compatible(forward, backward);
  DensitySurface out(forward.grid(), forward.times(), SurfaceKind::bridge, forward.anchor());
  for (std::size_t n = 0; n < out.n_slices(); ++n) {
    auto dst = out.slice(n);
    const auto p = forward.slice(n);
    const auto g = backward.slice(n);
    if (!normalize) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = g[i] * p[i];
      continue;
    }
    form_product(p, g, dst);
    const double m = mass(dst, out.grid());
    if (m > 0.0) {
      for (double& v : dst) v /= m;
    }
  }
  return out;
}

MLPath ml_path(const DensitySurface& forward, const DensitySurface& backward,
               Refinement refinement) {
  require_compatible(forward, backward);
  const auto& grid = forward.grid();
  MLPath path = make_path(forward.times(), refinement);
  std::vector<double> product(grid.n_cells());
  for (std::size_t n = 0; n < forward.n_slices(); ++n) {
    if (form_product(forward.slice(n), backward.slice(n), product)) ++path.log_space_slices;
    fill_path(path, product, n, grid, refinement);
  }
  pin_endpoints(path, forward.anchor(), backward.anchor());
  return path;
}

MLPath ml_path_from_product(const DensitySurface& product, double y_start, double y_end,
                            Refinement refinement) {
  MLPath path = make_path(product.times(), refinement);
  for (std::size_t n = 0; n < product.n_slices(); ++n) {
    fill_path(path, product.slice(n), n, product.grid(), refinement);
  }
  pin_endpoints(path, y_start, y_end);
  return path;
}

double antisymmetry_defect(const MLPath& path) {
  const std::size_t n = path.psi.size();
  auto modes = [&](std::size_t k) {
    std::vector<double> out{path.psi[k]};
    if (k < path.psi_alternate.size() && !std::isnan(path.psi_alternate[k])) out.push_back(path.psi_alternate[k]);
    return out;
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (double a : modes(k)) {
      for (double b : modes(n - 1 - k)) best = std::min(best, std::abs(a + b));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

std::optional<JumpEvent> detect_jump(const MLPath& path, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("jump threshold must be positive");
  if (path.psi.size() < 2) return std::nullopt;
  std::size_t best = 0;
  double best_gap = -1.0;
  for (std::size_t k = 0; k + 1 < path.psi.size(); ++k) {
    const double gap = std::abs(path.psi[k + 1] - path.psi[k]);
    if (gap > best_gap) {
      best_gap = gap;
      best = k;
    }
  }
  if (!(best_gap > threshold)) return std::nullopt;
  JumpEvent ev;
  ev.step = best;
  ev.t_jump = 0.5 * (path.times[best] + path.times[best + 1]);
  ev.y_before = path.psi[best];
  ev.y_after = path.psi[best + 1];
  ev.gap = best_gap;
  return ev;
}

DensitySurface solve_backward_factor(const DriftModel& drift, NoiseIntensity eps,
                                     const SpatialGrid& grid, const TimeGrid& times, double y_end,
                                     BackwardFactor factor, const SchemeOptions& scheme) {
  if (factor == BackwardFactor::kolmogorov) {
    return solve_backward(drift, eps, grid, times, y_end, scheme);
  }
  const auto from_end = solve_forward(drift, eps, grid, times, y_end, scheme);
  DensitySurface out(grid, times, SurfaceKind::backward, y_end);
  const std::size_t last = times.n_steps();
  for (std::size_t n = 0; n <= last; ++n) {
    const auto src = from_end.slice(last - n);
    std::copy(src.begin(), src.end(), out.slice(n).begin());
  }
  out.diagnostics = from_end.diagnostics;
  return out;
}

BridgeRun run_bridge(const DriftModel& drift, NoiseIntensity eps, const BridgeSpec& spec,
                     const SpatialGrid& grid, const TimeGrid& times, double threshold,
                     const BridgeOptions& options) {
  spec.validate(grid);
  if (std::abs(times.horizon() - spec.horizon) > 1e-12 * spec.horizon) {
    throw std::invalid_argument("time grid does not span the bridge horizon");
  }
  auto forward = solve_forward(drift, eps, grid, times, spec.y_start, options.scheme);
  auto backward = solve_backward_factor(drift, eps, grid, times, spec.y_end,
                                        options.backward_factor, options.scheme);
  auto path = ml_path(forward, backward, options.refinement);
  auto jump = detect_jump(path, threshold);
  return BridgeRun{std::move(forward), std::move(backward), std::move(path), jump};
}

std::vector<SweepRecord> sweep_noise(const DriftModel& drift, const BridgeSpec& spec,
                                     const std::vector<double>& eps_list,
                                     const SpatialGrid& grid, const TimeGrid& times,
                                     double threshold, const SweepOptions& options) {
  if (eps_list.empty()) throw std::invalid_argument("noise list is empty");
  if (!std::is_sorted(eps_list.begin(), eps_list.end())) {
    throw std::invalid_argument("noise list must be sorted ascending");
  }
  spec.validate(grid);

  std::vector<SweepRecord> records(eps_list.size());
  auto run_one = [&](std::size_t i) {
    SweepRecord& rec = records[i];
    rec.epsilon = eps_list[i];
    try {
      const auto run = run_bridge(drift, NoiseIntensity(eps_list[i]), spec, grid, times,
                                  threshold, options.bridge);
      rec.max_mass_drift = run.forward.diagnostics.max_mass_drift;
      rec.clamp_events = run.forward.diagnostics.clamp_events;
      rec.total_nodes = run.forward.diagnostics.total_nodes;
      if (run.jump) {
        rec.jump = run.jump;
        rec.t_jump = run.jump->t_jump;
        rec.gap = run.jump->gap;
        rec.converged = true;
      }
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "epsilon=" << eps_list[i] << ": " << e.what();
      rec.error = msg.str();
      rec.converged = false;
    }
  };

  unsigned workers = options.threads ? options.threads : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(eps_list.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < eps_list.size(); ++i) run_one(i);
    return records;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < eps_list.size(); i = next++) run_one(i);
    });
  }
  pool.clear();
  return records;
}

}  // namespace thc
