#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "thc/fpe.hpp"

using namespace thc;

namespace {

const DriftModel kCessi(CessiReduced{1.1, 6.2});

double gaussian(double y, double mean, double var) {
  return std::exp(-(y - mean) * (y - mean) / (2 * var)) / std::sqrt(2 * std::numbers::pi * var);
}

double l1(std::span<const double> a, const std::vector<double>& b, const SpatialGrid& grid) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s * grid.spacing();
}

std::vector<double> gaussian_on(const SpatialGrid& grid, double mean, double var) {
  std::vector<double> out(grid.n_cells());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gaussian(grid.node(i), mean, var);
  return out;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_CASE("grid construction") {
  const SpatialGrid g(-1.0, 2.5, 800);
  CHECK(g.spacing() == doctest::Approx(3.5 / 800));
  CHECK(g.node(0) == doctest::Approx(-1.0 + 0.5 * g.spacing()));
  CHECK(g.face(800) == doctest::Approx(2.5));
  CHECK(g.nodes().size() == 800);
  CHECK_THROWS_AS(SpatialGrid(0.0, 1.0, 63), std::invalid_argument);
  CHECK_THROWS_AS(SpatialGrid(1.0, 1.0, 100), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid(0.0, 10.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(TimeGrid(1.0, 0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(NoiseIntensity(0.0), std::invalid_argument);
  CHECK_THROWS_AS(NoiseIntensity(-0.1), std::invalid_argument);
  const TimeGrid t(0.0, 10.0, 4000);
  CHECK(t.dt() == doctest::Approx(0.0025));
  CHECK(t.time(4000) == 10.0);
}

TEST_CASE("delta initial condition") {
  const SpatialGrid g(0.0, 1.0, 100);
  const double h = g.spacing();
  auto on_node = delta_init(g, g.node(37));
  CHECK(on_node[37] == doctest::Approx(1.0 / h));
  CHECK(std::count_if(on_node.begin(), on_node.end(), [](double v) { return v != 0.0; }) == 1);

  auto mid = delta_init(g, 0.5 * (g.node(10) + g.node(11)));
  CHECK(mid[10] == doctest::Approx(0.5 / h));
  CHECK(mid[11] == doctest::Approx(0.5 / h));

  for (double y0 : {0.0001, 0.1234567, 0.5, 0.77777, 0.9999}) {
    const auto d = delta_init(g, y0);
    CHECK(mass(d, g) == doctest::Approx(1.0).epsilon(1e-14));
    if (y0 > g.node(0) && y0 < g.node(99)) CHECK(mean(d, g) == doctest::Approx(y0).epsilon(1e-13));
  }
  CHECK_THROWS_AS(delta_init(g, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(delta_init(g, 0.0), std::invalid_argument);
}

TEST_CASE("mass") {
  const SpatialGrid g(-1.0, 2.5, 800);
  std::vector<double> uniform(800, 1.0 / 3.5);
  CHECK(mass(uniform, g) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(mass(stationary_density(kCessi, NoiseIntensity(0.2), g), g) == doctest::Approx(1.0).epsilon(1e-10));
  std::vector<double> wrong(10, 0.0);
  CHECK_THROWS_AS(mass(wrong, g), std::invalid_argument);
}

TEST_CASE("stationary density") {
  SUBCASE("OU is Gaussian with variance eps^2/(2k)") {
    const SpatialGrid g(-3.0, 3.0, 1200);
    const double k = 1.5, eps = 0.4;
    const auto s = stationary_density(DriftModel(LinearOU{k}), NoiseIntensity(eps), g);
    CHECK(l1(s, gaussian_on(g, 0.0, eps * eps / (2 * k)), g) < 1e-6);
  }
  SUBCASE("Cessi is bimodal at the stable equilibria") {
    const SpatialGrid g(-1.0, 2.5, 800);
    const auto s = stationary_density(kCessi, NoiseIntensity(0.2), g);
    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] > s[i - 1] && s[i] >= s[i + 1]) peaks.push_back(i);
    }
    REQUIRE(peaks.size() == 2);
    CHECK(std::abs(g.node(peaks[0]) - 0.2402) <= g.spacing());
    CHECK(std::abs(g.node(peaks[1]) - 1.0687) <= g.spacing());
  }
  SUBCASE("zero drift is uniform") {
    const SpatialGrid g(-1.0, 2.5, 800);
    const auto s = stationary_density(DriftModel(ZeroDrift{}), NoiseIntensity(0.2), g);
    for (double v : s) CHECK(v == doctest::Approx(1.0 / 3.5).epsilon(1e-12));
  }
}

TEST_CASE("forward solve matches the heat kernel") {
  const SpatialGrid g(-2.0, 2.0, 800);
  const double eps = 0.2;
  const TimeGrid times(0.0, 2.0, 800);
  const auto p = solve_forward(DriftModel(ZeroDrift{}), NoiseIntensity(eps), g, times, 0.0);
  for (std::size_t n : {200u, 400u, 800u}) {
    const double t = times.time(n);
    CHECK(l1(p.slice(n), gaussian_on(g, 0.0, eps * eps * t), g) < 1e-3);
  }
}

TEST_CASE("forward OU mean decays exponentially") {
  const SpatialGrid g(-2.0, 3.0, 1000);
  const double k = 0.7;
  const TimeGrid times(0.0, 5.0, 2000);
  const auto p = solve_forward(DriftModel(LinearOU{k}), NoiseIntensity(0.3), g, times, 1.0);
  for (std::size_t n = 0; n <= 2000; n += 100) {
    CHECK(std::abs(mean(p.slice(n), g) - std::exp(-k * times.time(n))) < 1e-3);
  }
}

TEST_CASE("forward Cessi solve approaches the Boltzmann density") {
  const SpatialGrid g(-1.0, 2.5, 800);
  const NoiseIntensity eps(0.2);
  const TimeGrid times(0.0, 400.0, 8000);
  const auto p = solve_forward(kCessi, eps, g, times, 0.2402);
  const auto s = stationary_density(kCessi, eps, g);
  CHECK(l1(p.slice(times.n_steps()), s, g) < 1e-2);
}

TEST_CASE("forward invariants on the default configuration") {
  const SpatialGrid g(-1.0, 2.5, 800);
  const TimeGrid times(0.0, 10.0, 4000);
  for (double eps : {0.2, 0.25}) {
    const auto p = solve_forward(kCessi, NoiseIntensity(eps), g, times, 0.2402);
    CHECK(p.diagnostics.max_mass_drift <= 1e-6);
    CHECK(p.diagnostics.min_before_clamp >= -1e-12);
    for (double v : p.values()) REQUIRE(v >= 0.0);
    for (std::size_t n = 0; n < p.n_slices(); n += 97) {
      CHECK(std::abs(mass(p.slice(n), g) - 1.0) <= 1e-6);
    }
    CHECK(p.n_slices() == 4001);
  }
}

TEST_CASE("backward solve") {
  SUBCASE("zero drift matches the reversed heat kernel") {
    const SpatialGrid g(-2.0, 2.0, 800);
    const double eps = 0.2, y3 = 0.0;
    const TimeGrid times(0.0, 2.0, 800);
    const auto b = solve_backward(DriftModel(ZeroDrift{}), NoiseIntensity(eps), g, times, y3);
    for (std::size_t n : {0u, 400u, 600u}) {
      const double tau = 2.0 - times.time(n);
      CHECK(l1(b.slice(n), gaussian_on(g, y3, eps * eps * tau), g) < 1e-3);
    }
  }
  SUBCASE("zero drift time reversal against the forward solve") {
    const double y3 = 0.3;
    const SpatialGrid g(y3 - 2.0, y3 + 2.0, 800);
    const TimeGrid times(0.0, 2.0, 800);
    const DriftModel zero(ZeroDrift{});
    const auto b = solve_backward(zero, NoiseIntensity(0.2), g, times, y3);
    const auto f = solve_forward(zero, NoiseIntensity(0.2), g, times, y3);
    double worst = 0.0;
    for (std::size_t n = 0; n <= 800; ++n) {
      const auto gs = b.slice(n);
      const auto fs = f.slice(800 - n);
      worst = std::max(worst, l1(gs, std::vector<double>(fs.begin(), fs.end()), g));
    }
    CHECK(worst < 1e-6);
  }
  SUBCASE("concentrates at y3 near the terminal time") {
    const SpatialGrid g(-1.0, 2.5, 800);
    const TimeGrid times(0.0, 10.0, 4000);
    const auto b = solve_backward(kCessi, NoiseIntensity(0.2), g, times, 1.0687);
    for (std::size_t n = 3990; n <= 4000; ++n) {
      CHECK(std::abs(g.node(argmax(b.slice(n))) - 1.0687) <= g.spacing());
    }
  }
  SUBCASE("Chapman-Kolmogorov pairing is constant") {
    const SpatialGrid g(-1.0, 2.5, 800);
    const TimeGrid times(0.0, 10.0, 4000);
    for (double eps : {0.2, 0.25}) {
      const auto f = solve_forward(kCessi, NoiseIntensity(eps), g, times, 0.2402);
      const auto b = solve_backward(kCessi, NoiseIntensity(eps), g, times, 1.0687);
      double lo = 1e300, hi = -1e300;
      for (std::size_t n = 0; n <= 4000; ++n) {
        const double v = pairing(b.slice(n), f.slice(n), g);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      CHECK(hi > 0.0);
      CHECK((hi - lo) / hi < 0.01);
      CHECK((hi - lo) / hi < 1e-9);  // discrete adjoint: constant to rounding
      // The constant is the forward transition density at y3.
      CHECK(hi == doctest::Approx(interpolate(f.slice(4000), g, 1.0687)).epsilon(1e-9));
    }
  }
  SUBCASE("indicator terminal gives a probability") {
    const SpatialGrid g(-1.0, 2.5, 800);
    const TimeGrid times(0.0, 10.0, 4000);
    const auto u = solve_backward_terminal(kCessi, NoiseIntensity(0.25), g, times,
                                           window_indicator(g, 1.0687, 0.05), 1.0687);
    for (double v : u.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("window indicator and interpolation") {
  const SpatialGrid g(0.0, 1.0, 100);
  const auto w = window_indicator(g, 0.5, 0.105);
  CHECK(mass(w, g) == doctest::Approx(0.21).epsilon(1e-12));
  CHECK(w[50] == 1.0);
  CHECK(w[0] == 0.0);
  std::vector<double> lin(100);
  for (std::size_t i = 0; i < 100; ++i) lin[i] = 2.0 * g.node(i) + 1.0;
  CHECK(interpolate(lin, g, 0.4321) == doctest::Approx(1.8642));
}

TEST_CASE("grid convergence is second order") {
  const NoiseIntensity eps(0.2);
  std::vector<std::vector<double>> finals;
  std::vector<SpatialGrid> grids;
  for (std::size_t m : {1u, 2u, 4u}) {
    const SpatialGrid g(-1.0, 2.5, 200 * m);
    const TimeGrid times(0.0, 10.0, 1000 * m);
    const auto p = solve_forward(kCessi, eps, g, times, 0.2402);
    const auto last = p.slice(times.n_steps());
    finals.emplace_back(last.begin(), last.end());
    grids.push_back(g);
  }
  // Restrict to the coarse grid by averaging pairs of fine cells.
  auto restrict_to = [](const std::vector<double>& fine) {
    std::vector<double> out(fine.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (fine[2 * i] + fine[2 * i + 1]);
    return out;
  };
  const double e1 = l1(finals[0], restrict_to(finals[1]), grids[0]);
  const double e2 = l1(finals[1], restrict_to(finals[2]), grids[1]);
  MESSAGE("successive differences " << e1 << ", " << e2);
  CHECK(e1 / e2 >= 3.0);
}

TEST_CASE("solver rejects bad input") {
  const SpatialGrid g(-1.0, 2.5, 800);
  const TimeGrid times(0.0, 1.0, 100);
  CHECK_THROWS_AS(solve_forward(kCessi, NoiseIntensity(0.2), g, times, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(solve_backward(kCessi, NoiseIntensity(0.2), g, times, -1.5), std::invalid_argument);
  std::vector<double> short_terminal(10, 0.0);
  CHECK_THROWS_AS(solve_backward_terminal(kCessi, NoiseIntensity(0.2), g, times, short_terminal, 0.0),
                  std::invalid_argument);
}
