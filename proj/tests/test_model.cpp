#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "thc/log.hpp"
#include "thc/model.hpp"

using namespace thc;

namespace {

const NondimensionalParams kPaper{};  // f_bar 1.1, mu2 6.2

double centred_derivative(const DriftModel& f, double y) {
  const double h = 1e-6;
  return (f(y + h) - f(y - h)) / (2 * h);
}

}  // namespace

TEST_CASE("density difference") {
  const DimensionalParams p;
  CHECK(density_difference(35, 35, 10, 10, p) == 0.0);
  CHECK(density_difference(36, 35, 10, 10, p) == doctest::Approx(7.5e-4).epsilon(1e-12));
  CHECK(density_difference(35, 35, 20, 0, p) == doctest::Approx(-3.4e-3).epsilon(1e-12));
}

TEST_CASE("exchange function") {
  const DimensionalParams p;
  CHECK(exchange_function(0.0, p) == doctest::Approx(1.0 / p.t_d_diffusion_time).epsilon(1e-14));
  const double quad = exchange_function(3.4e-3, p) - exchange_function(0.0, p);
  CHECK(quad == doctest::Approx(9.18e-10).epsilon(1e-3));
  CHECK(1.0 / quad / kSecondsPerYear == doctest::Approx(34.5).epsilon(2e-3));
  const double quad2 = exchange_function(6.8e-3, p) - exchange_function(0.0, p);
  CHECK(quad2 / quad == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(advection_time_from_transport(p) / kSecondsPerYear == doctest::Approx(1.0 / (quad * kSecondsPerYear)));
}

TEST_CASE("dimensional drift") {
  DimensionalParams p;
  CHECK_THROWS_AS(drift_dimensional(1.0, 1.0, p), std::invalid_argument);
  p.f_freshwater_flux = 0.0;
  const double theta = p.theta_meridional_temp_difference;
  {
    const auto [dT, dS] = drift_dimensional(theta, 0.0, p);
    const double q = exchange_function(-p.alpha_t_thermal_expansion * -theta, p);
    CHECK(dT == doctest::Approx(-q * theta).epsilon(1e-14));
    CHECK(dS == 0.0);
  }
  p.f_freshwater_flux = 1e-10;
  {
    const auto [dT, dS] = drift_dimensional(0.0, 0.0, p);
    CHECK(dT == doctest::Approx(theta / p.t_r_relaxation_time).epsilon(1e-14));
    CHECK(dS == doctest::Approx(1e-10 * p.s0_reference_salinity / p.h_mean_ocean_depth).epsilon(1e-14));
  }
  {
    const auto [dT, dS] = drift_dimensional(20.0, 2.0, p);
    CHECK(std::isfinite(dT));
    CHECK(std::isfinite(dS));
    CHECK(dT == doctest::Approx(-8.624511071373278e-09).epsilon(1e-12));
    CHECK(dS == doctest::Approx(-8.616733293595501e-10).epsilon(1e-12));
  }
}

TEST_CASE("dimensional parameter validation names the field") {
  DimensionalParams p;
  p.q_transport_coefficient = -1.0;
  try {
    p.validate();
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("q_transport_coefficient") != std::string::npos);
  }
  NondimensionalParams nd;
  nd.alpha = 0.0;
  CHECK_THROWS_AS(nd.validate(), std::invalid_argument);
}

TEST_CASE("nondimensionalize") {
  DimensionalParams p;
  const auto nd = nondimensionalize(p, 1.1);
  CHECK(nd.alpha == doctest::Approx(219.0 * 365.25 / 25.0).epsilon(1e-12));
  CHECK(nd.alpha == doctest::Approx(3199.6).epsilon(1e-4));
  CHECK(nd.mu2 == doctest::Approx(219.0 / 35.0).epsilon(1e-12));
  CHECK(nd.mu2 == doctest::Approx(6.257).epsilon(1e-3));
  CHECK(nd.f_bar == 1.1);

  DimensionalParams same = p;
  same.t_r_relaxation_time = same.t_d_diffusion_time;
  CHECK(nondimensionalize(same, 1.1).alpha == doctest::Approx(1.0));

  SUBCASE("scale consistency") {
    DimensionalParams scaled = p;
    scaled.t_d_diffusion_time *= 3.7;
    scaled.t_r_relaxation_time *= 3.7;
    scaled.t_a_advection_time *= 3.7;
    const auto s = nondimensionalize(scaled, 1.1);
    CHECK(s.alpha == doctest::Approx(nd.alpha).epsilon(1e-14));
    CHECK(s.mu2 == doctest::Approx(nd.mu2).epsilon(1e-14));
  }

  SUBCASE("f_bar override wins over F with a warning") {
    std::vector<std::string> warnings;
    set_warning_sink([&](std::string_view w) { warnings.emplace_back(w); });
    DimensionalParams withF = p;
    withF.f_freshwater_flux = 1e-10;
    const auto w = nondimensionalize(withF, 0.9);
    set_warning_sink(nullptr);
    CHECK(w.f_bar == 0.9);
    CHECK(warnings.size() == 1);
  }
}

TEST_CASE("nondimensional 2D drift") {
  {
    const auto [dx, dy] = drift_2d({1.0, 1.0}, kPaper);
    CHECK(dx == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(dy == doctest::Approx(0.1).epsilon(1e-12));
  }
  {
    NondimensionalParams nd = kPaper;
    nd.f_bar = 0.0;
    const auto [dx, dy] = drift_2d({0.0, 0.0}, nd);
    CHECK(dx == doctest::Approx(nd.alpha));
    CHECK(dy == 0.0);
  }
  {
    const auto [dx, dy] = drift_2d({1.0, 0.2402}, kPaper);
    CHECK(std::abs(dy) < 5e-4);
  }
  for (double y = -1.0; y <= 2.5; y += 0.01) {
    CHECK(drift_2d({1.0, y}, kPaper).second == drift_reduced(y, kPaper));
  }
}

TEST_CASE("reduced drift") {
  CHECK(std::abs(drift_reduced(0.2402, kPaper)) < 5e-4);
  for (double mu2 : {0.5, 6.2, 20.0}) {
    NondimensionalParams nd = kPaper;
    nd.mu2 = mu2;
    CHECK(drift_reduced(0.0, nd) == nd.f_bar);
    CHECK(drift_reduced(1.0, nd) == doctest::Approx(nd.f_bar - 1.0).epsilon(1e-14));
  }
}

TEST_CASE("potential") {
  CHECK(potential(0.0, kPaper) == 0.0);
  const auto f = DriftModel::cessi(kPaper);
  for (int i = 0; i < 1000; ++i) {
    const double y = -1.0 + 3.5 * i / 999.0;
    const double h = 1e-5;
    const double dv = (potential(y + h, kPaper) - potential(y - h, kPaper)) / (2 * h);
    CHECK(std::abs(dv + drift_reduced(y, kPaper)) < 1e-8);
    CHECK(f.potential(y) == doctest::Approx(potential(y, kPaper)).epsilon(1e-14));
  }
  const auto eq = find_equilibria(kPaper);
  REQUIRE(eq.size() == 3);
  const double h = 1e-6;
  CHECK(std::abs((potential(eq[0].y + h, kPaper) - potential(eq[0].y - h, kPaper)) / (2 * h)) < 1e-8);
  CHECK(potential(eq[1].y, kPaper) > potential(eq[0].y, kPaper));
  CHECK(potential(eq[1].y, kPaper) > potential(eq[2].y, kPaper));
}

TEST_CASE("other drift kinds") {
  const DriftModel dw(DoubleWell{1.0, 1.0});
  CHECK(dw(0.5) == doctest::Approx(0.5 - 0.125));
  CHECK(dw.potential(1.0) == doctest::Approx(-0.25));
  const DriftModel ou(LinearOU{2.0});
  CHECK(ou(0.3) == doctest::Approx(-0.6));
  CHECK(ou.potential(1.0) == doctest::Approx(1.0));
  CHECK(ou.derivative(7.0) == -2.0);
  const DriftModel zero(ZeroDrift{});
  CHECK(zero(3.0) == 0.0);
  CHECK(zero.potential(3.0) == 0.0);
  for (const auto& d : {dw, ou, DriftModel::cessi(kPaper)}) {
    for (double y = -1.0; y <= 2.5; y += 0.05) {
      CHECK(d.derivative(y) == doctest::Approx(centred_derivative(d, y)).epsilon(1e-6));
    }
  }
}

TEST_CASE("equilibria of the paper regime") {
  const auto eq = find_equilibria(kPaper);
  REQUIRE(eq.size() == 3);
  CHECK(std::abs(eq[0].y - 0.2402) < 1e-4);
  CHECK(std::abs(eq[1].y - 0.6911) < 1e-4);
  CHECK(std::abs(eq[2].y - 1.0687) < 1e-4);
  CHECK(eq[0].stability == Stability::stable);
  CHECK(eq[1].stability == Stability::unstable);
  CHECK(eq[2].stability == Stability::stable);
}

TEST_CASE("equilibrium invariants") {
  for (double f_bar : {0.0, 0.8, 1.1, 1.3}) {
    for (double mu2 : {0.5, 3.0, 6.2, 10.0}) {
      NondimensionalParams nd;
      nd.f_bar = f_bar;
      nd.mu2 = mu2;
      const auto f = DriftModel::cessi(nd);
      const auto eq = find_equilibria(f);
      REQUIRE(!eq.empty());
      for (std::size_t i = 0; i < eq.size(); ++i) {
        CHECK(std::abs(f(eq[i].y)) <= 1e-10);
        CHECK((eq[i].derivative < 0) == (centred_derivative(f, eq[i].y) < 0));
        CHECK((eq[i].stability == Stability::stable) == (eq[i].derivative < 0));
        if (i > 0) CHECK(eq[i].y - eq[i - 1].y > 1e-8);
      }
    }
  }
}

TEST_CASE("monostable regimes") {
  NondimensionalParams nd;
  nd.f_bar = 0.0;
  auto eq = find_equilibria(nd);
  REQUIRE(eq.size() == 1);
  CHECK(std::abs(eq[0].y) < 1e-12);
  CHECK(eq[0].stability == Stability::stable);

  nd.f_bar = 1.1;
  nd.mu2 = 0.5;
  eq = find_equilibria(nd);
  REQUIRE(eq.size() == 1);
  CHECK(eq[0].stability == Stability::stable);
  // Independent brute-force sign scan.
  int changes = 0;
  for (int i = 0; i < 100000; ++i) {
    const double a = -1.0 + 3.5 * i / 100000.0, b = -1.0 + 3.5 * (i + 1) / 100000.0;
    if ((drift_reduced(a, nd) > 0) != (drift_reduced(b, nd) > 0)) ++changes;
  }
  CHECK(changes == 1);
}

TEST_CASE("degenerate root is unstable with a warning") {
  // f(y) = -y^3 has f'(0) = 0.
  std::vector<std::string> warnings;
  set_warning_sink([&](std::string_view w) { warnings.emplace_back(w); });
  // A scan node lands exactly on y = 0.
  const auto eq = find_equilibria(DriftModel(DoubleWell{0.0, 1.0}), {-1.0, 1.0});
  set_warning_sink(nullptr);
  REQUIRE(eq.size() == 1);
  CHECK(eq[0].y == 0.0);
  CHECK(eq[0].derivative == 0.0);
  CHECK(eq[0].stability == Stability::unstable);
  CHECK(warnings.size() == 1);
}

TEST_CASE("fast temperature relaxation") {
  const NondimensionalParams nd = kPaper;
  const double a = nd.alpha;
  SUBCASE("x relaxes onto the slow manifold within 10/alpha") {
    const double step = 1e-6;
    const auto traj = integrate_deterministic_2d(nd, {0.0, 0.2402}, 10.0 / a, step);
    const auto s = traj.back();
    const double c = 1.0 + nd.mu2 * (s.x - s.y) * (s.x - s.y);
    const double x_star = a / (a + c);
    CHECK(std::abs(s.x - x_star) <= 2.0 / a);
    CHECK(std::abs(s.x - 1.0) <= (c + 2.0) / a);
  }
  SUBCASE("(1, y1) is a fixed point up to O(1/alpha)") {
    const auto traj = integrate_deterministic_2d(nd, {1.0, 0.2402}, 20.0, 1e-3);
    // The 2D fixed point, found on the slow manifold x = alpha/(alpha + c).
    auto residual = [&](double y) {
      double x = 1.0;
      for (int i = 0; i < 50; ++i) x = a / (a + 1.0 + nd.mu2 * (x - y) * (x - y));
      return std::pair{nd.f_bar - y * (1.0 + nd.mu2 * (x - y) * (x - y)), x};
    };
    double lo = 0.2, hi = 0.3;
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      (residual(mid).first > 0 ? lo : hi) = mid;
    }
    const double y_fp = 0.5 * (lo + hi), x_fp = residual(y_fp).second;
    CHECK(std::abs(x_fp - 1.0) <= 5.0 / a);
    CHECK(std::abs(y_fp - 0.2402) <= 5.0 / a);
    for (const auto& s : traj) {
      CHECK(std::abs(s.x - 1.0) <= 5.0 / a);
      CHECK(std::abs(s.y - 0.2402) <= 1e-3 + std::abs(y_fp - 0.2402));
    }
  }
  SUBCASE("large-alpha y dynamics follow the reduced drift") {
    const double step = 1e-4, horizon = 5.0;
    const auto traj = integrate_deterministic_2d(nd, {1.0, 0.5}, horizon, step);
    double y = 0.5, worst = 0.0;
    for (std::size_t i = 1; i < traj.size(); ++i) {
      y += step * drift_reduced(y, nd);
      worst = std::max(worst, std::abs(traj[i].y - y));
    }
    CHECK(worst <= 10.0 / a);
  }
}

TEST_CASE("drift model is deterministic and finite on the working interval") {
  const auto f = DriftModel::cessi(kPaper);
  for (double y = -1.0; y <= 2.5; y += 0.001) {
    CHECK(std::isfinite(f(y)));
    CHECK(f(y) == f(y));
  }
  CHECK(f.name().find("cessi") != std::string::npos);
}
