#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "thc/bridge.hpp"
#include "thc/fpe.hpp"
#include "thc/model.hpp"
#include "thc/montecarlo.hpp"

namespace py = pybind11;

namespace {

py::array_t<double> surface_array(const thc::DensitySurface& s) {
  py::array_t<double> out({s.n_slices(), s.grid().n_cells()});
  auto buf = out.mutable_unchecked<2>();
  for (std::size_t n = 0; n < s.n_slices(); ++n) {
    const auto row = s.slice(n);
    for (std::size_t i = 0; i < row.size(); ++i) buf(n, i) = row[i];
  }
  return out;
}

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::object jump_dict(const std::optional<thc::JumpEvent>& jump) {
  if (!jump) return py::none();
  py::dict d;
  d["t_jump"] = jump->t_jump;
  d["gap"] = jump->gap;
  d["y_before"] = jump->y_before;
  d["y_after"] = jump->y_after;
  return d;
}

thc::BackwardFactor parse_factor(const std::string& s) {
  if (s == "kolmogorov") return thc::BackwardFactor::kolmogorov;
  if (s == "reversed_forward") return thc::BackwardFactor::reversed_forward_density;
  throw py::value_error("backward_factor must be 'kolmogorov' or 'reversed_forward'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Maximum-likelihood transition paths for a noisy thermohaline box model";

  py::class_<thc::NondimensionalParams>(m, "NondimensionalParams")
      .def(py::init([](double f_bar, double mu2, double alpha) {
             thc::NondimensionalParams nd{f_bar, alpha, mu2};
             nd.validate();
             return nd;
           }),
           py::arg("f_bar") = 1.1, py::arg("mu2") = 6.2, py::arg("alpha") = 219.0 * 365.25 / 25.0)
      .def_readwrite("f_bar", &thc::NondimensionalParams::f_bar)
      .def_readwrite("mu2", &thc::NondimensionalParams::mu2)
      .def_readwrite("alpha", &thc::NondimensionalParams::alpha);

  py::class_<thc::DriftModel>(m, "DriftModel")
      .def("__call__", &thc::DriftModel::operator())
      .def("derivative", &thc::DriftModel::derivative)
      .def("potential", &thc::DriftModel::potential)
      .def_property_readonly("name", &thc::DriftModel::name);

  m.def("cessi", [](double f_bar, double mu2) { return thc::DriftModel(thc::CessiReduced{f_bar, mu2}); },
        py::arg("f_bar") = 1.1, py::arg("mu2") = 6.2);
  m.def("double_well", [](double a, double b) { return thc::DriftModel(thc::DoubleWell{a, b}); },
        py::arg("a") = 1.0, py::arg("b") = 1.0);
  m.def("linear_ou", [](double rate) { return thc::DriftModel(thc::LinearOU{rate}); }, py::arg("rate"));
  m.def("zero_drift", [] { return thc::DriftModel(thc::ZeroDrift{}); });

  m.def("drift_reduced", &thc::drift_reduced, py::arg("y"), py::arg("nd"));
  m.def("potential", py::overload_cast<double, const thc::NondimensionalParams&>(&thc::potential),
        py::arg("y"), py::arg("nd"));
  m.def(
      "drift_2d",
      [](double x, double y, const thc::NondimensionalParams& nd) {
        return thc::drift_2d({x, y}, nd);
      },
      py::arg("x"), py::arg("y"), py::arg("nd"));

  m.def(
      "find_equilibria",
      [](const thc::DriftModel& drift, double lo, double hi) {
        py::list out;
        for (const auto& e : thc::find_equilibria(drift, {lo, hi})) {
          py::dict d;
          d["y"] = e.y;
          d["f_prime"] = e.derivative;
          d["stability"] = thc::to_string(e.stability);
          out.append(d);
        }
        return out;
      },
      py::arg("drift"), py::arg("lo") = -1.0, py::arg("hi") = 2.5);

  py::class_<thc::SpatialGrid>(m, "SpatialGrid")
      .def(py::init<double, double, std::size_t>(), py::arg("y_min") = -1.0, py::arg("y_max") = 2.5,
           py::arg("n_cells") = 800)
      .def_property_readonly("spacing", &thc::SpatialGrid::spacing)
      .def_property_readonly("n_cells", &thc::SpatialGrid::n_cells)
      .def_property_readonly("nodes", [](const thc::SpatialGrid& g) { return to_array(g.nodes()); });

  py::class_<thc::TimeGrid>(m, "TimeGrid")
      .def(py::init<double, double, std::size_t>(), py::arg("t_start") = 0.0, py::arg("t_end") = 10.0,
           py::arg("n_steps") = 4000)
      .def_property_readonly("dt", &thc::TimeGrid::dt)
      .def_property_readonly("n_steps", &thc::TimeGrid::n_steps);

  py::register_exception<thc::SolverError>(m, "SolverError");

  m.def(
      "solve_forward",
      [](const thc::DriftModel& drift, double eps, const thc::SpatialGrid& grid, const thc::TimeGrid& times,
         double y1) {
        py::gil_scoped_release release;
        auto s = thc::solve_forward(drift, thc::NoiseIntensity(eps), grid, times, y1);
        py::gil_scoped_acquire acquire;
        return surface_array(s);
      },
      py::arg("drift"), py::arg("eps"), py::arg("grid"), py::arg("times"), py::arg("y1"));

  m.def(
      "solve_backward",
      [](const thc::DriftModel& drift, double eps, const thc::SpatialGrid& grid, const thc::TimeGrid& times,
         double y3) {
        py::gil_scoped_release release;
        auto s = thc::solve_backward(drift, thc::NoiseIntensity(eps), grid, times, y3);
        py::gil_scoped_acquire acquire;
        return surface_array(s);
      },
      py::arg("drift"), py::arg("eps"), py::arg("grid"), py::arg("times"), py::arg("y3"));

  m.def(
      "stationary_density",
      [](const thc::DriftModel& drift, double eps, const thc::SpatialGrid& grid) {
        return to_array(thc::stationary_density(drift, thc::NoiseIntensity(eps), grid));
      },
      py::arg("drift"), py::arg("eps"), py::arg("grid"));

  m.def(
      "bridge_path",
      [](const thc::DriftModel& drift, double eps, double y_start, double y_end, const thc::SpatialGrid& grid,
         const thc::TimeGrid& times, double threshold, const std::string& backward_factor) {
        thc::BridgeOptions opts;
        opts.backward_factor = parse_factor(backward_factor);
        const thc::BridgeSpec spec{y_start, y_end, times.horizon()};
        py::gil_scoped_release release;
        auto run = thc::run_bridge(drift, thc::NoiseIntensity(eps), spec, grid, times, threshold, opts);
        py::gil_scoped_acquire acquire;
        py::dict d;
        d["t"] = to_array(run.path.times);
        d["psi"] = to_array(run.path.psi);
        d["jump"] = jump_dict(run.jump);
        return d;
      },
      py::arg("drift"), py::arg("eps"), py::arg("y_start") = 0.2402, py::arg("y_end") = 1.0687,
      py::arg("grid") = thc::SpatialGrid(-1.0, 2.5, 800), py::arg("times") = thc::TimeGrid(0.0, 10.0, 4000),
      py::arg("threshold") = thc::kDefaultJumpThreshold, py::arg("backward_factor") = "kolmogorov");

  m.def(
      "sweep_noise",
      [](const thc::DriftModel& drift, const std::vector<double>& eps_list, double y_start, double y_end,
         const thc::SpatialGrid& grid, const thc::TimeGrid& times, double threshold) {
        const thc::BridgeSpec spec{y_start, y_end, times.horizon()};
        std::vector<thc::SweepRecord> records;
        {
          py::gil_scoped_release release;
          records = thc::sweep_noise(drift, spec, eps_list, grid, times, threshold);
        }
        py::list out;
        for (const auto& r : records) {
          py::dict d;
          d["epsilon"] = r.epsilon;
          d["t_jump"] = r.t_jump ? py::object(py::float_(*r.t_jump)) : py::object(py::none());
          d["gap"] = r.gap;
          d["converged"] = r.converged;
          d["error"] = r.error;
          out.append(d);
        }
        return out;
      },
      py::arg("drift"), py::arg("eps_list"), py::arg("y_start") = 0.2402, py::arg("y_end") = 1.0687,
      py::arg("grid") = thc::SpatialGrid(-1.0, 2.5, 800), py::arg("times") = thc::TimeGrid(0.0, 10.0, 4000),
      py::arg("threshold") = thc::kDefaultJumpThreshold);

  m.def(
      "euler_maruyama_histogram",
      [](const thc::DriftModel& drift, double eps, double y0, const thc::SpatialGrid& grid,
         std::vector<double> output_times, std::size_t n_paths, double dt_sde, std::uint64_t seed,
         bool reflect) {
        thc::EnsembleConfig cfg;
        cfg.n_paths = n_paths;
        cfg.dt_sde = dt_sde;
        cfg.seed = seed;
        cfg.reflect_at_bounds = reflect;
        thc::HistogramSurface h = [&] {
          py::gil_scoped_release release;
          return thc::euler_maruyama_ensemble(drift, thc::NoiseIntensity(eps), y0, grid, output_times, cfg);
        }();
        py::array_t<double> arr({h.times.size(), grid.n_cells()});
        auto buf = arr.mutable_unchecked<2>();
        for (std::size_t k = 0; k < h.times.size(); ++k) {
          const auto row = h.slice(k);
          for (std::size_t i = 0; i < row.size(); ++i) buf(k, i) = row[i];
        }
        return py::make_tuple(to_array(h.times), arr, h.dropped_fraction());
      },
      py::arg("drift"), py::arg("eps"), py::arg("y0"), py::arg("grid"), py::arg("output_times"),
      py::arg("n_paths") = 100000, py::arg("dt_sde") = 1e-3, py::arg("seed") = 20200101,
      py::arg("reflect") = true);

  m.attr("RNG_ID") = thc::kRngId;
  m.attr("SCHEME_ID") = thc::kSchemeId;
}
