#include "thc/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace thc {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& file, std::ios::openmode mode = std::ios::out) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, mode | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
  return out;
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

void write_equilibria_csv(const std::filesystem::path& file, const std::vector<Equilibrium>& eqs) {
  auto out = open_out(file);
  out << "y,f_prime,stability\n";
  for (const auto& e : eqs) {
    out << format_double(e.y) << ',' << format_double(e.derivative) << ',' << to_string(e.stability) << '\n';
  }
}

void write_path_csv(const std::filesystem::path& file, const MLPath& path) {
  auto out = open_out(file);
  out << "t,psi\n";
  for (std::size_t k = 0; k < path.psi.size(); ++k) {
    out << format_double(path.times[k]) << ',' << format_double(path.psi[k]) << '\n';
  }
}

json jump_json(double epsilon, const std::optional<JumpEvent>& jump) {
  json j;
  j["epsilon"] = epsilon;
  if (jump) {
    j["t_jump"] = jump->t_jump;
    j["gap"] = jump->gap;
    j["y_before"] = jump->y_before;
    j["y_after"] = jump->y_after;
  } else {
    j["t_jump"] = nullptr;
    j["gap"] = nullptr;
    j["y_before"] = nullptr;
    j["y_after"] = nullptr;
  }
  return j;
}

void write_sweep_csv(const std::filesystem::path& file, const std::vector<SweepRecord>& records) {
  auto out = open_out(file);
  out << "epsilon,t_jump,gap,converged\n";
  for (const auto& r : records) {
    out << format_double(r.epsilon) << ',' << (r.t_jump ? format_double(*r.t_jump) : std::string("nan"))
        << ',' << (r.converged ? format_double(r.gap) : std::string("nan")) << ','
        << (r.converged ? "true" : "false") << '\n';
  }
}

std::vector<std::size_t> thinned_steps(std::size_t n_slices, std::size_t every) {
  if (every < 1) throw std::invalid_argument("dump stride must be at least 1");
  std::vector<std::size_t> steps;
  for (std::size_t n = 0; n < n_slices; n += every) steps.push_back(n);
  if (!steps.empty() && steps.back() != n_slices - 1) steps.push_back(n_slices - 1);
  return steps;
}

void write_surface_csv(const std::filesystem::path& file, const DensitySurface& surface,
                       std::size_t every, const std::string& column) {
  auto out = open_out(file);
  out << "t,y," << column << '\n';
  const auto& grid = surface.grid();
  std::vector<std::string> ys(grid.n_cells());
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = format_double(grid.node(i));
  for (std::size_t n : thinned_steps(surface.n_slices(), every)) {
    const auto t = format_double(surface.times().time(n));
    const auto row = surface.slice(n);
    for (std::size_t i = 0; i < row.size(); ++i) out << t << ',' << ys[i] << ',' << format_double(row[i]) << '\n';
  }
}

void write_surface_binary(const std::filesystem::path& file,
                          const std::filesystem::path& sidecar, const DensitySurface& surface,
                          std::size_t every) {
  static_assert(std::endian::native == std::endian::little, "binary dump assumes a little-endian host");
  auto out = open_out(file, std::ios::out | std::ios::binary);
  const auto steps = thinned_steps(surface.n_slices(), every);
  std::vector<double> times;
  for (std::size_t n : steps) {
    const auto row = surface.slice(n);
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size_bytes()));
    times.push_back(surface.times().time(n));
  }
  json meta;
  meta["format"] = "float64-le-row-major";
  meta["rows"] = steps.size();
  meta["cols"] = surface.grid().n_cells();
  meta["y_min"] = surface.grid().y_min();
  meta["y_max"] = surface.grid().y_max();
  meta["n_cells"] = surface.grid().n_cells();
  meta["spacing"] = surface.grid().spacing();
  meta["node_layout"] = "cell-centred";
  meta["t_start"] = surface.times().t_start();
  meta["t_end"] = surface.times().t_end();
  meta["n_steps"] = surface.times().n_steps();
  meta["dump_every"] = every;
  meta["times"] = times;
  meta["kind"] = surface.kind() == SurfaceKind::forward ? "forward"
                 : surface.kind() == SurfaceKind::backward ? "backward"
                                                            : "bridge";
  meta["anchor"] = surface.anchor();
  write_json(sidecar, meta);
}

void write_histogram_csv(const std::filesystem::path& file, const HistogramSurface& hist) {
  auto out = open_out(file);
  out << "t,y,density\n";
  for (std::size_t k = 0; k < hist.times.size(); ++k) {
    const auto t = format_double(hist.times[k]);
    const auto row = hist.slice(k);
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << t << ',' << format_double(hist.grid.node(i)) << ',' << format_double(row[i]) << '\n';
    }
  }
}

void write_json(const std::filesystem::path& file, const json& j) {
  auto out = open_out(file);
  out << j.dump(2) << '\n';
}

RunManifest::RunManifest(std::string command) {
  doc_["command"] = std::move(command);
  doc_["tool_version"] = kToolVersion;
  doc_["schemes"] = json::object();
  doc_["wall_clock_seconds"] = json::object();
  doc_["diagnostics"] = json::object();
  doc_["warnings"] = json::array();
  doc_["error"] = nullptr;
  doc_["exit_code"] = 0;
}

void RunManifest::set_error(const std::string& stage, const std::string& message, int exit_code) {
  doc_["error"] = {{"stage", stage}, {"message", message}};
  doc_["exit_code"] = exit_code;
}

}  // namespace thc
