#pragma once

// CSV/JSON artifacts. Floating values are written with 17 significant
// digits and '.' as decimal separator, so output is byte-stable.

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "thc/bridge.hpp"
#include "thc/fpe.hpp"
#include "thc/model.hpp"
#include "thc/montecarlo.hpp"

namespace thc {

std::string format_double(double v);

void write_equilibria_csv(const std::filesystem::path& file, const std::vector<Equilibrium>& eqs);
void write_path_csv(const std::filesystem::path& file, const MLPath& path);
nlohmann::json jump_json(double epsilon, const std::optional<JumpEvent>& jump);
void write_sweep_csv(const std::filesystem::path& file, const std::vector<SweepRecord>& records);

/// Long format `t,y,<column>`, every `every`-th stored step plus the last.
void write_surface_csv(const std::filesystem::path& file, const DensitySurface& surface,
                       std::size_t every, const std::string& column = "p");
/// Row-major little-endian float64 matrix plus a JSON sidecar with the grid.
void write_surface_binary(const std::filesystem::path& file,
                          const std::filesystem::path& sidecar, const DensitySurface& surface,
                          std::size_t every);
void write_histogram_csv(const std::filesystem::path& file, const HistogramSurface& hist);

/// Stored-step indices kept by a dump with the given stride.
std::vector<std::size_t> thinned_steps(std::size_t n_slices, std::size_t every);

void write_json(const std::filesystem::path& file, const nlohmann::json& j);

/// Run record written for every CLI invocation, including failures.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void set_config(nlohmann::json config) { doc_["config"] = std::move(config); }
  void set_scheme(const std::string& key, const std::string& id) { doc_["schemes"][key] = id; }
  void add_counter(const std::string& key, nlohmann::json value) { doc_["diagnostics"][key] = std::move(value); }
  void add_warning(const std::string& message) { doc_["warnings"].push_back(message); }
  void set_error(const std::string& stage, const std::string& message, int exit_code);
  void set_exit_code(int code) { doc_["exit_code"] = code; }

  /// Times `fn` and records wall-clock seconds under stages.<name>.
  template <class Fn>
  auto stage(const std::string& name, Fn&& fn) {
    current_stage_ = name;
    const auto start = std::chrono::steady_clock::now();
    struct Record {
      RunManifest* self;
      std::string name;
      std::chrono::steady_clock::time_point start;
      ~Record() {
        self->doc_["wall_clock_seconds"][name] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      }
    } record{this, name, start};
    return fn();
  }

  const std::string& current_stage() const { return current_stage_; }
  const nlohmann::json& json() const { return doc_; }
  void write(const std::filesystem::path& file) const { write_json(file, doc_); }

 private:
  nlohmann::json doc_;
  std::string current_stage_ = "setup";
};

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace thc
