// thc-bridge: batch front end for the equilibrium, Fokker-Planck, bridge,
// Monte Carlo and validation stages. All artifacts land under --out.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "thc/bridge.hpp"
#include "thc/config.hpp"
#include "thc/io.hpp"
#include "thc/log.hpp"
#include "thc/montecarlo.hpp"
#include "thc/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kNoJump = 3,
  kSolverFailure = 4,
  kValidationFailure = 5,
};

struct GlobalOptions {
  std::optional<std::string> config;
  std::vector<std::string> params;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> dump_every;
  // shortcuts that expand to --param entries
  std::optional<std::string> drift;
  std::optional<double> start;
  std::optional<double> end;
  std::optional<double> epsilon;
  std::optional<std::string> eps_list;
  std::optional<std::string> checks;
  bool require_jump = false;

  std::vector<std::string> overrides() const {
    std::vector<std::string> out_params = params;
    auto add = [&](const std::string& key, const std::string& value) { out_params.push_back(key + "=" + value); };
    if (seed) add("seed", std::to_string(*seed));
    if (dump_every) add("dump_every", std::to_string(*dump_every));
    if (drift) add("drift", json(*drift).dump());
    if (start) add("y_start", thc::format_double(*start));
    if (end) add("y_end", thc::format_double(*end));
    if (epsilon) add("epsilon", thc::format_double(*epsilon));
    if (eps_list) add("eps_list", json(*eps_list).dump());
    if (checks) add("checks", json(*checks).dump());
    if (require_jump) add("require_jump", "true");
    return out_params;
  }
};

void record_forward_diagnostics(thc::RunManifest& manifest, const std::string& prefix,
                                const thc::SolverDiagnostics& d) {
  manifest.add_counter(prefix + "_clamp_events", d.clamp_events);
  manifest.add_counter(prefix + "_total_nodes", d.total_nodes);
  manifest.add_counter(prefix + "_min_before_clamp", d.min_before_clamp);
  manifest.add_counter(prefix + "_max_mass_drift", d.max_mass_drift);
}

void write_surface(const thc::RunConfig& cfg, const fs::path& out, const std::string& stem,
                   const thc::DensitySurface& s, const std::string& column) {
  if (cfg.surface_format == "binary") {
    thc::write_surface_binary(out / (stem + ".bin"), out / (stem + ".json"), s, cfg.dump_every);
  } else {
    thc::write_surface_csv(out / (stem + ".csv"), s, cfg.dump_every, column);
  }
}

int cmd_equilibria(const thc::RunConfig& cfg, const fs::path& out, thc::RunManifest& m) {
  const auto eqs = m.stage("equilibria", [&] {
    return thc::find_equilibria(cfg.drift_model(), {cfg.y_min, cfg.y_max});
  });
  thc::write_equilibria_csv(out / "equilibria.csv", eqs);
  std::cout << "y,f_prime,stability\n";
  for (const auto& e : eqs) {
    std::cout << thc::format_double(e.y) << ',' << thc::format_double(e.derivative) << ','
              << thc::to_string(e.stability) << '\n';
  }
  m.add_counter("equilibria", eqs.size());
  return kOk;
}

int cmd_forward(const thc::RunConfig& cfg, const fs::path& out, thc::RunManifest& m) {
  const auto s = m.stage("forward", [&] {
    return thc::solve_forward(cfg.drift_model(), thc::NoiseIntensity(cfg.epsilon), cfg.spatial_grid(),
                              cfg.time_grid(), cfg.y_start);
  });
  record_forward_diagnostics(m, "forward", s.diagnostics);
  m.stage("write", [&] { write_surface(cfg, out, "forward", s, "p"); });
  std::cout << "forward surface: " << s.n_slices() << " slices x " << s.grid().n_cells()
            << " cells, max mass drift " << s.diagnostics.max_mass_drift << '\n';
  return kOk;
}

int cmd_backward(const thc::RunConfig& cfg, const fs::path& out, thc::RunManifest& m) {
  const auto s = m.stage("backward", [&] {
    return thc::solve_backward(cfg.drift_model(), thc::NoiseIntensity(cfg.epsilon), cfg.spatial_grid(),
                               cfg.time_grid(), cfg.y_end);
  });
  record_forward_diagnostics(m, "backward", s.diagnostics);
  m.stage("write", [&] { write_surface(cfg, out, "backward", s, "g"); });
  std::cout << "backward surface: " << s.n_slices() << " slices x " << s.grid().n_cells() << " cells\n";
  return kOk;
}

int cmd_bridge_path(const thc::RunConfig& cfg, const fs::path& out, thc::RunManifest& m) {
  thc::BridgeOptions opts;
  opts.backward_factor = cfg.backward_factor;
  opts.refinement = cfg.refinement;
  const auto run = m.stage("bridge", [&] {
    return thc::run_bridge(cfg.drift_model(), thc::NoiseIntensity(cfg.epsilon), cfg.bridge_spec(),
                           cfg.spatial_grid(), cfg.time_grid(), cfg.jump_threshold, opts);
  });
  record_forward_diagnostics(m, "forward", run.forward.diagnostics);
  record_forward_diagnostics(m, "backward", run.backward.diagnostics);
  m.add_counter("log_space_slices", run.path.log_space_slices);
  m.add_counter("tied_slices", run.path.tied_slices);
  thc::write_path_csv(out / "ml_path.csv", run.path);
  thc::write_json(out / "jump.json", thc::jump_json(cfg.epsilon, run.jump));
  if (run.jump) {
    std::cout << "jump at t=" << thc::format_double(run.jump->t_jump) << " gap "
              << thc::format_double(run.jump->gap) << '\n';
  } else {
    std::cout << "no jump above threshold " << cfg.jump_threshold << '\n';
    if (cfg.require_jump) return kNoJump;
  }
  return kOk;
}

int cmd_sweep(const thc::RunConfig& cfg, const fs::path& out, thc::RunManifest& m) {
  thc::SweepOptions opts;
  opts.bridge.backward_factor = cfg.backward_factor;
  opts.bridge.refinement = cfg.refinement;
  opts.threads = cfg.threads;
  const auto records = m.stage("sweep", [&] {
    return thc::sweep_noise(cfg.drift_model(), cfg.bridge_spec(), cfg.sweep_list(), cfg.spatial_grid(),
                            cfg.time_grid(), cfg.jump_threshold, opts);
  });
  thc::write_sweep_csv(out / "sweep.csv", records);
  json per_eps = json::array();
  std::size_t converged = 0;
  for (const auto& r : records) {
    json rec = thc::jump_json(r.epsilon, r.jump);
    rec["max_mass_drift"] = r.max_mass_drift;
    rec["clamp_events"] = r.clamp_events;
    if (!r.error.empty()) {
      rec["error"] = r.error;
      std::cerr << "error: " << r.error << '\n';
    }
    per_eps.push_back(rec);
    if (r.converged) ++converged;
    std::cout << r.epsilon << ' ';
    if (r.t_jump) std::cout << *r.t_jump << '\n';
    else std::cout << "-\n";
  }
  m.add_counter("sweep", per_eps);
  return converged > 0 ? kOk : kNoJump;
}

int cmd_mc(const thc::RunConfig& cfg, const fs::path& out, thc::RunManifest& m) {
  const auto times = cfg.mc_times.empty() ? std::vector<double>{cfg.t_end} : cfg.mc_times;
  const auto ens = cfg.ensemble();
  const auto hist = m.stage("mc", [&] {
    return thc::euler_maruyama_ensemble(cfg.drift_model(), thc::NoiseIntensity(cfg.epsilon), cfg.y_start,
                                        cfg.spatial_grid(), times, ens);
  });
  thc::write_histogram_csv(out / "histogram.csv", hist);
  json summary = {{"n_paths", ens.n_paths},
                  {"dt_sde", ens.dt_sde},
                  {"seed", ens.seed},
                  {"dropped_fraction", hist.dropped_fraction()},
                  {"rng", thc::kRngId}};
  thc::write_json(out / "mc_summary.json", summary);
  m.add_counter("dropped_paths", hist.dropped);
  std::cout << summary.dump() << '\n';
  return kOk;
}

int cmd_validate(const thc::RunConfig& cfg, const fs::path& out, thc::RunManifest& m) {
  const auto results = m.stage("validate", [&] { return thc::run_checks(cfg); });
  const auto report = thc::to_json(results);
  thc::write_json(out / "validation.json", report);
  for (const auto& r : results) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << " measured=" << r.measured << " tol=" << r.tolerance;
    if (!r.detail.empty()) std::cout << " (" << r.detail << ')';
    std::cout << '\n';
  }
  return report["all_pass"].get<bool>() ? kOk : kValidationFailure;
}

using Command = int (*)(const thc::RunConfig&, const fs::path&, thc::RunManifest&);

int execute(const std::string& name, Command command, const GlobalOptions& opts) {
  thc::RunManifest manifest(name);
  const fs::path out(opts.out);
  auto finish = [&](int code) {
    manifest.set_exit_code(code);
    try {
      manifest.write(out / "manifest.json");
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
    }
    return code;
  };
  auto previous_sink = thc::set_warning_sink([&](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
    manifest.add_warning(std::string(msg));
  });
  struct RestoreSink {
    thc::WarningSink sink;
    ~RestoreSink() { thc::set_warning_sink(std::move(sink)); }
  } restore{std::move(previous_sink)};

  thc::RunConfig cfg;
  try {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw thc::ConfigError("out", "cannot create output directory '" + opts.out + "'");
    cfg = thc::load_config(opts.config, opts.overrides());
  } catch (const thc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    manifest.set_error("config", e.what(), kConfigError);
    return finish(kConfigError);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    manifest.set_error("config", e.what(), kConfigError);
    return finish(kConfigError);
  }

  manifest.set_config(cfg.to_json());
  manifest.set_scheme("fpe", thc::kSchemeId);
  manifest.set_scheme("rng", thc::kRngId);
  manifest.set_scheme("backward_factor", thc::to_string(cfg.backward_factor));
  manifest.set_scheme("refinement", thc::to_string(cfg.refinement));

  try {
    return finish(command(cfg, out, manifest));
  } catch (const thc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    manifest.set_error("config", e.what(), kConfigError);
    return finish(kConfigError);
  } catch (const std::exception& e) {
    std::cerr << "solver failure in stage '" << manifest.current_stage() << "': " << e.what() << '\n';
    manifest.set_error(manifest.current_stage(), e.what(), kSolverFailure);
    return finish(kSolverFailure);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Most probable transition paths of a noisy bistable box model"};
  app.require_subcommand(1);
  GlobalOptions opts;

  auto add_globals = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config, "JSON configuration file");
    cmd->add_option("--param", opts.params, "Override key=value (repeatable)")->allow_extra_args(false);
    cmd->add_option("--out", opts.out, "Output directory");
    cmd->add_option("--seed", opts.seed, "Monte Carlo seed");
    cmd->add_option("--dump-every", opts.dump_every, "Keep every N-th stored step in surface dumps");
    cmd->add_option("--drift", opts.drift, "cessi | zero | ou | double_well");
    cmd->add_option("--start", opts.start, "Bridge start state");
    cmd->add_option("--end", opts.end, "Bridge end state");
    cmd->add_option("--epsilon", opts.epsilon, "Noise intensity");
  };

  struct Entry {
    const char* name;
    const char* help;
    Command fn;
  };
  const Entry entries[] = {
      {"equilibria", "Equilibria of the drift (equilibria.csv)", cmd_equilibria},
      {"forward", "Forward Fokker-Planck surface", cmd_forward},
      {"backward", "Backward Kolmogorov surface", cmd_backward},
      {"bridge-path", "Maximum-likelihood bridge path and jump", cmd_bridge_path},
      {"sweep", "Jump time versus noise intensity", cmd_sweep},
      {"mc", "Euler-Maruyama histogram", cmd_mc},
      {"validate", "Conservation, oracle and Monte Carlo checks", cmd_validate},
  };

  std::vector<std::pair<CLI::App*, const Entry*>> subs;
  for (const auto& e : entries) {
    auto* sub = app.add_subcommand(e.name, e.help);
    add_globals(sub);
    if (std::string(e.name) == "bridge-path") {
      sub->add_flag("--require-jump", opts.require_jump, "Exit 3 when no jump is found");
    }
    if (std::string(e.name) == "sweep") {
      sub->add_option("--eps-list", opts.eps_list, "lo:hi:step or a,b,c");
    }
    if (std::string(e.name) == "validate") {
      sub->add_option("--checks", opts.checks, "Comma-separated subset of checks");
    }
    subs.emplace_back(sub, &e);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  for (const auto& [sub, entry] : subs) {
    if (sub->parsed()) return execute(entry->name, entry->fn, opts);
  }
  return kConfigError;
}
