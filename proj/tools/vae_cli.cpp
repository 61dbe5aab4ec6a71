// Command-line driver: run a scenario from a config file or a preset, sweep
// random initial conditions, or run the built-in invariant checks.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "selftest.hpp"
#include "vae/output.hpp"
#include "vae/scenario.hpp"

namespace fs = std::filesystem;
using namespace vae;

namespace {

struct RunOptions {
  std::string out;
  bool no_plots = false;
  bool zero_noise = false;
  std::int64_t seed = -1;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--out", o.out, "output directory (default: from config)");
  cmd->add_flag("--no-plots", o.no_plots, "skip SVG plots");
  cmd->add_flag("--zero-noise", o.zero_noise, "disable measurement noise");
  cmd->add_option("--seed", o.seed, "seed for random noise phases")->check(CLI::NonNegativeNumber);
}

void apply(const RunOptions& o, ScenarioConfig& cfg) {
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.no_plots) cfg.plots = false;
  if (o.zero_noise) cfg.noise.enabled = false;
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
}

int run(const ScenarioConfig& cfg) {
  cfg.validate();
  std::printf("scenario %s: %zu steps of %g s\n", cfg.name.c_str(), cfg.steps(), cfg.step);
  const ScenarioResult res = run_scenario(cfg);
  const ErrorSample& e = res.summary.terminal;
  std::printf("terminal t=%.2f  angle=%.6g rad  |w err|=%.6g rad/s  |beta err|=%.6g rad/s  V=%.6g\n", e.t,
              e.principal_angle, e.omega_err.norm(), e.beta_err.norm(), e.V);
  std::printf("newton iterations <= %d, max |R^T R - I| = %.3g, %.3f s\n", res.summary.max_newton_iterations,
              res.summary.max_orthonormality_defect, res.summary.runtime_seconds);

  const fs::path dir = cfg.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::Io, "cannot create '" + dir.string() + "': " + ec.message());
  emit_csv(res.trace, dir / "trace.csv");
  std::ofstream(dir / "config.json") << config_to_json(cfg).dump(2) << '\n';
  std::printf("wrote %s\n", (dir / "trace.csv").c_str());
  if (cfg.plots) {
    for (const auto& p : emit_plots(res.trace, dir)) std::printf("wrote %s\n", p.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational attitude and gyro-bias estimator simulation"};
  app.require_subcommand(1);

  std::string config_path;
  RunOptions run_opt;
  auto* run_cmd = app.add_subcommand("run", "run a scenario from a JSON config file");
  run_cmd->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  add_run_options(run_cmd, run_opt);

  std::string preset_name;
  RunOptions preset_opt;
  bool print_config = false;
  auto* preset_cmd = app.add_subcommand("preset", "run a built-in scenario");
  preset_cmd->add_option("name", preset_name, "preset name")->required()->check(CLI::IsMember({"paper_fig123"}));
  preset_cmd->add_flag("--print-config", print_config, "print the preset as JSON and exit");
  add_run_options(preset_cmd, preset_opt);

  std::string sweep_config;
  SweepOptions sweep_opt;
  double sweep_p = 0.0;
  std::string sweep_out = "out/sweep";
  auto* sweep_cmd = app.add_subcommand("sweep", "noise-free runs from random initial errors");
  sweep_cmd->add_option("--config", sweep_config, "base config (default: paper_fig123)")->check(CLI::ExistingFile);
  sweep_cmd->add_option("--count", sweep_opt.count, "number of runs")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--horizon", sweep_opt.horizon, "simulated seconds per run")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--max-angle", sweep_opt.max_angle, "largest initial attitude error [rad]");
  sweep_cmd->add_option("--threshold", sweep_opt.threshold, "convergence threshold [rad]");
  sweep_cmd->add_option("--threads", sweep_opt.threads, "worker threads (0: all cores)");
  sweep_cmd->add_option("--seed", sweep_opt.seed, "seed for the initial conditions");
  sweep_cmd->add_option("--P", sweep_p, "override the bias gain with P*I")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", sweep_out, "output directory");

  app.add_subcommand("selftest", "run the built-in invariant checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      ScenarioConfig cfg = load_config(config_path);
      apply(run_opt, cfg);
      return run(cfg);
    }
    if (*preset_cmd) {
      ScenarioConfig cfg = reference_scenario();
      apply(preset_opt, cfg);
      if (print_config) {
        std::cout << config_to_json(cfg).dump(2) << '\n';
        return 0;
      }
      return run(cfg);
    }
    if (*sweep_cmd) {
      ScenarioConfig cfg = sweep_config.empty() ? reference_scenario() : load_config(sweep_config);
      if (sweep_p > 0.0) cfg.P = sweep_p * Matrix3::Identity();
      const auto runs = run_sweep(cfg, sweep_opt);
      fs::create_directories(sweep_out);
      std::ofstream csv(sweep_out / fs::path("sweep.csv"), std::ios::binary);
      csv << "index,initial_angle,terminal_angle,terminal_bias_error,time_to_threshold,converged,exempt\n";
      int failed = 0, exempt = 0;
      for (const auto& r : runs) {
        csv << r.index << ',' << format_double(r.initial_angle) << ',' << format_double(r.terminal_angle) << ','
            << format_double(r.terminal_bias_error) << ',' << format_double(r.time_to_threshold) << ','
            << r.converged << ',' << r.exempt << '\n';
        if (r.exempt) {
          ++exempt;
          std::printf("exempt run %d (initial angle %.6f)\n", r.index, r.initial_angle);
        } else if (!r.converged) {
          ++failed;
          std::printf("run %d did not converge: initial %.4f rad, terminal %.4g rad\n", r.index, r.initial_angle,
                      r.terminal_angle);
        }
      }
      std::printf("%zu runs, %d not converged, %d exempt; wrote %s\n", runs.size(), failed, exempt,
                  (sweep_out / fs::path("sweep.csv")).c_str());
      return failed == 0 ? 0 : 2;
    }
    const int failures = cli::run_selftest();
    std::printf("%s\n", failures == 0 ? "selftest passed" : "selftest FAILED");
    return failures == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
