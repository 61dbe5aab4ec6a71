#include "selftest.hpp"

#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "vae/continuous.hpp"
#include "vae/scenario.hpp"

namespace vae::cli {
namespace {

struct Check {
  const char* name;
  std::function<double()> measure;  // returns the observed error
  double tolerance;
};

Vector3 draw(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vector3(u(rng), u(rng), u(rng));
}

double exp_log_roundtrip() {
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Vector3 v = draw(rng, 1.0);
    if (v.norm() > 1.0) continue;
    v *= 3.1;
    worst = std::max(worst, (log_so3(exp_so3(v)) - v).norm());
    worst = std::max(worst, exp_so3(v).orthonormality_defect());
  }
  return worst;
}

double weight_eigenvalues() {
  const ScenarioConfig cfg = reference_scenario();
  const MatrixX w = choose_weights(cfg.directions, cfg.target_eigs, cfg.weights);
  const Matrix3 k = cfg.directions * w * cfg.directions.transpose();
  const Vector3 ev = Eigen::SelfAdjointEigenSolver<Matrix3>(k).eigenvalues();
  return (ev - Vector3(1, 2, 3)).cwiseAbs().maxCoeff();
}

double newton_residual() {
  const EstimatorGains g = reference_scenario().gains();
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const NewtonResult r = newton_solve_omega(draw(rng, 2.0), draw(rng, 0.3), draw(rng, 1.0), draw(rng, 0.05), g);
    worst = std::max(worst, r.residual);
  }
  return worst;
}

double fixed_point() {
  ScenarioConfig cfg = reference_scenario();
  cfg.noise.enabled = false;
  cfg.exact_initial_estimate = true;
  cfg.duration = 10.0;
  double worst = 0.0;
  for (const auto& s : run_scenario(cfg).trace) {
    worst = std::max({worst, s.principal_angle, s.omega_err.norm(), s.beta_err.norm()});
  }
  return worst;
}

double energy_increase() {
  ScenarioConfig cfg = reference_scenario();
  cfg.noise.enabled = false;
  cfg.duration = 10.0;
  const auto trace = run_scenario(cfg).trace;
  double worst = 0.0;
  for (std::size_t i = 1; i < trace.size(); ++i) worst = std::max(worst, trace[i].V - trace[i - 1].V);
  return worst;
}

double truth_energy_drift() {
  const ScenarioConfig cfg = reference_scenario();
  const auto traj = propagate_truth({0.0, cfg.R0, cfg.Omega0, Vector3::Zero()}, cfg.inertia, TorqueProfile::none(),
                                    1e-3, 10.0);
  const double e0 = cfg.inertia.kinetic_energy(cfg.Omega0);
  double worst = 0.0;
  for (const auto& s : traj) worst = std::max(worst, std::abs(cfg.inertia.kinetic_energy(s.Omega) - e0) / e0);
  return worst;
}

double gradient_error() {
  const ScenarioConfig cfg = reference_scenario();
  const MatrixX w = choose_weights(cfg.directions, cfg.target_eigs, cfg.weights);
  std::mt19937_64 rng(3);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const Matrix3X u = exp_so3(draw(rng, 1.5)).matrix().transpose() * cfg.directions;
    const Rotation r_hat = exp_so3(draw(rng, 1.5));
    const Vector3 eta = draw(rng, 1.0).normalized();
    const MeasurementFrame f = MeasurementFrame::make(0.0, cfg.directions, u, Vector3::Zero(), w);
    const double eps = 1e-5;
    const double fd = (potential_U0(r_hat * exp_so3(Vector3(eps * eta)), f) -
                       potential_U0(r_hat * exp_so3(Vector3(-eps * eta)), f)) /
                      (2 * eps);
    worst = std::max(worst, std::abs(fd - compute_SL(r_hat, f.L).dot(eta)) / std::max(1.0, std::abs(fd)));
  }
  return worst;
}

}  // namespace

int run_selftest() {
  const std::vector<Check> checks{
      {"so3 exp/log roundtrip", exp_log_roundtrip, 1e-9},
      {"weight eigenvalues", weight_eigenvalues, 1e-8},
      {"wahba gradient", gradient_error, 1e-6},
      {"newton residual", newton_residual, 1e-12},
      {"zero-error fixed point", fixed_point, 1e-9},
      {"noise-free energy decrease", energy_increase, 1e-8},
      {"truth energy drift", truth_energy_drift, 1e-8},
  };
  int failures = 0;
  for (const auto& c : checks) {
    double err = 0.0;
    bool ok = false;
    try {
      err = c.measure();
      ok = err <= c.tolerance;
    } catch (const std::exception& e) {
      std::printf("FAIL %-28s exception: %s\n", c.name, e.what());
      ++failures;
      continue;
    }
    std::printf("%s %-28s %.3g (tol %.0e)\n", ok ? "PASS" : "FAIL", c.name, err, c.tolerance);
    failures += ok ? 0 : 1;
  }
  return failures;
}

}  // namespace vae::cli
