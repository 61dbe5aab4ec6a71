#pragma once

#include <cmath>
#include <string>

#include "vae/error.hpp"
#include "vae/estimator.hpp"
#include "vae/measurement.hpp"
#include "vae/rigid_body.hpp"
#include "vae/so3.hpp"

namespace vae {

/// Estimation errors and Lyapunov energy terms at one sampling instant.
struct ErrorSample {
  double t = 0.0;
  double principal_angle = 0.0;  // rad, angle of Q = R·R̂ᵀ
  Vector3 omega_err = Vector3::Zero();
  Vector3 beta_err = Vector3::Zero();  // β̃ = β − β̂
  double V = 0.0;
  double U_pot = 0.0;
  double T_kin = 0.0;
  double bias_energy = 0.0;  // ½β̃ᵀPβ̃
};

inline constexpr double kTimestampTolerance = 1e-9;

/// Compares an estimate against truth. β is known here only, never to the
/// estimator. The angular velocity error is Ω − Ω̂ + β̃, which reduces to the
/// estimator's own residual ω when the gyro is noise-free.
inline ErrorSample compute_errors(const TruthState& truth, const EstimatorState& est,
                                  const Vector3& beta_true, const EstimatorGains& gains,
                                  const MeasurementFrame& frame) {
  if (std::abs(truth.t - frame.t) > kTimestampTolerance * std::max(1.0, std::abs(truth.t))) {
    throw Error(Errc::TimestampMismatch,
                "truth t=" + std::to_string(truth.t) + " vs frame t=" + std::to_string(frame.t));
  }
  ErrorSample e;
  e.t = frame.t;
  e.principal_angle = principal_angle(truth.R * est.R_hat.transpose());
  e.beta_err = beta_true - est.beta_hat;
  e.omega_err = truth.Omega_step - est.Omega_hat(frame.Omega_m) + e.beta_err;
  const EnergyTerms terms = lyapunov_terms(est, frame, gains, beta_true);
  e.T_kin = terms.kinetic;
  e.U_pot = terms.potential;
  e.bias_energy = terms.bias;
  e.V = terms.total();
  return e;
}

}  // namespace vae
