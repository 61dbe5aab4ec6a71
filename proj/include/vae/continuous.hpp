#pragma once

// Continuous-time filter coupled to a noise-free rigid body, integrated with
// RKMK4. Used to cross-check the discrete estimator and the dissipation law.

#include <vector>

#include "vae/estimator.hpp"
#include "vae/lie_rk4.hpp"
#include "vae/measurement.hpp"
#include "vae/rigid_body.hpp"

namespace vae {

struct ContinuousSetup {
  InertiaMatrix inertia = InertiaMatrix::diagonal(1.0, 1.0, 1.0);
  TorqueProfile torque;
  Vector3 beta = Vector3::Zero();
  Matrix3X E;
  MatrixX W;
  EstimatorGains gains;
};

struct JointState {
  double t = 0.0;
  Rotation R;
  Vector3 Omega = Vector3::Zero();
  EstimatorState est;
};

inline JointState continuous_step(const JointState& s, const ContinuousSetup& setup, double h) {
  using State = LieState<2, 9>;
  State y;
  y.rot = {s.R, s.est.R_hat};
  y.vec << s.Omega, s.est.omega, s.est.beta_hat;

  const auto res = rkmk4_step(y, s.t, h, [&](double t, const State& ys) {
    const Vector3 omega_true = ys.vec.segment<3>(0);
    const EstimatorState est{ys.rot[1], ys.vec.segment<3>(3), ys.vec.segment<3>(6)};
    const MeasurementFrame f = MeasurementFrame::make(t, setup.E, ys.rot[0].matrix().transpose() * setup.E,
                                                      omega_true + setup.beta, setup.W);
    const TruthDerivative td =
        dynamics_rhs(TruthState{t, ys.rot[0], omega_true, Vector3::Zero()}, setup.inertia, setup.torque);
    const FilterDerivative fd = continuous_rhs(est, f, setup.gains);
    LieTangent<2, 9> out;
    out.body_rate = {omega_true, fd.body_rate};
    out.vec_dot << td.Omega_dot, fd.omega_dot, fd.beta_hat_dot;
    return out;
  });

  JointState next;
  next.t = s.t + h;
  next.R = res.state.rot[0];
  next.est.R_hat = res.state.rot[1];
  next.Omega = res.state.vec.segment<3>(0);
  next.est.omega = res.state.vec.segment<3>(3);
  next.est.beta_hat = res.state.vec.segment<3>(6);
  return next;
}

/// Noise-free frame for the joint state (Uᵐ = RᵀE, Ωᵐ = Ω + β).
inline MeasurementFrame joint_frame(const JointState& s, const ContinuousSetup& setup) {
  return MeasurementFrame::make(s.t, setup.E, s.R.matrix().transpose() * setup.E, s.Omega + setup.beta,
                                setup.W);
}

/// Returns states at t₀, t₀ + h, ..., t₀ + steps·h.
inline std::vector<JointState> integrate_continuous(const JointState& s0, const ContinuousSetup& setup,
                                                    double h, std::size_t steps) {
  std::vector<JointState> out;
  out.reserve(steps + 1);
  out.push_back(s0);
  for (std::size_t i = 0; i < steps; ++i) {
    JointState next = continuous_step(out.back(), setup, h);
    next.t = s0.t + static_cast<double>(i + 1) * h;
    out.push_back(next);
  }
  return out;
}

}  // namespace vae
