#pragma once

// Ground-truth rigid body: Euler's equations under a sinusoidal body torque,
// integrated with RKMK4 and re-projected onto SO(3) every step.

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <string>
#include <vector>

#include "vae/error.hpp"
#include "vae/lie_rk4.hpp"
#include "vae/so3.hpp"

namespace vae {

class InertiaMatrix {
 public:
  static InertiaMatrix from_matrix(const Matrix3& j) {
    if (!j.allFinite()) throw Error(Errc::InvalidConfig, "inertia: non-finite entries");
    if ((j - j.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw Error(Errc::InvalidConfig, "inertia: not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Matrix3> es(j);
    if (es.eigenvalues().minCoeff() <= 0.0) {
      throw Error(Errc::InvalidConfig, "inertia: not positive definite");
    }
    return InertiaMatrix(j);
  }
  static InertiaMatrix diagonal(double j1, double j2, double j3) {
    return from_matrix(Vector3(j1, j2, j3).asDiagonal());
  }

  const Matrix3& matrix() const { return j_; }
  const Matrix3& inverse() const { return j_inv_; }

  double kinetic_energy(const Vector3& omega) const { return 0.5 * omega.dot(j_ * omega); }

 private:
  explicit InertiaMatrix(const Matrix3& j) : j_(j), j_inv_(j.inverse()) {}
  Matrix3 j_;
  Matrix3 j_inv_;
};

/// Single-axis body torque amplitude·sin(frequency·t + phase) on `axis`.
struct TorqueProfile {
  double amplitude = 0.0;  // N·m
  double frequency = 0.0;  // rad/s
  double phase = 0.0;      // rad
  int axis = 0;

  static TorqueProfile none() { return {}; }

  Vector3 at(double t) const {
    Vector3 tau = Vector3::Zero();
    tau[axis] = amplitude * std::sin(frequency * t + phase);
    return tau;
  }

  void validate() const {
    if (!std::isfinite(amplitude) || !std::isfinite(frequency) || !std::isfinite(phase)) {
      throw Error(Errc::InvalidConfig, "torque: non-finite parameter");
    }
    if (axis < 0 || axis > 2) throw Error(Errc::InvalidConfig, "torque.axis: must be 0, 1 or 2");
  }
};

struct TruthState {
  double t = 0.0;
  Rotation R;
  Vector3 Omega = Vector3::Zero();
  /// Mean body rate over [t, t + h]: R(t + h) = R(t)·exp(h·Omega_step).
  /// This is what a sampled rate gyro reports for the interval.
  Vector3 Omega_step = Vector3::Zero();
};

struct TruthDerivative {
  Matrix3 R_dot;
  Vector3 Omega_dot;
};

/// Ṙ = R·hat(Ω), J·Ω̇ = (J·Ω)×Ω + τ(t).
inline TruthDerivative dynamics_rhs(const TruthState& s, const InertiaMatrix& inertia,
                                    const TorqueProfile& torque) {
  const Vector3 momentum = inertia.matrix() * s.Omega;
  return {s.R.matrix() * hat(s.Omega), inertia.inverse() * (momentum.cross(s.Omega) + torque.at(s.t))};
}

namespace detail {

inline LieStepResult<1, 3> truth_step(const TruthState& s, const InertiaMatrix& inertia,
                                      const TorqueProfile& torque, double h) {
  LieState<1, 3> y;
  y.rot[0] = s.R;
  y.vec = s.Omega;
  return rkmk4_step(y, s.t, h, [&](double t, const LieState<1, 3>& ys) {
    TruthState st{t, ys.rot[0], ys.vec, Vector3::Zero()};
    const TruthDerivative d = dynamics_rhs(st, inertia, torque);
    LieTangent<1, 3> out;
    out.body_rate[0] = ys.vec;
    out.vec_dot = d.Omega_dot;
    return out;
  });
}

}  // namespace detail

/// Integrates from `s0` for round(duration / h) steps and returns every sample
/// (steps + 1 states, sample i at s0.t + i·h). Omega_step of the last sample
/// comes from one extra internal step.
inline std::vector<TruthState> propagate_truth(const TruthState& s0, const InertiaMatrix& inertia,
                                               const TorqueProfile& torque, double h,
                                               double duration) {
  if (!(h > 0.0) || !(duration >= h) || !std::isfinite(duration)) {
    throw Error(Errc::InvalidConfig, "propagate_truth: need duration >= h > 0");
  }
  torque.validate();
  const auto steps = static_cast<std::size_t>(std::llround(duration / h));

  std::vector<TruthState> out;
  out.reserve(steps + 1);
  TruthState cur = s0;
  for (std::size_t i = 0; i <= steps; ++i) {
    const auto res = detail::truth_step(cur, inertia, torque, h);
    const Rotation next_R = project_to_so3(res.state.rot[0].matrix());
    cur.Omega_step = log_so3(cur.R.transpose() * next_R) / h;
    out.push_back(cur);

    cur.t = s0.t + static_cast<double>(i + 1) * h;
    cur.R = next_R;
    cur.Omega = res.state.vec;
  }
  return out;
}

}  // namespace vae
