#pragma once

// Fourth-order Runge-Kutta-Munthe-Kaas step for systems mixing rotation
// matrices (body-frame kinematics Ṙ = R·hat(ξ)) with plain vector states.

#include <array>
#include <cstddef>

#include <Eigen/Core>

#include "vae/so3.hpp"

namespace vae {

template <std::size_t NumRot, int NumVec>
struct LieState {
  using Vector = Eigen::Matrix<double, NumVec, 1>;
  std::array<Rotation, NumRot> rot{};
  Vector vec = Vector::Zero();
};

/// Body rates for each rotation plus the time derivative of the vector part.
template <std::size_t NumRot, int NumVec>
struct LieTangent {
  using Vector = Eigen::Matrix<double, NumVec, 1>;
  std::array<Vector3, NumRot> body_rate{};
  Vector vec_dot = Vector::Zero();
};

template <std::size_t NumRot, int NumVec>
struct LieStepResult {
  LieState<NumRot, NumVec> state;
  /// Total exponential-coordinate increment θ with R₁ = R₀·exp(θ).
  std::array<Vector3, NumRot> increment{};
};

/// One RKMK4 step. `rhs(t, state)` must return a LieTangent.
template <std::size_t NumRot, int NumVec, typename Rhs>
LieStepResult<NumRot, NumVec> rkmk4_step(const LieState<NumRot, NumVec>& y, double t, double h,
                                         Rhs&& rhs) {
  using State = LieState<NumRot, NumVec>;
  using Tangent = LieTangent<NumRot, NumVec>;

  // Stage evaluation at local coordinates `theta` and vector offset `dv`;
  // returns (θ̇ per rotation, v̇).
  auto stage = [&](double ts, const std::array<Vector3, NumRot>& theta,
                   const typename State::Vector& dv) {
    State ys;
    for (std::size_t r = 0; r < NumRot; ++r) ys.rot[r] = y.rot[r] * exp_so3(theta[r]);
    ys.vec = y.vec + dv;
    const Tangent f = rhs(ts, ys);
    Tangent out;
    for (std::size_t r = 0; r < NumRot; ++r) {
      out.body_rate[r] = right_jacobian_inv_approx(theta[r], f.body_rate[r]);
    }
    out.vec_dot = f.vec_dot;
    return out;
  };

  std::array<Vector3, NumRot> th{};
  for (auto& v : th) v.setZero();

  const Tangent k1 = stage(t, th, State::Vector::Zero());
  for (std::size_t r = 0; r < NumRot; ++r) th[r] = 0.5 * h * k1.body_rate[r];
  const Tangent k2 = stage(t + 0.5 * h, th, 0.5 * h * k1.vec_dot);
  for (std::size_t r = 0; r < NumRot; ++r) th[r] = 0.5 * h * k2.body_rate[r];
  const Tangent k3 = stage(t + 0.5 * h, th, 0.5 * h * k2.vec_dot);
  for (std::size_t r = 0; r < NumRot; ++r) th[r] = h * k3.body_rate[r];
  const Tangent k4 = stage(t + h, th, h * k3.vec_dot);

  LieStepResult<NumRot, NumVec> out;
  for (std::size_t r = 0; r < NumRot; ++r) {
    out.increment[r] =
        (h / 6.0) * (k1.body_rate[r] + 2.0 * k2.body_rate[r] + 2.0 * k3.body_rate[r] + k4.body_rate[r]);
    out.state.rot[r] = y.rot[r] * exp_so3(out.increment[r]);
  }
  out.state.vec = y.vec + (h / 6.0) * (k1.vec_dot + 2.0 * k2.vec_dot + 2.0 * k3.vec_dot + k4.vec_dot);
  return out;
}

}  // namespace vae
