#pragma once

// Variational attitude and gyro-bias estimator.
//
// Continuous filter:
//   dR̂/dt = R̂·hat(Ωᵐ − ω − β̂)
//   m·dω/dt = −m·(Ω̂ × ω) + Φ′(U⁰)·S_L(R̂) − D·ω
//   dβ̂/dt = Φ′(U⁰)·P⁻¹·S_L(R̂)
//
// Discrete filter (first-order Lie group variational integrator):
//   R̂ᵢ₊₁ = R̂ᵢ·exp(h·(Ωᵢᵐ − ωᵢ − β̂ᵢ))
//   β̂ᵢ₊₁ = β̂ᵢ + h·Φ′(U⁰ᵢ)·P⁻¹·S_Lᵢ(R̂ᵢ)
//   m·ωᵢ₊₁ = exp(−h·Ω̂ᵢ₊₁)·[(m·I − h·D)·ωᵢ + h·Φ′(U⁰ᵢ₊₁)·S_Lᵢ₊₁(R̂ᵢ₊₁)]
// with Ω̂ᵢ₊₁ = Ωᵢ₊₁ᵐ − ωᵢ₊₁ − β̂ᵢ₊₁, solved for ωᵢ₊₁ by Newton-Raphson.

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <functional>
#include <string>

#include "vae/error.hpp"
#include "vae/measurement.hpp"
#include "vae/so3.hpp"

namespace vae {

/// Shaping function Φ applied to the Wahba cost; Φ(0) = 0, Φ′ > 0.
struct PhiFunction {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;

  static PhiFunction identity() {
    return {"identity", [](double x) { return x; }, [](double) { return 1.0; }};
  }
  static PhiFunction log1p() {
    return {"log1p", [](double x) { return std::log1p(x); }, [](double x) { return 1.0 / (1.0 + x); }};
  }
  static PhiFunction by_name(const std::string& name) {
    if (name == "identity") return identity();
    if (name == "log1p") return log1p();
    throw Error(Errc::InvalidConfig, "gains.phi: unknown function '" + name + "'");
  }

  /// Φ(0) = 0 and Φ′(x) > 0 on a grid over [0, x_max].
  bool spot_check(double x_max = 100.0, int samples = 200) const {
    if (std::abs(value(0.0)) > 1e-15) return false;
    for (int i = 0; i <= samples; ++i) {
      if (!(derivative(x_max * i / samples) > 0.0)) return false;
    }
    return true;
  }
};

enum class JacobianMode { Analytic, FiniteDifference };

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 100;
  JacobianMode jacobian = JacobianMode::Analytic;
};

struct EstimatorGains {
  double m = 1.0;
  Matrix3 D = Matrix3::Identity();
  Matrix3 P = Matrix3::Identity();
  Matrix3 P_inv = Matrix3::Identity();
  bool P_diagonal = true;
  double h = 0.01;
  PhiFunction phi = PhiFunction::identity();
  NewtonOptions newton{};

  /// Validated construction; precomputes P⁻¹.
  static EstimatorGains make(double m, const Matrix3& d, const Matrix3& p, double h,
                             PhiFunction phi = PhiFunction::identity(), NewtonOptions newton = {}) {
    EstimatorGains g;
    g.m = m;
    g.D = d;
    g.P = p;
    g.h = h;
    g.phi = std::move(phi);
    g.newton = newton;
    g.validate();
    g.P_diagonal = p.isDiagonal(0.0);
    if (g.P_diagonal) {
      g.P_inv = p.diagonal().cwiseInverse().asDiagonal();
    } else {
      g.P_inv = p.inverse();
    }
    return g;
  }

  void validate() const {
    auto spd = [](const Matrix3& a) {
      if (!a.allFinite() || (a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
      return Eigen::SelfAdjointEigenSolver<Matrix3>(a).eigenvalues().minCoeff() > 0.0;
    };
    if (!(m > 0.0) || !std::isfinite(m)) throw Error(Errc::InvalidConfig, "gains.m: must be > 0");
    if (!spd(D)) throw Error(Errc::InvalidConfig, "gains.D: must be symmetric positive definite");
    if (!spd(P)) throw Error(Errc::InvalidConfig, "gains.P: must be symmetric positive definite");
    if (!(h > 0.0) || !std::isfinite(h)) throw Error(Errc::InvalidConfig, "gains.h: must be > 0");
    if (!spd(m * Matrix3::Identity() - h * D)) {
      throw Error(Errc::InvalidConfig, "gains.D: m*I - h*D must be positive definite");
    }
    if (!phi.value || !phi.derivative || !phi.spot_check()) {
      throw Error(Errc::InvalidConfig, "gains.phi: needs phi(0) = 0 and phi' > 0");
    }
    if (!(newton.tol > 0.0) || newton.max_iter < 1) {
      throw Error(Errc::InvalidConfig, "gains.newton: tol > 0 and max_iter >= 1 required");
    }
  }
};

/// (R̂, ω, β̂). The angular velocity estimate Ω̂ = Ωᵐ − ω − β̂ is derived.
struct EstimatorState {
  Rotation R_hat;
  Vector3 omega = Vector3::Zero();
  Vector3 beta_hat = Vector3::Zero();

  Vector3 Omega_hat(const Vector3& omega_m) const { return omega_m - omega - beta_hat; }
};

/// ω₀ = Ω₀ᵐ − Ω̂₀ − β̂₀
inline EstimatorState initial_state(const Rotation& r_hat0, const Vector3& omega_hat0,
                                    const Vector3& beta_hat0, const Vector3& omega_m0) {
  return {r_hat0, omega_m0 - omega_hat0 - beta_hat0, beta_hat0};
}

/// U⁰(R̂, Uᵐ) = ½⟨E − R̂Uᵐ, (E − R̂Uᵐ)W⟩ with ⟨A, B⟩ = tr(AᵀB).
inline double potential_U0(const Rotation& r_hat, const MeasurementFrame& f) {
  const Matrix3X res = f.E - r_hat.matrix() * f.U_m;
  return 0.5 * (res.transpose() * res * f.W).trace();
}

struct FilterDerivative {
  Vector3 body_rate;  // Ω̂, so dR̂/dt = R̂·hat(Ω̂)
  Matrix3 R_hat_dot;
  Vector3 omega_dot;
  Vector3 beta_hat_dot;
};

inline FilterDerivative continuous_rhs(const EstimatorState& s, const MeasurementFrame& f,
                                       const EstimatorGains& g) {
  const Vector3 omega_hat = s.Omega_hat(f.Omega_m);
  const double dphi = g.phi.derivative(potential_U0(s.R_hat, f));
  const Vector3 sl = compute_SL(s.R_hat, f.L);
  FilterDerivative d;
  d.body_rate = omega_hat;
  d.R_hat_dot = s.R_hat.matrix() * hat(omega_hat);
  d.omega_dot = (-g.m * omega_hat.cross(s.omega) + dphi * sl - g.D * s.omega) / g.m;
  d.beta_hat_dot = dphi * (g.P_inv * sl);
  return d;
}

struct NewtonResult {
  Vector3 omega = Vector3::Zero();
  int iterations = 0;
  double residual = 0.0;
};

namespace detail {

struct OmegaResidual {
  Vector3 c;
  Vector3 omega_m;
  Vector3 beta_hat;
  double m;
  double h;

  /// φ(ω) = −h·Ω̂(ω) = h·(ω − Ωᵐ + β̂)
  Vector3 phi(const Vector3& omega) const { return h * (omega - omega_m + beta_hat); }

  Vector3 operator()(const Vector3& omega) const {
    return m * omega - exp_so3(phi(omega)).matrix() * c;
  }

  /// ∂F/∂ω = m·I + h·exp(φ)·hat(c)·J_r(φ)
  Matrix3 jacobian(const Vector3& omega) const {
    const Vector3 p = phi(omega);
    return m * Matrix3::Identity() + h * exp_so3(p).matrix() * hat(c) * right_jacobian(p);
  }

  Matrix3 jacobian_fd(const Vector3& omega) const {
    constexpr double kStep = 1e-7;
    Matrix3 j;
    for (int k = 0; k < 3; ++k) {
      Vector3 dp = omega, dm = omega;
      dp[k] += kStep;
      dm[k] -= kStep;
      j.col(k) = ((*this)(dp) - (*this)(dm)) / (2.0 * kStep);
    }
    return j;
  }
};

}  // namespace detail

/// Solves m·ω − exp(−h·(Ωᵐ − ω − β̂))·c = 0 for ω, starting from `omega_guess`.
inline NewtonResult newton_solve_omega(const Vector3& c, const Vector3& omega_guess,
                                       const Vector3& omega_m_next, const Vector3& beta_hat_next,
                                       const EstimatorGains& g) {
  const detail::OmegaResidual f{c, omega_m_next, beta_hat_next, g.m, g.h};
  NewtonResult out;
  out.omega = omega_guess;
  Vector3 r = f(out.omega);
  out.residual = r.norm();
  while (out.residual > g.newton.tol) {
    if (out.iterations >= g.newton.max_iter || !std::isfinite(out.residual)) {
      throw Error(Errc::NewtonDivergence, "residual " + std::to_string(out.residual) + " after " +
                                              std::to_string(out.iterations) + " iterations");
    }
    const Matrix3 jac = g.newton.jacobian == JacobianMode::Analytic ? f.jacobian(out.omega)
                                                                    : f.jacobian_fd(out.omega);
    out.omega -= jac.partialPivLu().solve(r);
    ++out.iterations;
    r = f(out.omega);
    out.residual = r.norm();
  }
  return out;
}

/// One step of the discrete estimator. Consumes the frames at tᵢ and tᵢ₊₁.
inline EstimatorState discrete_step(const EstimatorState& s, const MeasurementFrame& frame_i,
                                    const MeasurementFrame& frame_next, const EstimatorGains& g,
                                    NewtonResult* report = nullptr) {
  EstimatorState next;
  next.R_hat = s.R_hat * exp_so3(Vector3(g.h * s.Omega_hat(frame_i.Omega_m)));

  const double dphi_i = g.phi.derivative(potential_U0(s.R_hat, frame_i));
  next.beta_hat = s.beta_hat + g.h * dphi_i * (g.P_inv * compute_SL(s.R_hat, frame_i.L));

  const double dphi_next = g.phi.derivative(potential_U0(next.R_hat, frame_next));
  const Vector3 c = (g.m * Matrix3::Identity() - g.h * g.D) * s.omega +
                    g.h * dphi_next * compute_SL(next.R_hat, frame_next.L);
  const NewtonResult nr = newton_solve_omega(c, s.omega, frame_next.Omega_m, next.beta_hat, g);
  next.omega = nr.omega;
  if (report != nullptr) *report = nr;
  return next;
}

/// Energy terms of the Lyapunov function.
struct EnergyTerms {
  double kinetic = 0.0;    // (m/2)·ωᵀω
  double potential = 0.0;  // Φ(U⁰)
  double bias = 0.0;       // ½·β̃ᵀPβ̃
  double total() const { return kinetic + potential + bias; }
};

/// Measurement form: (m/2)|Ωᵐ − Ω̂ − β̂|² + Φ(U⁰(R̂, Uᵐ)) + ½(β − β̂)ᵀP(β − β̂).
inline EnergyTerms lyapunov_terms(const EstimatorState& s, const MeasurementFrame& f,
                                  const EstimatorGains& g, const Vector3& beta_true) {
  const Vector3 bt = beta_true - s.beta_hat;
  return {0.5 * g.m * s.omega.squaredNorm(), g.phi.value(potential_U0(s.R_hat, f)),
          0.5 * bt.dot(g.P * bt)};
}

inline double lyapunov_V(const EstimatorState& s, const MeasurementFrame& f, const EstimatorGains& g,
                         const Vector3& beta_true) {
  return lyapunov_terms(s, f, g, beta_true).total();
}

/// Error form: (m/2)ωᵀω + Φ(⟨I − Q, K⟩) + ½β̃ᵀPβ̃.
inline double lyapunov_V(const Rotation& q, const Vector3& omega, const Vector3& beta_tilde,
                         const Matrix3& k, const EstimatorGains& g) {
  const double attitude = (Matrix3::Identity() - q.matrix()).cwiseProduct(k).sum();
  return 0.5 * g.m * omega.squaredNorm() + g.phi.value(attitude) + 0.5 * beta_tilde.dot(g.P * beta_tilde);
}

}  // namespace vae
