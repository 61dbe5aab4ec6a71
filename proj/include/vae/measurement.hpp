#pragma once

// Direction and gyro measurement synthesis, weight selection and the
// Wahba-cost quantities L = E·W·Uᵐᵀ and S_L(R̂) = vex(LᵀR̂ − R̂ᵀL).

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vae/error.hpp"
#include "vae/so3.hpp"

namespace vae {

using Matrix3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;
using MatrixX = Eigen::MatrixXd;

inline constexpr double kDegree = std::numbers::pi / 180.0;

/// amplitude·sin(2π·frequency_hz·t + phase)·axis
struct Sinusoid {
  double frequency_hz = 0.0;
  double phase = 0.0;
  double amplitude = 0.0;
  Vector3 axis = Vector3::UnitX();

  Vector3 at(double t) const {
    return amplitude * std::sin(2.0 * std::numbers::pi * frequency_hz * t + phase) * axis;
  }
};

/// Frequencies, amplitudes and phases applied to every channel; each channel
/// gets its own fixed axis per component.
struct NoiseProfile {
  std::vector<double> frequencies_hz;
  std::vector<double> amplitudes;
  std::vector<double> phases;
};

enum class PhaseMode { Fixed, Random };

namespace detail {

// Golden-spiral point n of a fixed 32-point set: deterministic, well spread.
inline Vector3 spiral_axis(int n) {
  constexpr int kPoints = 32;
  const double z = 1.0 - (2.0 * (n % kPoints) + 1.0) / kPoints;
  const double r = std::sqrt(1.0 - z * z);
  const double az = n * std::numbers::pi * (3.0 - std::sqrt(5.0));
  return Vector3(r * std::cos(az), r * std::sin(az), z);
}

}  // namespace detail

/// Deterministic bounded measurement noise. Channel j of `direction` perturbs
/// column j of the direction matrix; `gyro` perturbs the rate reading.
struct NoiseModel {
  std::vector<std::vector<Sinusoid>> direction;
  std::vector<Sinusoid> gyro;
  std::uint64_t rng_seed = 0;

  static NoiseModel none() { return {}; }

  /// Builds per-channel sinusoids from profiles. In Random mode phases are
  /// drawn uniformly from [0, 2π) with `seed`; axes are fixed either way.
  static NoiseModel from_profiles(int channels, const NoiseProfile& dir, const NoiseProfile& gyr,
                                  PhaseMode mode, std::uint64_t seed) {
    NoiseModel nm;
    nm.rng_seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 2.0 * std::numbers::pi);
    auto build = [&](const NoiseProfile& p, int axis_base) {
      if (p.amplitudes.size() != p.frequencies_hz.size() || p.phases.size() != p.frequencies_hz.size()) {
        throw Error(Errc::InvalidConfig, "noise profile: frequency/amplitude/phase lengths differ");
      }
      std::vector<Sinusoid> out;
      for (std::size_t s = 0; s < p.frequencies_hz.size(); ++s) {
        const double phase = mode == PhaseMode::Random ? uni(rng) : p.phases[s];
        out.push_back({p.frequencies_hz[s], phase, p.amplitudes[s],
                       detail::spiral_axis(axis_base + static_cast<int>(s))});
      }
      return out;
    };
    for (int j = 0; j < channels; ++j) nm.direction.push_back(build(dir, 3 * j));
    nm.gyro = build(gyr, 29);
    return nm;
  }

  /// Default profile: 1/10/100 Hz at 1.2°/0.8°/0.4° on directions and
  /// 10/200 Hz at 0.6°/0.37° per second on the gyro.
  static NoiseModel standard_profile(int channels, PhaseMode mode = PhaseMode::Fixed,
                                  std::uint64_t seed = 0) {
    return from_profiles(channels, default_direction_profile(), default_gyro_profile(), mode, seed);
  }

  static NoiseProfile default_direction_profile() {
    const double third = 2.0 * std::numbers::pi / 3.0;
    return {{1.0, 10.0, 100.0}, {1.2 * kDegree, 0.8 * kDegree, 0.4 * kDegree}, {0.0, third, 2.0 * third}};
  }
  static NoiseProfile default_gyro_profile() {
    return {{10.0, 200.0}, {0.6 * kDegree, 0.37 * kDegree}, {0.0, 2.0 * std::numbers::pi / 3.0}};
  }

  Vector3 direction_noise(std::size_t channel, double t) const {
    Vector3 n = Vector3::Zero();
    if (channel < direction.size()) {
      for (const auto& s : direction[channel]) n += s.at(t);
    }
    return n;
  }

  Vector3 gyro_noise(double t) const {
    Vector3 w = Vector3::Zero();
    for (const auto& s : gyro) w += s.at(t);
    return w;
  }

  /// Amplitude budgets: per-channel sum of amplitudes must not exceed the caps.
  void validate(double direction_cap, double gyro_cap) const {
    auto check = [](const std::vector<Sinusoid>& list, double cap, const std::string& field) {
      double sum = 0.0;
      for (const auto& s : list) {
        if (!(s.amplitude >= 0.0) || !std::isfinite(s.frequency_hz) || !std::isfinite(s.phase)) {
          throw Error(Errc::InvalidConfig, field + ": amplitudes must be >= 0 and parameters finite");
        }
        if (!s.axis.allFinite() || std::abs(s.axis.norm() - 1.0) > 1e-9) {
          throw Error(Errc::InvalidConfig, field + ": axis must be a unit vector");
        }
        sum += s.amplitude;
      }
      if (sum > cap * (1.0 + 1e-12)) {
        throw Error(Errc::InvalidConfig, field + ": amplitude sum " + std::to_string(sum) +
                                             " exceeds cap " + std::to_string(cap));
      }
    };
    for (std::size_t j = 0; j < direction.size(); ++j) {
      check(direction[j], direction_cap, "noise.direction[" + std::to_string(j) + "]");
    }
    check(gyro, gyro_cap, "noise.gyro");
  }
};

inline constexpr double kDirectionNoiseCap = 2.4 * kDegree;
inline constexpr double kGyroNoiseCap = 0.97 * kDegree;

/// Appends e₁×e₂ (and u₁×u₂) as a third column when only two directions are seen.
inline std::pair<Matrix3, Matrix3> augment_two_vectors(const Matrix3X& e_raw, const Matrix3X& u_raw,
                                                       double min_sep = 1e-3) {
  if (e_raw.cols() != 2 || u_raw.cols() != 2) {
    throw Error(Errc::DegenerateDirections, "augment_two_vectors needs exactly two columns");
  }
  auto separation = [](const Vector3& a, const Vector3& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
  };
  for (const Matrix3X* m : {&e_raw, &u_raw}) {
    const double ang = separation(m->col(0), m->col(1));
    if (!(ang >= min_sep && ang <= std::numbers::pi - min_sep)) {
      throw Error(Errc::DegenerateDirections,
                  "direction pair separated by " + std::to_string(ang) + " rad");
    }
  }
  Matrix3 e, u;
  e << e_raw.col(0), e_raw.col(1), Vector3(e_raw.col(0)).cross(Vector3(e_raw.col(1)));
  u << u_raw.col(0), u_raw.col(1), Vector3(u_raw.col(0)).cross(Vector3(u_raw.col(1)));
  return {e, u};
}

/// Uᵐ = Rᵀ·E + N(t); column j is perturbed by noise channel `channels[j]`
/// (column index when `channels` is empty). Columns are not renormalized.
inline Matrix3X synthesize_directions(const Rotation& r, const Matrix3X& e, const NoiseModel& noise,
                                      double t, const std::vector<int>& channels = {}) {
  Matrix3X u = r.matrix().transpose() * e;
  for (Eigen::Index j = 0; j < e.cols(); ++j) {
    const auto ch = channels.empty() ? static_cast<std::size_t>(j) : static_cast<std::size_t>(channels[j]);
    u.col(j) += noise.direction_noise(ch, t);
  }
  return u;
}

/// Ωᵐ = Ω + w(t) + β
inline Vector3 synthesize_gyro(const Vector3& omega, const Vector3& beta, const NoiseModel& noise,
                               double t) {
  return omega + noise.gyro_noise(t) + beta;
}

struct WeightOptions {
  double regularization = 1e-3;  // μ on the null space of E
  double eig_gap = 1e-3;
  double rank_tol = 1e-6;        // on σ_min(E)/σ_max(E)
};

/// W = E⁺·diag(target)·E⁺ᵀ + μ·(I − E⁺E), so that E·W·Eᵀ = diag(target).
inline MatrixX choose_weights(const Matrix3X& e, const Vector3& target_eigs,
                              const WeightOptions& opt = {}) {
  const Eigen::Index k = e.cols();
  if (k < 3) {
    throw Error(Errc::RankDeficient, "direction matrix has " + std::to_string(k) + " columns");
  }
  Eigen::JacobiSVD<Matrix3X> svd(e);
  const auto& sv = svd.singularValues();
  if (!(sv(2) > opt.rank_tol * sv(0))) {
    throw Error(Errc::RankDeficient, "sigma_min/sigma_max = " + std::to_string(sv(2) / sv(0)));
  }

  Vector3 sorted = target_eigs;
  std::sort(sorted.data(), sorted.data() + 3);
  if (!(sorted(0) > 0.0) || sorted(1) - sorted(0) < opt.eig_gap || sorted(2) - sorted(1) < opt.eig_gap) {
    throw Error(Errc::EigensNotDistinct, "target eigenvalues must be positive and separated by eig_gap");
  }

  const Matrix3 eet = e * e.transpose();
  const MatrixX pinv = e.transpose() * eet.inverse();  // k×3, E·E⁺ = I
  const Matrix3 target = target_eigs.asDiagonal();
  MatrixX w = pinv * target * pinv.transpose() +
              opt.regularization * (MatrixX::Identity(k, k) - pinv * e);
  w = 0.5 * (w + w.transpose()).eval();

  const Matrix3 kmat = e * w * e.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix3> es(0.5 * (kmat + kmat.transpose()));
  const Vector3 ev = es.eigenvalues();
  if (ev(1) - ev(0) < opt.eig_gap || ev(2) - ev(1) < opt.eig_gap || !(ev(0) > 0.0)) {
    throw Error(Errc::EigensNotDistinct, "resulting K has eigenvalues too close");
  }
  return w;
}

/// L = E·W·Uᵐᵀ
inline Matrix3 compute_L(const Matrix3X& e, const MatrixX& w, const Matrix3X& u_m) {
  return e * w * u_m.transpose();
}

/// S_L(R̂) = vex(LᵀR̂ − R̂ᵀL). The argument is A − Aᵀ, exactly skew in
/// floating point.
inline Vector3 compute_SL(const Rotation& r_hat, const Matrix3& l) {
  const Matrix3 a = l.transpose() * r_hat.matrix();
  return vex(a - a.transpose());
}

/// One sampling instant of sensor data, ready for the estimator.
struct MeasurementFrame {
  double t = 0.0;
  Matrix3X E;
  Matrix3X U_m;
  Vector3 Omega_m = Vector3::Zero();
  MatrixX W;
  Matrix3 L = Matrix3::Zero();  // E·W·Uᵐᵀ
  Matrix3 K = Matrix3::Zero();  // E·W·Eᵀ

  static MeasurementFrame make(double t, Matrix3X e, Matrix3X u_m, const Vector3& omega_m, MatrixX w) {
    if (e.cols() != u_m.cols() || w.rows() != e.cols() || w.cols() != e.cols()) {
      throw Error(Errc::InvalidConfig, "measurement frame: dimension mismatch");
    }
    MeasurementFrame f;
    f.t = t;
    f.L = compute_L(e, w, u_m);
    f.K = e * w * e.transpose();
    f.E = std::move(e);
    f.U_m = std::move(u_m);
    f.Omega_m = omega_m;
    f.W = std::move(w);
    return f;
  }
};

}  // namespace vae
