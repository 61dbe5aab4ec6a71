#pragma once

// Rotation group primitives: hat/vex, exponential and logarithm maps,
// principal angle, projection onto SO(3) and the right Jacobian.

#include <Eigen/Core>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "vae/error.hpp"

namespace vae {

template <typename Scalar>
using Vector3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3T = Eigen::Matrix<Scalar, 3, 3>;

using Vector3 = Vector3T<double>;
using Matrix3 = Matrix3T<double>;

namespace so3 {

inline constexpr double kExpSeriesThreshold = 1e-6;
inline constexpr double kLogSmallAngle = 1e-6;
inline constexpr double kLogNearPi = 1e-6;
inline constexpr double kSkewTolerance = 1e-9;
inline constexpr double kRotationTolerance = 1e-9;

}  // namespace so3

/// Cross-product matrix: hat(v) * u == v.cross(u).
template <typename Scalar>
Matrix3T<Scalar> hat(const Vector3T<Scalar>& v) {
  Matrix3T<Scalar> m;
  m << Scalar(0), -v.z(), v.y(),
       v.z(), Scalar(0), -v.x(),
       -v.y(), v.x(), Scalar(0);
  return m;
}

/// Inverse of hat(). Rejects inputs whose symmetric part exceeds `tol`
/// (max-abs entry); the symmetric part is otherwise discarded.
template <typename Derived>
Vector3T<typename Derived::Scalar> vex(const Eigen::MatrixBase<Derived>& m,
                                       double tol = so3::kSkewTolerance) {
  using Scalar = typename Derived::Scalar;
  const Matrix3T<Scalar> sym = Scalar(0.5) * (m + m.transpose());
  if (sym.cwiseAbs().maxCoeff() > tol) {
    throw Error(Errc::NotSkewSymmetric,
                "symmetric part has max-abs entry " + std::to_string(double(sym.cwiseAbs().maxCoeff())));
  }
  return Scalar(0.5) * Vector3T<Scalar>(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
}

/// Element of SO(3). Construction through `from_matrix` validates
/// orthonormality and determinant; group operations keep the invariant.
template <typename Scalar>
class RotationT {
 public:
  using Matrix = Matrix3T<Scalar>;

  RotationT() : m_(Matrix::Identity()) {}

  static RotationT identity() { return RotationT(); }

  static RotationT from_matrix(const Matrix& m, double tol = so3::kRotationTolerance) {
    if (!m.allFinite()) throw Error(Errc::NotARotation, "non-finite entries");
    const double ortho = double((m.transpose() * m - Matrix::Identity()).norm());
    const double det = double(m.determinant());
    if (ortho > tol || std::abs(det - 1.0) > tol) {
      throw Error(Errc::NotARotation, "orthonormality defect " + std::to_string(ortho) +
                                          ", det " + std::to_string(det));
    }
    return RotationT(m, Trusted{});
  }

  /// For results of exact group operations only (exp, products, polar factor).
  static RotationT unchecked(const Matrix& m) { return RotationT(m, Trusted{}); }

  const Matrix& matrix() const { return m_; }
  RotationT transpose() const { return RotationT(m_.transpose(), Trusted{}); }
  RotationT inverse() const { return transpose(); }

  RotationT operator*(const RotationT& other) const { return RotationT(m_ * other.m_, Trusted{}); }
  Vector3T<Scalar> operator*(const Vector3T<Scalar>& v) const { return m_ * v; }

  /// ‖RᵀR − I‖_F
  double orthonormality_defect() const {
    return double((m_.transpose() * m_ - Matrix::Identity()).norm());
  }

 private:
  struct Trusted {};
  RotationT(const Matrix& m, Trusted) : m_(m) {}

  Matrix m_;
};

using Rotation = RotationT<double>;

/// Rodrigues formula, with a second-order series below the small-angle threshold.
template <typename Scalar>
RotationT<Scalar> exp_so3(const Vector3T<Scalar>& v) {
  using std::cos;
  using std::sin;
  const Scalar theta = v.norm();
  const Matrix3T<Scalar> k = hat(v);
  const Matrix3T<Scalar> k2 = k * k;
  if (theta < Scalar(so3::kExpSeriesThreshold)) {
    return RotationT<Scalar>::unchecked(Matrix3T<Scalar>::Identity() + k + Scalar(0.5) * k2);
  }
  const Scalar a = sin(theta) / theta;
  const Scalar b = (Scalar(1) - cos(theta)) / (theta * theta);
  return RotationT<Scalar>::unchecked(Matrix3T<Scalar>::Identity() + a * k + b * k2);
}

/// Principal-branch logarithm, ‖result‖ ∈ [0, π].
template <typename Scalar>
Vector3T<Scalar> log_so3(const RotationT<Scalar>& rot) {
  using std::atan2;
  using std::sqrt;
  const Matrix3T<Scalar>& r = rot.matrix();
  const Vector3T<Scalar> axis_sin =
      Scalar(0.5) * Vector3T<Scalar>(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const Scalar s = axis_sin.norm();
  const Scalar c = std::clamp(Scalar(0.5) * (r.trace() - Scalar(1)), Scalar(-1), Scalar(1));
  const Scalar theta = atan2(s, c);

  if (theta < Scalar(so3::kLogSmallAngle)) {
    // θ / sin θ ≈ 1 + θ²/6
    return (Scalar(1) + theta * theta / Scalar(6)) * axis_sin;
  }
  if (theta > Scalar(std::numbers::pi - so3::kLogNearPi)) {
    // Symmetric part: (R + Rᵀ)/2 = cos θ·I + (1 − cos θ)·a·aᵀ
    const Matrix3T<Scalar> aat =
        (Scalar(0.5) * (r + r.transpose()) - c * Matrix3T<Scalar>::Identity()) / (Scalar(1) - c);
    Eigen::Index col = 0;
    aat.diagonal().maxCoeff(&col);
    Vector3T<Scalar> axis = aat.col(col) / sqrt(std::max(aat(col, col), Scalar(1e-300)));
    axis.normalize();
    if (axis.dot(axis_sin) < Scalar(0)) axis = -axis;
    return theta * axis;
  }
  return (theta / s) * axis_sin;
}

/// Rotation angle of `q`, in [0, π]. Equal to arccos((tr q − 1)/2), evaluated
/// through atan2 so that angles near zero keep full relative precision.
template <typename Scalar>
Scalar principal_angle(const RotationT<Scalar>& q) {
  using std::atan2;
  const Matrix3T<Scalar>& r = q.matrix();
  const Scalar s =
      Scalar(0.5) * Vector3T<Scalar>(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)).norm();
  const Scalar c = std::clamp(Scalar(0.5) * (r.trace() - Scalar(1)), Scalar(-1), Scalar(1));
  return atan2(s, c);
}

/// Nearest rotation in Frobenius norm (orthogonal polar factor).
template <typename Scalar>
RotationT<Scalar> project_to_so3(const Matrix3T<Scalar>& m) {
  if (!m.allFinite()) throw Error(Errc::Degenerate, "non-finite matrix");
  if (!(m.determinant() > Scalar(0))) {
    throw Error(Errc::Degenerate, "determinant " + std::to_string(double(m.determinant())) + " <= 0");
  }
  Eigen::JacobiSVD<Matrix3T<Scalar>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return RotationT<Scalar>::unchecked(svd.matrixU() * svd.matrixV().transpose());
}

/// Right Jacobian: exp(φ + δ) ≈ exp(φ)·exp(J_r(φ)·δ) for small δ.
template <typename Scalar>
Matrix3T<Scalar> right_jacobian(const Vector3T<Scalar>& phi) {
  using std::cos;
  using std::sin;
  const Scalar theta = phi.norm();
  const Matrix3T<Scalar> k = hat(phi);
  if (theta < Scalar(so3::kExpSeriesThreshold)) {
    return Matrix3T<Scalar>::Identity() - Scalar(0.5) * k + k * k / Scalar(6);
  }
  const Scalar t2 = theta * theta;
  return Matrix3T<Scalar>::Identity() - (Scalar(1) - cos(theta)) / t2 * k +
         (theta - sin(theta)) / (t2 * theta) * k * k;
}

/// Truncated inverse right Jacobian, J_r(θ)⁻¹·ξ to third order in θ. For
/// R = R₀·exp(θ) with Ṙ = R·hat(ξ) this gives θ̇; fourth-order Munthe-Kaas
/// stages need nothing beyond the truncation.
template <typename Scalar>
Vector3T<Scalar> right_jacobian_inv_approx(const Vector3T<Scalar>& theta, const Vector3T<Scalar>& xi) {
  const Vector3T<Scalar> c1 = theta.cross(xi);
  return xi + Scalar(0.5) * c1 + theta.cross(c1) / Scalar(12);
}

}  // namespace vae
