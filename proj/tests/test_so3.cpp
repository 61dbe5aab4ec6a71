#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"
#include "vae/so3.hpp"

namespace vae {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Hat, ZeroVectorGivesZeroMatrix) { EXPECT_EQ(hat(Vector3::Zero().eval()), Matrix3::Zero()); }

TEST(Hat, ActsAsCrossProduct) {
  EXPECT_EQ(hat(Vector3::UnitX().eval()) * Vector3::UnitY(), Vector3::UnitZ());
  oracle::Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const Vector3 v = rng.vector(3.0), u = rng.vector(3.0);
    EXPECT_LE((hat(v) * u - v.cross(u)).norm(), 1e-14);
    EXPECT_EQ(hat(v) + hat(v).transpose(), Matrix3::Zero());
  }
}

TEST(Vex, InvertsHat) {
  const Vector3 v(0.3, -1.2, 2.2);
  EXPECT_EQ(vex(hat(v)), v);
  EXPECT_EQ(vex(hat(Vector3(1, 2, 3))), Vector3(1, 2, 3));
  EXPECT_EQ(vex(Matrix3::Zero()), Vector3::Zero());
}

TEST(Vex, RejectsSymmetricPart) {
  Matrix3 m = hat(Vector3(1, 2, 3));
  m(0, 1) += 1e-6;
  try {
    vex(m);
    FAIL() << "expected NotSkewSymmetric";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotSkewSymmetric);
  }
}

TEST(Vex, WahbaGradientArgumentIsExactlySkew) {
  oracle::Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Matrix3 a = rng.matrix(5.0);
    const Matrix3 r = rng.rotation().matrix();
    const Matrix3 arg = a.transpose() * r - r.transpose() * a;
    EXPECT_EQ((arg + arg.transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NO_THROW(vex(arg));
  }
}

TEST(Exp, IdentityAndQuarterTurn) {
  EXPECT_EQ(exp_so3(Vector3::Zero().eval()).matrix(), Matrix3::Identity());
  const Rotation q = exp_so3(Vector3(kPi / 2, 0, 0));
  EXPECT_LE((q * Vector3::UnitY() - Vector3::UnitZ()).norm(), 1e-15);
}

TEST(Exp, MatchesAngleAxisOracle) {
  oracle::Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Vector3 v = rng.vector(3.0);
    EXPECT_LE((exp_so3(v).matrix() - oracle::angle_axis_matrix(v)).norm(), 1e-14);
  }
  // series branch
  const Vector3 tiny(3e-7, -2e-7, 1e-7);
  EXPECT_LE((exp_so3(tiny).matrix() - oracle::angle_axis_matrix(tiny)).norm(), 4e-16);
}

TEST(Exp, OutputsAreRotations) {
  oracle::Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const Vector3 v = rng.vector(i % 2 == 0 ? 10.0 : 1e-6);
    const Rotation r = exp_so3(v);
    ASSERT_LE(r.orthonormality_defect(), 1e-9);
    ASSERT_NEAR(r.matrix().determinant(), 1.0, 1e-9);
    ASSERT_LE((r * exp_so3(Vector3(-v))).matrix().isIdentity(1e-12), true);
  }
}

TEST(Log, Identity) { EXPECT_EQ(log_so3(Rotation::identity()), Vector3::Zero()); }

TEST(Log, RoundTripBelowPi) {
  EXPECT_NEAR(log_so3(exp_so3(Vector3(0, 0, 3.0))).norm(), 3.0, 1e-10);
  oracle::Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const Vector3 v = rng.uniform(0.0, kPi - 0.01) * rng.unit_vector();
    EXPECT_LE((log_so3(exp_so3(v)) - v).norm(), 1e-10);
  }
  for (int i = 0; i < 1000; ++i) {
    const Vector3 v = rng.uniform(0.0, kPi - 1e-3) * rng.unit_vector();
    EXPECT_LE((log_so3(exp_so3(v)) - v).norm(), 1e-9);
  }
}

TEST(Log, SmallAngleSeries) {
  const Vector3 v(4e-7, -1e-7, 2e-7);
  EXPECT_LE((log_so3(exp_so3(v)) - v).norm(), 1e-12 * v.norm());
}

TEST(Log, NearBranchCut) {
  oracle::Rng rng(6);
  for (double gap : {1e-4, 1e-7, 0.0}) {
    for (int i = 0; i < 100; ++i) {
      const Vector3 axis = rng.unit_vector();
      const Vector3 v = (kPi - gap) * axis;
      const Vector3 back = log_so3(Rotation::unchecked(oracle::angle_axis_matrix(v)));
      EXPECT_NEAR(back.norm(), kPi - gap, 1e-6);
      if (gap > 0.0) {
        EXPECT_LE((back - v).norm(), 1e-6) << "gap " << gap;
      } else {
        // at exactly π both signs of the axis are valid
        EXPECT_LE(std::min((back - v).norm(), (back + v).norm()), 1e-6);
      }
    }
  }
}

TEST(PrincipalAngle, KnownValues) {
  EXPECT_EQ(principal_angle(Rotation::identity()), 0.0);
  const Vector3 axis = Vector3(3, 6, 2) / 7.0;
  EXPECT_NEAR(axis.norm(), 1.0, 1e-15);
  EXPECT_NEAR(principal_angle(exp_so3(Vector3(kPi / 4 * axis))), kPi / 4, 1e-15);
}

TEST(PrincipalAngle, AgreesWithLogAndArccos) {
  oracle::Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Rotation q = rng.rotation();
    const double a = principal_angle(q);
    EXPECT_NEAR(a, log_so3(q).norm(), 1e-9);
    EXPECT_NEAR(a, principal_angle(q.transpose()), 1e-14);
    const double c = std::clamp((q.matrix().trace() - 1.0) / 2.0, -1.0, 1.0);
    EXPECT_NEAR(a, std::acos(c), 1e-7);
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, kPi);
  }
}

TEST(Project, FixedPointAndScaleRemoval) {
  oracle::Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    const Rotation r = rng.rotation();
    EXPECT_LE((project_to_so3(r.matrix()).matrix() - r.matrix()).norm(), 1e-14);
    EXPECT_LE((project_to_so3(Matrix3(1.001 * r.matrix())).matrix() - r.matrix()).norm(), 1e-12);
  }
}

TEST(Project, RestoresOrthonormality) {
  oracle::Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const Rotation r = rng.rotation();
    Matrix3 dm = rng.matrix(1.0);
    dm *= 1e-3 / dm.norm();
    const Rotation p = project_to_so3(Matrix3(r.matrix() + dm));
    EXPECT_LE(p.orthonormality_defect(), 1e-12);
    EXPECT_NEAR(p.matrix().determinant(), 1.0, 1e-12);
    EXPECT_LE((p.matrix() - r.matrix()).norm(), 2e-3);
  }
}

TEST(Project, RejectsNonPositiveDeterminant) {
  Matrix3 m = Matrix3::Identity();
  m(2, 2) = -1.0;
  EXPECT_THROW(project_to_so3(m), Error);
  EXPECT_THROW(project_to_so3(Matrix3::Zero().eval()), Error);
}

TEST(Rotation, FromMatrixValidates) {
  EXPECT_NO_THROW(Rotation::from_matrix(Matrix3::Identity()));
  EXPECT_THROW(Rotation::from_matrix(Matrix3(2.0 * Matrix3::Identity())), Error);
  Matrix3 refl = Matrix3::Identity();
  refl(0, 0) = -1.0;
  EXPECT_THROW(Rotation::from_matrix(refl), Error);
}

TEST(RightJacobian, MatchesFiniteDifference) {
  oracle::Rng rng(10);
  for (int i = 0; i < 50; ++i) {
    const Vector3 phi = rng.vector(2.0);
    const Matrix3 jr = right_jacobian(phi);
    const Matrix3 r0 = oracle::angle_axis_matrix(phi);
    for (int k = 0; k < 3; ++k) {
      const double eps = 1e-6;
      const Vector3 dp = phi + eps * Vector3::Unit(k), dm = phi - eps * Vector3::Unit(k);
      // exp(φ)ᵀ·d exp(φ + δ) / dδ_k = hat(J_r e_k)
      const Matrix3 d = r0.transpose() * (oracle::angle_axis_matrix(dp) - oracle::angle_axis_matrix(dm)) / (2 * eps);
      const Vector3 col(d(2, 1), d(0, 2), d(1, 0));
      EXPECT_LE((col - jr.col(k)).norm(), 1e-8);
    }
  }
}

}  // namespace
}  // namespace vae
