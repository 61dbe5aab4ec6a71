#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"
#include "vae/continuous.hpp"
#include "vae/estimator.hpp"
#include "vae/scenario.hpp"

namespace vae {
namespace {

EstimatorGains reference_gains(double h = 0.01) {
  return EstimatorGains::make(5.0, Vector3(17.4, 18.85, 20.3).asDiagonal(), 2e3 * Matrix3::Identity(), h);
}

struct Geometry {
  Matrix3X E;
  MatrixX W;
  Matrix3 K;
};

Geometry reference_geometry() {
  const ScenarioConfig cfg = reference_scenario();
  Geometry g{cfg.directions, choose_weights(cfg.directions, cfg.target_eigs, cfg.weights), Matrix3::Zero()};
  g.K = g.E * g.W * g.E.transpose();
  return g;
}

MeasurementFrame noise_free_frame(const Geometry& geo, const Rotation& r, const Vector3& omega_m, double t = 0.0) {
  return MeasurementFrame::make(t, geo.E, r.matrix().transpose() * geo.E, omega_m, geo.W);
}

ContinuousSetup reference_setup() {
  const ScenarioConfig cfg = reference_scenario();
  const Geometry geo = reference_geometry();
  return {cfg.inertia, cfg.torque, cfg.beta, geo.E, geo.W, cfg.gains()};
}

JointState reference_joint_initial() {
  const ScenarioConfig cfg = reference_scenario();
  JointState s;
  s.R = cfg.R0;
  s.Omega = cfg.Omega0;
  s.est = initial_state(cfg.R_hat0, cfg.Omega_hat0, cfg.beta_hat0, cfg.Omega0 + cfg.beta);
  return s;
}

double joint_V(const JointState& s, const ContinuousSetup& setup) {
  return lyapunov_V(s.est, joint_frame(s, setup), setup.gains, setup.beta);
}

TEST(Phi, BuiltinsAndLookup) {
  EXPECT_TRUE(PhiFunction::identity().spot_check());
  EXPECT_TRUE(PhiFunction::log1p().spot_check());
  EXPECT_EQ(PhiFunction::by_name("log1p").name, "log1p");
  EXPECT_THROW(PhiFunction::by_name("cube"), Error);
  PhiFunction bad{"shifted", [](double x) { return x + 1.0; }, [](double) { return 1.0; }};
  EXPECT_FALSE(bad.spot_check());
}

TEST(Gains, Validation) {
  EXPECT_NO_THROW(reference_gains());
  auto message = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message([] { EstimatorGains::make(0.0, Matrix3::Identity(), Matrix3::Identity(), 0.01); })
                .find("gains.m"),
            std::string::npos);
  EXPECT_NE(message([] { EstimatorGains::make(1.0, -Matrix3::Identity(), Matrix3::Identity(), 0.01); })
                .find("gains.D"),
            std::string::npos);
  // m·I − h·D loses definiteness
  EXPECT_NE(message([] { EstimatorGains::make(1.0, 200.0 * Matrix3::Identity(), Matrix3::Identity(), 0.01); })
                .find("gains.D"),
            std::string::npos);
  EXPECT_NE(message([] { EstimatorGains::make(1.0, Matrix3::Identity(), Matrix3::Zero(), 0.01); })
                .find("gains.P"),
            std::string::npos);
  const EstimatorGains g = reference_gains();
  EXPECT_TRUE(g.P_diagonal);
  EXPECT_LE((g.P_inv * g.P - Matrix3::Identity()).norm(), 1e-15);
  Matrix3 p;
  p << 3, 1, 0, 1, 3, 0, 0, 0, 2;
  const EstimatorGains full = EstimatorGains::make(5.0, Matrix3::Identity(), p, 0.01);
  EXPECT_FALSE(full.P_diagonal);
  EXPECT_LE((full.P_inv * p - Matrix3::Identity()).norm(), 1e-14);
}

TEST(InitialState, ResidualDefinition) {
  const EstimatorState s = initial_state(Rotation::identity(), Vector3(1, 2, 3), Vector3(0.1, 0.2, 0.3),
                                         Vector3(2, 2, 2));
  EXPECT_EQ(s.omega, Vector3(2 - 1 - 0.1, 2 - 2 - 0.2, 2 - 3 - 0.3));
  EXPECT_LE((s.Omega_hat(Vector3(2, 2, 2)) - Vector3(1, 2, 3)).norm(), 1e-15);
}

TEST(Potential, Examples) {
  const Geometry geo = reference_geometry();
  oracle::Rng rng(20);
  const Rotation r = rng.rotation();
  EXPECT_LE(potential_U0(r, noise_free_frame(geo, r, Vector3::Zero())), 1e-28);

  // E = W = I, R̂Uᵐ = −E
  const Matrix3X id = Matrix3::Identity();
  const MeasurementFrame f = MeasurementFrame::make(0.0, id, -id, Vector3::Zero(), MatrixX::Identity(3, 3));
  EXPECT_DOUBLE_EQ(potential_U0(Rotation::identity(), f), 6.0);
}

TEST(Potential, ErrorCoordinateIdentity) {
  const Geometry geo = reference_geometry();
  oracle::Rng rng(21);
  for (int i = 0; i < 1000; ++i) {
    const Rotation r = rng.rotation(), r_hat = rng.rotation();
    const Matrix3 q = r.matrix() * r_hat.matrix().transpose();
    const double expected = ((Matrix3::Identity() - q).transpose() * geo.K).trace();
    EXPECT_NEAR(potential_U0(r_hat, noise_free_frame(geo, r, Vector3::Zero())), expected, 1e-12);
  }
}

TEST(ContinuousRhs, PerfectEstimateIsEquilibrium) {
  const Geometry geo = reference_geometry();
  const EstimatorGains g = reference_gains();
  oracle::Rng rng(22);
  const Rotation r = rng.rotation();
  const Vector3 omega(0.1, -0.3, 0.2), beta(-0.01, -0.005, 0.02);
  const EstimatorState s{r, Vector3::Zero(), beta};
  const FilterDerivative d = continuous_rhs(s, noise_free_frame(geo, r, omega + beta), g);
  EXPECT_LE(d.omega_dot.norm(), 1e-13);
  EXPECT_LE(d.beta_hat_dot.norm(), 1e-15);
  EXPECT_LE((d.R_hat_dot - r.matrix() * hat(omega)).norm(), 1e-15);
}

TEST(ContinuousRhs, MatchesHandEvaluation) {
  const Geometry geo = reference_geometry();
  EstimatorGains g = EstimatorGains::make(5.0, Vector3(17.4, 18.85, 20.3).asDiagonal(),
                                          Vector3(100, 200, 300).asDiagonal(), 0.01, PhiFunction::log1p());
  oracle::Rng rng(23);
  const Rotation r = rng.rotation(), r_hat = rng.rotation();
  const EstimatorState s{r_hat, rng.vector(0.2), rng.vector(0.05)};
  const Vector3 omega_m = rng.vector(0.5);
  const MeasurementFrame f = noise_free_frame(geo, r, omega_m);
  const FilterDerivative d = continuous_rhs(s, f, g);

  const Vector3 omega_hat = omega_m - s.omega - s.beta_hat;
  const double u0 = potential_U0(r_hat, f);
  const Vector3 sl = compute_SL(r_hat, f.L);
  const Vector3 omega_dot = (-5.0 * omega_hat.cross(s.omega) + sl / (1.0 + u0) - g.D * s.omega) / 5.0;
  const Vector3 beta_dot = Vector3(sl(0) / 100, sl(1) / 200, sl(2) / 300) / (1.0 + u0);
  EXPECT_LE((d.omega_dot - omega_dot).norm(), 1e-14);
  EXPECT_LE((d.beta_hat_dot - beta_dot).norm(), 1e-16);
  EXPECT_LE((d.R_hat_dot - r_hat.matrix() * hat(omega_hat)).norm(), 1e-15);
}

TEST(ContinuousFilter, DissipationIdentity) {
  const ContinuousSetup setup = reference_setup();
  const auto traj = integrate_continuous(reference_joint_initial(), setup, 0.01, 300);
  const double delta = 1e-3;
  for (std::size_t i = 0; i < traj.size(); i += 30) {
    const JointState& s = traj[i];
    auto v_at = [&](double dt) { return joint_V(continuous_step(s, setup, dt), setup); };
    const double dv = oracle::five_point(v_at(-2 * delta), v_at(-delta), v_at(delta), v_at(2 * delta), delta);
    const double expected = -s.est.omega.dot(setup.gains.D * s.est.omega);
    EXPECT_NEAR(dv, expected, 1e-6 * std::abs(expected)) << "t = " << s.t;
  }
}

TEST(ContinuousFilter, ConservativeLimit) {
  ContinuousSetup setup = reference_setup();
  setup.gains.D = Matrix3::Zero();
  setup.gains.P_inv = Matrix3::Zero();
  JointState s = reference_joint_initial();
  s.est.beta_hat = setup.beta;
  const double v0 = joint_V(s, setup);
  double worst = 0.0;
  for (int i = 0; i < 5000; ++i) {
    s = continuous_step(s, setup, 1e-3);
    worst = std::max(worst, std::abs(joint_V(s, setup) - v0));
  }
  EXPECT_EQ(s.est.beta_hat, setup.beta);
  EXPECT_LE(worst, 1e-9 * v0);
}

TEST(Newton, ZeroStepIsLinear) {
  EstimatorGains g = reference_gains();
  g.h = 0.0;
  const Vector3 c(1.0, -2.0, 0.5);
  const NewtonResult r = newton_solve_omega(c, Vector3::Zero(), Vector3(0.3, 0.1, 0.2), Vector3::Zero(), g);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_LE((r.omega - c / 5.0).norm(), 1e-16);
}

TEST(Newton, AgreesWithFixedPointOracle) {
  const EstimatorGains g = reference_gains();
  oracle::Rng rng(24);
  for (int i = 0; i < 1000; ++i) {
    const Vector3 c = rng.vector(2.0), omega_m = rng.vector(1.0), beta_hat = rng.vector(0.05);
    const NewtonResult r = newton_solve_omega(c, rng.vector(0.3), omega_m, beta_hat, g);
    EXPECT_LE(r.residual, 1e-12);
    EXPECT_LE(r.iterations, 10);
    EXPECT_LE((r.omega - oracle::fixed_point_omega(c, omega_m, beta_hat, g.m, g.h)).norm(), 1e-10);
  }
}

TEST(Newton, AnalyticJacobianMatchesFiniteDifference) {
  oracle::Rng rng(25);
  for (int i = 0; i < 100; ++i) {
    const detail::OmegaResidual f{rng.vector(5.0), rng.vector(2.0), rng.vector(0.1), 5.0, 0.05};
    const Vector3 omega = rng.vector(1.0);
    EXPECT_LE((f.jacobian(omega) - f.jacobian_fd(omega)).norm(), 1e-7);
  }
}

TEST(Newton, FiniteDifferenceModeConverges) {
  EstimatorGains g = reference_gains();
  g.newton.jacobian = JacobianMode::FiniteDifference;
  const Vector3 c(1.0, -2.0, 0.5);
  const NewtonResult r = newton_solve_omega(c, Vector3::Zero(), Vector3(0.3, 0.1, 0.2), Vector3::Zero(), g);
  EXPECT_LE(r.residual, 1e-12);
}

TEST(Newton, DivergenceReported) {
  EstimatorGains g = reference_gains();
  g.newton.tol = 1e-300;
  g.newton.max_iter = 3;
  try {
    newton_solve_omega(Vector3(1, 2, 3), Vector3::Zero(), Vector3(0.3, 0.1, 0.2), Vector3::Zero(), g);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NewtonDivergence);
  }
}

TEST(DiscreteStep, SatisfiesUpdateEquations) {
  const Geometry geo = reference_geometry();
  const EstimatorGains g = reference_gains();
  const double h = g.h;
  oracle::Rng rng(26);
  for (int trial = 0; trial < 50; ++trial) {
    const Rotation r0 = rng.rotation(), r1 = rng.rotation(0.05) * r0;
    const MeasurementFrame f0 = noise_free_frame(geo, r0, rng.vector(0.5), 0.0);
    const MeasurementFrame f1 = noise_free_frame(geo, r1, rng.vector(0.5), h);
    const EstimatorState s{rng.rotation(), rng.vector(0.3), rng.vector(0.03)};
    const EstimatorState n = discrete_step(s, f0, f1, g);

    const Matrix3 r_hat1 = s.R_hat.matrix() * oracle::angle_axis_matrix(h * (f0.Omega_m - s.omega - s.beta_hat));
    EXPECT_LE((n.R_hat.matrix() - r_hat1).norm(), 1e-14);
    const Vector3 beta1 = s.beta_hat + h * g.P_inv * compute_SL(s.R_hat, f0.L);
    EXPECT_LE((n.beta_hat - beta1).norm(), 1e-16);
    const Vector3 c = (g.m * Matrix3::Identity() - h * g.D) * s.omega + h * compute_SL(n.R_hat, f1.L);
    const Vector3 rhs = oracle::angle_axis_matrix(-h * (f1.Omega_m - n.omega - n.beta_hat)) * c;
    EXPECT_LE((g.m * n.omega - rhs).norm(), 1e-12);
    EXPECT_LE(n.R_hat.orthonormality_defect(), 1e-9);
  }
}

TEST(DiscreteStep, ExactEstimateIsFixedPoint) {
  const ScenarioConfig cfg = reference_scenario();
  const Geometry geo = reference_geometry();
  const EstimatorGains g = cfg.gains();
  const auto truth = propagate_truth({0.0, cfg.R0, cfg.Omega0, Vector3::Zero()}, cfg.inertia, cfg.torque, 0.01, 10.0);
  auto frame = [&](std::size_t i) { return noise_free_frame(geo, truth[i].R, truth[i].Omega_step + cfg.beta, truth[i].t); };
  EstimatorState s{cfg.R0, Vector3::Zero(), cfg.beta};
  for (std::size_t i = 0; i + 1 < truth.size(); ++i) {
    s = discrete_step(s, frame(i), frame(i + 1), g);
    ASSERT_LE(principal_angle(truth[i + 1].R * s.R_hat.transpose()), 1e-9) << i;
    ASSERT_LE(s.omega.norm(), 1e-9);
    ASSERT_LE((s.beta_hat - cfg.beta).norm(), 1e-9);
  }
}

// Per-step discrepancy against the continuous filter (advanced with RKMK4 on
// the joint truth/estimator state) shrinks by ~4 when h halves.
TEST(DiscreteStep, LocalSecondOrderDiscrepancy) {
  const ContinuousSetup setup = reference_setup();
  const JointState s0 = reference_joint_initial();
  auto discrepancy = [&](double h) {
    const JointState ref = continuous_step(s0, setup, h);
    const EstimatorGains g = EstimatorGains::make(setup.gains.m, setup.gains.D, setup.gains.P, h);
    const EstimatorState d = discrete_step(s0.est, joint_frame(s0, setup), joint_frame(ref, setup), g);
    return log_so3(d.R_hat.transpose() * ref.est.R_hat).norm() + (d.omega - ref.est.omega).norm() +
           (d.beta_hat - ref.est.beta_hat).norm();
  };
  const double ratio = discrepancy(0.01) / discrepancy(0.005);
  EXPECT_GE(ratio, 3.4);
  EXPECT_LE(ratio, 4.6);
}

TEST(Lyapunov, Examples) {
  const EstimatorGains g = reference_gains();
  const Matrix3 k = Vector3(3, 2, 1).asDiagonal();
  EXPECT_EQ(lyapunov_V(Rotation::identity(), Vector3::Zero(), Vector3::Zero(), k, g), 0.0);
  EXPECT_DOUBLE_EQ(lyapunov_V(Rotation::identity(), Vector3(1, 0, 0), Vector3::Zero(), k, g), 2.5);
}

TEST(Lyapunov, MeasurementAndErrorFormsAgree) {
  const Geometry geo = reference_geometry();
  const EstimatorGains g = reference_gains();
  oracle::Rng rng(27);
  for (int i = 0; i < 1000; ++i) {
    const Rotation r = rng.rotation(), r_hat = rng.rotation();
    const Vector3 beta = rng.vector(0.03);
    const EstimatorState s{r_hat, rng.vector(0.5), rng.vector(0.03)};
    const double v_meas = lyapunov_V(s, noise_free_frame(geo, r, rng.vector(1.0)), g, beta);
    const double v_err = lyapunov_V(r * r_hat.transpose(), s.omega, Vector3(beta - s.beta_hat), geo.K, g);
    EXPECT_NEAR(v_meas, v_err, 1e-12);
    EXPECT_GE(v_meas, 0.0);
  }
}

}  // namespace
}  // namespace vae
