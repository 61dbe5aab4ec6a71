#pragma once

// Scenario configuration, the end-to-end simulation driver and the
// random-initialization convergence sweep.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <future>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "vae/diagnostics.hpp"
#include "vae/error.hpp"
#include "vae/estimator.hpp"
#include "vae/measurement.hpp"
#include "vae/rigid_body.hpp"
#include "vae/so3.hpp"

namespace vae {

/// From `t_start` on, only the listed direction indices are measured.
struct AvailabilitySegment {
  double t_start = 0.0;
  std::vector<int> indices;
};

struct NoiseSpec {
  bool enabled = true;
  PhaseMode phase_mode = PhaseMode::Fixed;
  NoiseProfile direction = NoiseModel::default_direction_profile();
  NoiseProfile gyro = NoiseModel::default_gyro_profile();
  double direction_cap = kDirectionNoiseCap;  // rad
  double gyro_cap = kGyroNoiseCap;            // rad/s
};

struct ScenarioConfig {
  std::string name = "custom";
  double duration = 40.0;
  double step = 0.01;

  // Truth
  InertiaMatrix inertia = InertiaMatrix::diagonal(1.0, 1.0, 1.0);
  TorqueProfile torque;
  Rotation R0;
  Vector3 Omega0 = Vector3::Zero();
  Vector3 beta = Vector3::Zero();

  // Sensors
  Matrix3X directions;
  std::vector<AvailabilitySegment> availability;
  double min_separation = 1e-3;
  NoiseSpec noise;

  // Weights and gains
  Vector3 target_eigs = Vector3(3.0, 2.0, 1.0);
  WeightOptions weights;
  double m = 1.0;
  Matrix3 D = Matrix3::Identity();
  Matrix3 P = Matrix3::Identity();
  std::string phi = "identity";
  NewtonOptions newton;

  // Estimator initial values
  Rotation R_hat0;
  Vector3 Omega_hat0 = Vector3::Zero();
  Vector3 beta_hat0 = Vector3::Zero();
  /// Start the estimator on the truth: R̂₀ = R₀, β̂₀ = β and Ω̂₀ equal to the
  /// sampled rate the gyro reports over the first interval.
  bool exact_initial_estimate = false;

  std::uint64_t seed = 0;

  std::string output_dir = "out";
  bool plots = true;

  EstimatorGains gains() const {
    return EstimatorGains::make(m, D, P, step, PhiFunction::by_name(phi), newton);
  }

  NoiseModel noise_model() const {
    if (!noise.enabled) return NoiseModel::none();
    NoiseModel nm = NoiseModel::from_profiles(static_cast<int>(directions.cols()), noise.direction,
                                              noise.gyro, noise.phase_mode, seed);
    return nm;
  }

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(duration / step)); }

  /// Active direction indices at time t.
  const std::vector<int>& active_indices(double t) const {
    const AvailabilitySegment* seg = &availability.front();
    for (const auto& s : availability) {
      if (s.t_start <= t + 1e-12) seg = &s;
    }
    return seg->indices;
  }

  /// Throws InvalidConfig naming the offending field.
  void validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
      throw Error(Errc::InvalidConfig, field + ": " + why);
    };
    if (!(step > 0.0) || !std::isfinite(step)) fail("step", "must be > 0");
    if (!(duration >= step) || !std::isfinite(duration)) fail("duration", "must be >= step");
    torque.validate();
    for (const auto& [field, v] : {std::pair{"truth.Omega0", &Omega0}, std::pair{"truth.bias", &beta},
                                   std::pair{"estimator_init.Omega_hat0", &Omega_hat0},
                                   std::pair{"estimator_init.beta_hat0", &beta_hat0}}) {
      if (!v->allFinite()) fail(field, "non-finite entries");
    }
    if (directions.cols() < 2) fail("sensors.directions", "need at least 2 directions");
    for (Eigen::Index j = 0; j < directions.cols(); ++j) {
      if (!directions.col(j).allFinite() || std::abs(directions.col(j).norm() - 1.0) > 1e-9) {
        fail("sensors.directions[" + std::to_string(j) + "]", "must be a unit vector");
      }
    }
    if (availability.empty()) fail("sensors.availability", "at least one segment required");
    if (availability.front().t_start > 0.0) fail("sensors.availability[0].t_start", "must be <= 0");
    for (std::size_t i = 0; i < availability.size(); ++i) {
      const auto& seg = availability[i];
      const std::string field = "sensors.availability[" + std::to_string(i) + "]";
      if (i > 0 && !(seg.t_start > availability[i - 1].t_start)) fail(field, "t_start must increase");
      if (seg.indices.size() < 2) fail(field, "at least 2 directions must be available");
      std::set<int> seen;
      for (int idx : seg.indices) {
        if (idx < 0 || idx >= directions.cols()) fail(field, "index " + std::to_string(idx) + " out of range");
        if (!seen.insert(idx).second) fail(field, "duplicate index " + std::to_string(idx));
      }
    }
    {
      Vector3 sorted = target_eigs;
      std::sort(sorted.data(), sorted.data() + 3);
      if (!(sorted(0) > 0.0) || sorted(1) - sorted(0) < weights.eig_gap ||
          sorted(2) - sorted(1) < weights.eig_gap) {
        fail("weights.target_eigenvalues", "must be positive and pairwise separated by eig_gap");
      }
      if (!(weights.regularization > 0.0)) fail("weights.regularization", "must be > 0");
    }
    if (noise.enabled) noise_model().validate(noise.direction_cap, noise.gyro_cap);
    (void)gains();
  }
};

/// Canonical numerical experiment: 40 s at h = 0.01 s, nine inertial
/// directions, sinusoidal torque, constant gyro bias, noisy sensors.
inline ScenarioConfig reference_scenario() {
  ScenarioConfig c;
  c.name = "paper_fig123";
  c.duration = 40.0;
  c.step = 0.01;
  c.inertia = InertiaMatrix::diagonal(2.56, 3.01, 2.98);
  c.torque = {0.028, 2.7, -std::numbers::pi / 7.0, 1};
  const Vector3 axis = Vector3(3.0, 6.0, 2.0) / 7.0;
  c.R0 = exp_so3(Vector3(std::numbers::pi / 4.0 * axis));
  c.Omega0 = std::numbers::pi / 60.0 * Vector3(-2.1, 1.2, -1.1);
  c.beta = Vector3(-0.01, -0.005, 0.02);

  const double s2 = 1.0 / std::sqrt(2.0);
  const double s3 = 1.0 / std::sqrt(3.0);
  c.directions.resize(3, 9);
  c.directions << 1, 0, 0, s2, 0, s2, s3, s2, -s2,
                  0, 1, 0, s2, s2, 0, s3, -s2, 0,
                  0, 0, 1, 0, s2, s2, s3, 0, s2;
  c.availability = {{0.0, {0, 1, 2, 3, 4, 5, 6, 7, 8}}};

  c.m = 5.0;
  c.D = Vector3(17.4, 18.85, 20.3).asDiagonal();
  c.P = 2e3 * Matrix3::Identity();
  c.phi = "identity";

  c.R_hat0 = exp_so3(Vector3(std::numbers::pi / 2.5 * axis));
  c.Omega_hat0 = Vector3(-0.26, 0.1725, -0.2446);
  c.beta_hat0 = Vector3(0.0, -0.01, 0.01);
  c.output_dir = "out/paper_fig123";
  return c;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using nlohmann::json;

inline Vector3 vec3_from(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::InvalidConfig, field + ": expected [x, y, z]");
  Vector3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw Error(Errc::InvalidConfig, field + ": entries must be numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

inline json vec3_to(const Vector3& v) { return json::array({v.x(), v.y(), v.z()}); }

/// [a, b, c] means diag(a, b, c); [[..],[..],[..]] is a full row-major matrix.
inline Matrix3 mat3_from(const json& j, const std::string& field) {
  if (j.is_array() && j.size() == 3 && j[0].is_number()) {
    return vec3_from(j, field).asDiagonal();
  }
  if (!j.is_array() || j.size() != 3) throw Error(Errc::InvalidConfig, field + ": expected 3x3 matrix");
  Matrix3 m;
  for (int r = 0; r < 3; ++r) m.row(r) = vec3_from(j[r], field + "[" + std::to_string(r) + "]");
  return m;
}

inline json mat3_to(const Matrix3& m) {
  if (m.isDiagonal(0.0)) return vec3_to(m.diagonal());
  json out = json::array();
  for (int r = 0; r < 3; ++r) out.push_back(vec3_to(m.row(r).transpose()));
  return out;
}

/// {"axis": [..], "angle": θ} | {"rotation_vector": [..]} | {"matrix": [[..]]}
inline Rotation rotation_from(const json& j, const std::string& field) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, field + ": expected rotation object");
  if (j.contains("axis")) {
    const Vector3 axis = vec3_from(j.at("axis"), field + ".axis");
    if (!(axis.norm() > 0.0)) throw Error(Errc::InvalidConfig, field + ".axis: zero vector");
    if (!j.contains("angle") || !j.at("angle").is_number()) {
      throw Error(Errc::InvalidConfig, field + ".angle: required number");
    }
    return exp_so3(Vector3(j.at("angle").get<double>() * axis.normalized()));
  }
  if (j.contains("rotation_vector")) return exp_so3(vec3_from(j.at("rotation_vector"), field + ".rotation_vector"));
  if (j.contains("matrix")) {
    try {
      return Rotation::from_matrix(mat3_from(j.at("matrix"), field + ".matrix"));
    } catch (const Error& e) {
      throw Error(Errc::InvalidConfig, field + ".matrix: " + e.detail());
    }
  }
  throw Error(Errc::InvalidConfig, field + ": needs axis/angle, rotation_vector or matrix");
}

inline json rotation_to(const Rotation& r) { return {{"rotation_vector", vec3_to(log_so3(r))}}; }

inline void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, (section.empty() ? "config" : section) + ": expected object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
      throw Error(Errc::InvalidConfig, (section.empty() ? key : section + "." + key) + ": unknown key");
    }
  }
}

inline double number_from(const json& j, const std::string& field) {
  if (!j.is_number()) throw Error(Errc::InvalidConfig, field + ": expected number");
  return j.get<double>();
}

inline std::vector<double> numbers_from(const json& j, const std::string& field) {
  if (!j.is_array()) throw Error(Errc::InvalidConfig, field + ": expected array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number_from(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

inline NoiseProfile profile_from(const json& j, const std::string& field, NoiseProfile p) {
  check_keys(j, field, {"frequencies_hz", "amplitudes", "phases"});
  if (j.contains("frequencies_hz")) p.frequencies_hz = numbers_from(j.at("frequencies_hz"), field + ".frequencies_hz");
  if (j.contains("amplitudes")) p.amplitudes = numbers_from(j.at("amplitudes"), field + ".amplitudes");
  if (j.contains("phases")) p.phases = numbers_from(j.at("phases"), field + ".phases");
  if (p.amplitudes.size() != p.frequencies_hz.size() || p.phases.size() != p.frequencies_hz.size()) {
    throw Error(Errc::InvalidConfig, field + ": frequencies_hz, amplitudes and phases must have equal length");
  }
  return p;
}

inline json profile_to(const NoiseProfile& p) {
  return {{"frequencies_hz", p.frequencies_hz}, {"amplitudes", p.amplitudes}, {"phases", p.phases}};
}

}  // namespace detail

/// Parses a config document. Keys that are absent keep the values of the
/// canonical paper_fig123 scenario; unknown keys are rejected.
inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  using namespace detail;
  ScenarioConfig c = reference_scenario();
  c.name = "custom";
  check_keys(j, "", {"name", "duration", "step", "truth", "sensors", "weights", "gains", "estimator_init",
                     "seed", "output"});
  if (j.contains("name")) c.name = j.at("name").get<std::string>();
  if (j.contains("duration")) c.duration = number_from(j.at("duration"), "duration");
  if (j.contains("step")) c.step = number_from(j.at("step"), "step");

  if (j.contains("truth")) {
    const auto& t = j.at("truth");
    check_keys(t, "truth", {"inertia", "torque", "R0", "Omega0", "bias"});
    if (t.contains("inertia")) {
      try {
        c.inertia = InertiaMatrix::from_matrix(mat3_from(t.at("inertia"), "truth.inertia"));
      } catch (const Error& e) {
        throw Error(Errc::InvalidConfig, std::string("truth.inertia: ") + e.detail());
      }
    }
    if (t.contains("torque")) {
      const auto& q = t.at("torque");
      check_keys(q, "truth.torque", {"amplitude", "frequency", "phase", "axis"});
      if (q.contains("amplitude")) c.torque.amplitude = number_from(q.at("amplitude"), "truth.torque.amplitude");
      if (q.contains("frequency")) c.torque.frequency = number_from(q.at("frequency"), "truth.torque.frequency");
      if (q.contains("phase")) c.torque.phase = number_from(q.at("phase"), "truth.torque.phase");
      if (q.contains("axis")) c.torque.axis = q.at("axis").get<int>();
    }
    if (t.contains("R0")) c.R0 = rotation_from(t.at("R0"), "truth.R0");
    if (t.contains("Omega0")) c.Omega0 = vec3_from(t.at("Omega0"), "truth.Omega0");
    if (t.contains("bias")) c.beta = vec3_from(t.at("bias"), "truth.bias");
  }

  if (j.contains("sensors")) {
    const auto& s = j.at("sensors");
    check_keys(s, "sensors", {"directions", "availability", "min_separation", "noise"});
    if (s.contains("directions")) {
      const auto& d = s.at("directions");
      if (!d.is_array()) throw Error(Errc::InvalidConfig, "sensors.directions: expected array of [x, y, z]");
      c.directions.resize(3, static_cast<Eigen::Index>(d.size()));
      for (std::size_t k = 0; k < d.size(); ++k) {
        c.directions.col(static_cast<Eigen::Index>(k)) =
            vec3_from(d[k], "sensors.directions[" + std::to_string(k) + "]");
      }
      c.availability = {{0.0, {}}};
      for (int k = 0; k < c.directions.cols(); ++k) c.availability.front().indices.push_back(k);
    }
    if (s.contains("availability")) {
      c.availability.clear();
      const auto& a = s.at("availability");
      if (!a.is_array()) throw Error(Errc::InvalidConfig, "sensors.availability: expected array");
      for (std::size_t k = 0; k < a.size(); ++k) {
        const std::string field = "sensors.availability[" + std::to_string(k) + "]";
        check_keys(a[k], field, {"t_start", "indices"});
        AvailabilitySegment seg;
        seg.t_start = number_from(a[k].value("t_start", json(0.0)), field + ".t_start");
        if (!a[k].contains("indices") || !a[k].at("indices").is_array()) {
          throw Error(Errc::InvalidConfig, field + ".indices: required array");
        }
        for (const auto& idx : a[k].at("indices")) seg.indices.push_back(idx.get<int>());
        c.availability.push_back(seg);
      }
    }
    if (s.contains("min_separation")) c.min_separation = number_from(s.at("min_separation"), "sensors.min_separation");
    if (s.contains("noise")) {
      const auto& n = s.at("noise");
      check_keys(n, "sensors.noise", {"enabled", "phase_mode", "direction", "gyro", "direction_cap", "gyro_cap"});
      if (n.contains("enabled")) c.noise.enabled = n.at("enabled").get<bool>();
      if (n.contains("phase_mode")) {
        const auto mode = n.at("phase_mode").get<std::string>();
        if (mode == "fixed") {
          c.noise.phase_mode = PhaseMode::Fixed;
        } else if (mode == "random") {
          c.noise.phase_mode = PhaseMode::Random;
        } else {
          throw Error(Errc::InvalidConfig, "sensors.noise.phase_mode: expected 'fixed' or 'random'");
        }
      }
      if (n.contains("direction")) c.noise.direction = profile_from(n.at("direction"), "sensors.noise.direction", c.noise.direction);
      if (n.contains("gyro")) c.noise.gyro = profile_from(n.at("gyro"), "sensors.noise.gyro", c.noise.gyro);
      if (n.contains("direction_cap")) c.noise.direction_cap = number_from(n.at("direction_cap"), "sensors.noise.direction_cap");
      if (n.contains("gyro_cap")) c.noise.gyro_cap = number_from(n.at("gyro_cap"), "sensors.noise.gyro_cap");
    }
  }

  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    check_keys(w, "weights", {"target_eigenvalues", "regularization", "eig_gap", "rank_tol"});
    if (w.contains("target_eigenvalues")) c.target_eigs = vec3_from(w.at("target_eigenvalues"), "weights.target_eigenvalues");
    if (w.contains("regularization")) c.weights.regularization = number_from(w.at("regularization"), "weights.regularization");
    if (w.contains("eig_gap")) c.weights.eig_gap = number_from(w.at("eig_gap"), "weights.eig_gap");
    if (w.contains("rank_tol")) c.weights.rank_tol = number_from(w.at("rank_tol"), "weights.rank_tol");
  }

  if (j.contains("gains")) {
    const auto& g = j.at("gains");
    check_keys(g, "gains", {"m", "D", "P", "phi", "newton"});
    if (g.contains("m")) c.m = number_from(g.at("m"), "gains.m");
    if (g.contains("D")) c.D = mat3_from(g.at("D"), "gains.D");
    if (g.contains("P")) c.P = mat3_from(g.at("P"), "gains.P");
    if (g.contains("phi")) c.phi = g.at("phi").get<std::string>();
    if (g.contains("newton")) {
      const auto& nw = g.at("newton");
      check_keys(nw, "gains.newton", {"tol", "max_iter", "jacobian"});
      if (nw.contains("tol")) c.newton.tol = number_from(nw.at("tol"), "gains.newton.tol");
      if (nw.contains("max_iter")) c.newton.max_iter = nw.at("max_iter").get<int>();
      if (nw.contains("jacobian")) {
        const auto mode = nw.at("jacobian").get<std::string>();
        if (mode == "analytic") {
          c.newton.jacobian = JacobianMode::Analytic;
        } else if (mode == "finite_difference") {
          c.newton.jacobian = JacobianMode::FiniteDifference;
        } else {
          throw Error(Errc::InvalidConfig, "gains.newton.jacobian: expected 'analytic' or 'finite_difference'");
        }
      }
    }
  }

  if (j.contains("estimator_init")) {
    const auto& e = j.at("estimator_init");
    check_keys(e, "estimator_init", {"R_hat0", "Omega_hat0", "beta_hat0", "exact"});
    if (e.contains("exact")) c.exact_initial_estimate = e.at("exact").get<bool>();
    if (e.contains("R_hat0")) c.R_hat0 = rotation_from(e.at("R_hat0"), "estimator_init.R_hat0");
    if (e.contains("Omega_hat0")) c.Omega_hat0 = vec3_from(e.at("Omega_hat0"), "estimator_init.Omega_hat0");
    if (e.contains("beta_hat0")) c.beta_hat0 = vec3_from(e.at("beta_hat0"), "estimator_init.beta_hat0");
  }

  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("output")) {
    const auto& o = j.at("output");
    check_keys(o, "output", {"dir", "plots"});
    if (o.contains("dir")) c.output_dir = o.at("dir").get<std::string>();
    if (o.contains("plots")) c.plots = o.at("plots").get<bool>();
  }
  return c;
}

inline nlohmann::json config_to_json(const ScenarioConfig& c) {
  using namespace detail;
  json dirs = json::array();
  for (Eigen::Index k = 0; k < c.directions.cols(); ++k) dirs.push_back(vec3_to(c.directions.col(k)));
  json avail = json::array();
  for (const auto& seg : c.availability) avail.push_back({{"t_start", seg.t_start}, {"indices", seg.indices}});
  return {
      {"name", c.name},
      {"duration", c.duration},
      {"step", c.step},
      {"truth",
       {{"inertia", mat3_to(c.inertia.matrix())},
        {"torque",
         {{"amplitude", c.torque.amplitude}, {"frequency", c.torque.frequency}, {"phase", c.torque.phase},
          {"axis", c.torque.axis}}},
        {"R0", rotation_to(c.R0)},
        {"Omega0", vec3_to(c.Omega0)},
        {"bias", vec3_to(c.beta)}}},
      {"sensors",
       {{"directions", dirs},
        {"availability", avail},
        {"min_separation", c.min_separation},
        {"noise",
         {{"enabled", c.noise.enabled},
          {"phase_mode", c.noise.phase_mode == PhaseMode::Fixed ? "fixed" : "random"},
          {"direction", profile_to(c.noise.direction)},
          {"gyro", profile_to(c.noise.gyro)},
          {"direction_cap", c.noise.direction_cap},
          {"gyro_cap", c.noise.gyro_cap}}}}},
      {"weights",
       {{"target_eigenvalues", vec3_to(c.target_eigs)},
        {"regularization", c.weights.regularization},
        {"eig_gap", c.weights.eig_gap},
        {"rank_tol", c.weights.rank_tol}}},
      {"gains",
       {{"m", c.m},
        {"D", mat3_to(c.D)},
        {"P", mat3_to(c.P)},
        {"phi", c.phi},
        {"newton",
         {{"tol", c.newton.tol},
          {"max_iter", c.newton.max_iter},
          {"jacobian", c.newton.jacobian == JacobianMode::Analytic ? "analytic" : "finite_difference"}}}}},
      {"estimator_init",
       {{"R_hat0", rotation_to(c.R_hat0)}, {"Omega_hat0", vec3_to(c.Omega_hat0)}, {"beta_hat0", vec3_to(c.beta_hat0)},
        {"exact", c.exact_initial_estimate}}},
      {"seed", c.seed},
      {"output", {{"dir", c.output_dir}, {"plots", c.plots}}},
  };
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, path + ": " + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Simulation

/// Builds measurement frames from truth samples. Weight matrices are cached
/// per availability mask.
class FrameSynthesizer {
 public:
  explicit FrameSynthesizer(const ScenarioConfig& cfg) : cfg_(cfg), noise_(cfg.noise_model()) {}

  MeasurementFrame operator()(const TruthState& truth) {
    const std::vector<int>& active = cfg_.active_indices(truth.t);
    Matrix3X e(3, static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) e.col(static_cast<Eigen::Index>(k)) = cfg_.directions.col(active[k]);
    Matrix3X u = synthesize_directions(truth.R, e, noise_, truth.t, active);
    if (active.size() == 2) {
      auto [ea, ua] = augment_two_vectors(e, u, cfg_.min_separation);
      e = ea;
      u = ua;
    }
    auto it = weights_.find(active);
    if (it == weights_.end()) it = weights_.emplace(active, choose_weights(e, cfg_.target_eigs, cfg_.weights)).first;
    return MeasurementFrame::make(truth.t, std::move(e), std::move(u),
                                  synthesize_gyro(truth.Omega_step, cfg_.beta, noise_, truth.t), it->second);
  }

 private:
  const ScenarioConfig& cfg_;
  NoiseModel noise_;
  std::map<std::vector<int>, MatrixX> weights_;
};

struct ScenarioSummary {
  std::size_t steps = 0;
  ErrorSample terminal;
  int max_newton_iterations = 0;
  double max_orthonormality_defect = 0.0;  // max over steps of ‖R̂ᵀR̂ − I‖_F
  double runtime_seconds = 0.0;
  EstimatorState final_state;
};

struct ScenarioResult {
  std::vector<ErrorSample> trace;
  ScenarioSummary summary;
};

/// Truth propagation, frame synthesis, the discrete estimator with one frame
/// of lookahead, and an error sample per step. Deterministic in (cfg, seed).
inline ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  cfg.validate();
  const EstimatorGains gains = cfg.gains();
  const auto truth = propagate_truth(TruthState{0.0, cfg.R0, cfg.Omega0, Vector3::Zero()}, cfg.inertia,
                                     cfg.torque, cfg.step, cfg.duration);
  const std::size_t steps = truth.size() - 1;

  FrameSynthesizer synth(cfg);
  auto frame_at = [&](std::size_t i) {
    try {
      return synth(truth[i]);
    } catch (const Error& e) {
      throw e.at_step(i);
    }
  };

  ScenarioResult out;
  out.trace.reserve(steps + 1);
  MeasurementFrame frame = frame_at(0);
  EstimatorState state =
      cfg.exact_initial_estimate
          ? initial_state(cfg.R0, truth[0].Omega_step, cfg.beta, frame.Omega_m)
          : initial_state(cfg.R_hat0, cfg.Omega_hat0, cfg.beta_hat0, frame.Omega_m);
  out.trace.push_back(compute_errors(truth[0], state, cfg.beta, gains, frame));
  out.summary.max_orthonormality_defect = state.R_hat.orthonormality_defect();

  for (std::size_t i = 0; i < steps; ++i) {
    MeasurementFrame next = frame_at(i + 1);
    NewtonResult nr;
    try {
      state = discrete_step(state, frame, next, gains, &nr);
    } catch (const Error& e) {
      throw e.at_step(i);
    }
    out.summary.max_newton_iterations = std::max(out.summary.max_newton_iterations, nr.iterations);
    out.summary.max_orthonormality_defect =
        std::max(out.summary.max_orthonormality_defect, state.R_hat.orthonormality_defect());
    out.trace.push_back(compute_errors(truth[i + 1], state, cfg.beta, gains, next));
    frame = std::move(next);
  }
  out.summary.steps = steps;
  out.summary.terminal = out.trace.back();
  out.summary.final_state = state;
  out.summary.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// ---------------------------------------------------------------------------
// Random-initialization sweep

struct SweepOptions {
  int count = 100;
  double max_angle = 3.0;      // rad, upper bound on principal_angle(Q₀)
  double omega_spread = 0.3;   // rad/s, per-component bound on Ω̂₀ − Ω₀
  double bias_spread = 0.02;   // rad/s, per-component bound on β̂₀ − β
  double horizon = 200.0;      // s
  double threshold = 1e-2;     // rad
  double antipodal_tol = 1e-8; // rad
  std::uint64_t seed = 1;
  unsigned threads = 0;        // 0: hardware concurrency
};

struct SweepRun {
  int index = 0;
  double initial_angle = 0.0;
  double terminal_angle = 0.0;
  double terminal_bias_error = 0.0;
  double time_to_threshold = -1.0;  // first t with angle below threshold (and staying), -1 if never
  bool converged = false;
  bool exempt = false;  // initial Q within antipodal_tol of a π-rotation about an eigenaxis of K
};

/// Distance (rad) from Q to the set of π-rotations about eigenvectors of K,
/// the non-identity critical points of ⟨I − Q, K⟩.
inline double antipodal_distance(const Rotation& q, const Matrix3& k) {
  Eigen::SelfAdjointEigenSolver<Matrix3> es(k);
  double best = std::numbers::pi;
  for (int a = 0; a < 3; ++a) {
    const Rotation flip = exp_so3(Vector3(std::numbers::pi * es.eigenvectors().col(a)));
    best = std::min(best, principal_angle(q * flip.transpose()));
  }
  return best;
}

/// Noise-free runs from random initial errors, executed concurrently. Each
/// run owns its config copy; nothing mutable is shared between runs.
inline std::vector<SweepRun> run_sweep(const ScenarioConfig& base, const SweepOptions& opt) {
  // Draw all initial conditions up front so results do not depend on threading.
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> angle_dist(0.0, opt.max_angle);
  struct Draw {
    Rotation q0;
    Vector3 d_omega;
    Vector3 d_bias;
  };
  std::vector<Draw> draws;
  for (int i = 0; i < opt.count; ++i) {
    Vector3 axis;
    do {
      axis = Vector3(unit(rng), unit(rng), unit(rng));
    } while (axis.norm() < 1e-3 || axis.norm() > 1.0);
    const double ang = angle_dist(rng);
    Draw d{exp_so3(Vector3(ang * axis.normalized())), Vector3::Zero(), Vector3::Zero()};
    d.d_omega = opt.omega_spread * Vector3(unit(rng), unit(rng), unit(rng));
    d.d_bias = opt.bias_spread * Vector3(unit(rng), unit(rng), unit(rng));
    draws.push_back(d);
  }

  ScenarioConfig cfg = base;
  cfg.noise.enabled = false;
  cfg.duration = opt.horizon;
  cfg.plots = false;
  cfg.validate();
  const Matrix3 k = FrameSynthesizer(cfg)(TruthState{0.0, cfg.R0, cfg.Omega0, cfg.Omega0}).K;

  auto one = [&](int i) {
    ScenarioConfig c = cfg;
    const Draw& d = draws[static_cast<std::size_t>(i)];
    c.R_hat0 = d.q0.transpose() * c.R0;  // Q₀ = R₀·R̂₀ᵀ
    c.Omega_hat0 = c.Omega0 + d.d_omega;
    c.beta_hat0 = c.beta + d.d_bias;
    SweepRun run;
    run.index = i;
    run.initial_angle = principal_angle(d.q0);
    run.exempt = antipodal_distance(d.q0, k) < opt.antipodal_tol;
    const ScenarioResult res = run_scenario(c);
    run.terminal_angle = res.summary.terminal.principal_angle;
    run.terminal_bias_error = res.summary.terminal.beta_err.norm();
    for (std::size_t s = res.trace.size(); s-- > 0;) {
      if (res.trace[s].principal_angle >= opt.threshold) {
        if (s + 1 < res.trace.size()) run.time_to_threshold = res.trace[s + 1].t;
        break;
      }
      if (s == 0) run.time_to_threshold = 0.0;
    }
    run.converged = run.terminal_angle < opt.threshold;
    return run;
  };

  const unsigned threads = opt.threads != 0 ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  std::vector<SweepRun> runs(static_cast<std::size_t>(opt.count));
  std::vector<std::future<void>> workers;
  std::atomic<int> next{0};
  for (unsigned w = 0; w < threads; ++w) {
    workers.push_back(std::async(std::launch::async, [&] {
      for (int i = next++; i < opt.count; i = next++) runs[static_cast<std::size_t>(i)] = one(i);
    }));
  }
  for (auto& w : workers) w.get();
  return runs;
}

}  // namespace vae
