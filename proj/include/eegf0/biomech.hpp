#pragma once

// Single-muscle elbow. The forearm is a uniform rod hinged at the elbow,
// angle measured from hanging vertically down. One flexor with a constant
// moment arm lifts it; gravity is the only antagonist:
//
//   I * theta'' = a * Fmax * r - m * g * (L/2) * sin(theta) - b * theta'
//   I = m * L^2 / 3
//
// The defaults satisfy Fmax * r = m * g * L / 2, so full activation holds the
// forearm exactly horizontal (90 degrees) and equilibrium is asin(a).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "eegf0/csv.hpp"
#include "eegf0/error.hpp"
#include "eegf0/signal.hpp"

namespace eegf0 {

inline constexpr double deg_to_rad(double deg) noexcept { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

struct ArmModel {
  double forearm_mass_kg = 1.5;
  double forearm_length_m = 0.3;
  double max_muscle_force_n = 73.575;
  double moment_arm_m = 0.03;
  double damping_nms = 0.2;
  double gravity_ms2 = 9.81;
  double angle_min_deg = 0.0;
  double angle_max_deg = 90.0;

  double inertia() const noexcept {
    return forearm_mass_kg * forearm_length_m * forearm_length_m / 3.0;
  }
  double max_muscle_torque() const noexcept { return max_muscle_force_n * moment_arm_m; }
  /// Gravity torque at horizontal.
  double max_gravity_torque() const noexcept {
    return forearm_mass_kg * gravity_ms2 * forearm_length_m / 2.0;
  }

  bool is_calibrated(double rel_tol = 1e-12) const noexcept {
    return std::abs(max_muscle_torque() - max_gravity_torque()) <=
           rel_tol * max_gravity_torque();
  }

  void validate() const {
    const auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("arm model: ") + name + " must be > 0");
      }
    };
    positive(forearm_mass_kg, "forearm_mass_kg");
    positive(forearm_length_m, "forearm_length_m");
    positive(max_muscle_force_n, "max_muscle_force_n");
    positive(moment_arm_m, "moment_arm_m");
    positive(gravity_ms2, "gravity_ms2");
    if (!(damping_nms >= 0.0) || !std::isfinite(damping_nms)) {
      throw std::invalid_argument("arm model: damping_nms must be >= 0");
    }
    if (!(angle_min_deg < angle_max_deg)) {
      throw std::invalid_argument("arm model: angle_min_deg must be < angle_max_deg");
    }
  }
};

/// Activation levels at the 0.01 s control rate.
struct ActivationTrajectory {
  std::vector<double> levels;

  static constexpr double dt_s = kControlStepS;

  static ActivationTrajectory from_classes(const std::vector<ActivationClass>& classes) {
    ActivationTrajectory t;
    t.levels.reserve(classes.size());
    for (auto c : classes) t.levels.push_back(c.level());
    return t;
  }

  std::size_t size() const noexcept { return levels.size(); }
};

struct AngleTrajectory {
  std::vector<double> angles_deg;

  static constexpr double dt_s = kControlStepS;

  std::size_t size() const noexcept { return angles_deg.size(); }
};

struct ArmState {
  double theta_rad = 0.0;
  double omega_rad_s = 0.0;
};

inline double mechanical_energy(const ArmModel& model, const ArmState& s) noexcept {
  return 0.5 * model.inertia() * s.omega_rad_s * s.omega_rad_s -
         model.max_gravity_torque() * std::cos(s.theta_rad);
}

inline double equilibrium_angle(const ArmModel& model, double activation) {
  if (!(activation >= 0.0 && activation <= 1.0)) {
    throw std::invalid_argument("activation must be in [0, 1]");
  }
  const double s = std::min(1.0, activation * model.max_muscle_torque() / model.max_gravity_torque());
  return std::clamp(rad_to_deg(std::asin(s)), model.angle_min_deg, model.angle_max_deg);
}

namespace detail {

inline double angular_acceleration(const ArmModel& m, double activation, double theta,
                                   double omega) noexcept {
  return (activation * m.max_muscle_torque() - m.max_gravity_torque() * std::sin(theta) -
          m.damping_nms * omega) /
         m.inertia();
}

inline std::size_t substeps_per_control(double sub_dt_s) {
  if (!(sub_dt_s > 0.0) || !std::isfinite(sub_dt_s)) {
    throw std::invalid_argument("sub-step must be positive");
  }
  const double ratio = kControlStepS / sub_dt_s;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-9 * n) {
    throw std::invalid_argument("sub-step " + csv::format_double(sub_dt_s) +
                                " s does not divide the 0.01 s control step");
  }
  return static_cast<std::size_t>(n);
}

}  // namespace detail

/// One RK4 step of length h with activation held, followed by the joint
/// limit: a state on or past a limit is put back on it with the outward
/// velocity removed.
inline ArmState rk4_step(const ArmModel& m, const ArmState& s, double activation, double h) {
  const auto f = [&](double th, double om) { return detail::angular_acceleration(m, activation, th, om); };
  const double k1t = s.omega_rad_s;
  const double k1w = f(s.theta_rad, s.omega_rad_s);
  const double k2t = s.omega_rad_s + 0.5 * h * k1w;
  const double k2w = f(s.theta_rad + 0.5 * h * k1t, k2t);
  const double k3t = s.omega_rad_s + 0.5 * h * k2w;
  const double k3w = f(s.theta_rad + 0.5 * h * k2t, k3t);
  const double k4t = s.omega_rad_s + h * k3w;
  const double k4w = f(s.theta_rad + h * k3t, k4t);

  ArmState next{s.theta_rad + h / 6.0 * (k1t + 2.0 * k2t + 2.0 * k3t + k4t),
                s.omega_rad_s + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)};
  const double lo = deg_to_rad(m.angle_min_deg);
  const double hi = deg_to_rad(m.angle_max_deg);
  if (next.theta_rad >= hi) {
    next.theta_rad = hi;
    next.omega_rad_s = std::min(next.omega_rad_s, 0.0);
  } else if (next.theta_rad <= lo) {
    next.theta_rad = lo;
    next.omega_rad_s = std::max(next.omega_rad_s, 0.0);
  }
  if (!std::isfinite(next.theta_rad) || !std::isfinite(next.omega_rad_s)) {
    throw DivergenceError("forward simulation produced a non-finite state");
  }
  return next;
}

/// Advances one 0.01 s control step (zero-order hold on activation).
inline ArmState advance_control_step(const ArmModel& m, ArmState s, double activation,
                                     double sub_dt_s = 1e-3) {
  const std::size_t n = detail::substeps_per_control(sub_dt_s);
  const double h = kControlStepS / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) s = rk4_step(m, s, activation, h);
  return s;
}

/// Integrates the arm under a control-rate activation sequence and records
/// the angle at the end of every control step.
inline AngleTrajectory forward_dynamics(const ArmModel& model, const ActivationTrajectory& act,
                                        double theta0_deg = 0.0, double omega0_degps = 0.0,
                                        double sub_dt_s = 1e-3) {
  model.validate();
  if (act.levels.empty()) throw std::invalid_argument("activation trajectory is empty");
  for (double a : act.levels) {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("activation must be in [0, 1]");
  }
  detail::substeps_per_control(sub_dt_s);

  ArmState s{deg_to_rad(theta0_deg), deg_to_rad(omega0_degps)};
  AngleTrajectory out;
  out.angles_deg.reserve(act.size());
  for (double a : act.levels) {
    s = advance_control_step(model, s, a, sub_dt_s);
    out.angles_deg.push_back(rad_to_deg(s.theta_rad));
  }
  return out;
}

/// Continuous static activation that holds `theta_deg`, clamped to [0, 1].
inline double quasistatic_activation(const ArmModel& model, double theta_deg) {
  if (!std::isfinite(theta_deg) || theta_deg < model.angle_min_deg ||
      theta_deg > model.angle_max_deg) {
    throw std::invalid_argument("angle " + csv::format_double(theta_deg) +
                                " deg is outside the joint limits");
  }
  const double a = model.max_gravity_torque() * std::sin(deg_to_rad(theta_deg)) /
                   model.max_muscle_torque();
  return std::clamp(a, 0.0, 1.0);
}

inline ActivationTrajectory inverse_quasistatic(const ArmModel& model,
                                                const AngleTrajectory& target) {
  ActivationTrajectory out;
  out.levels.reserve(target.size());
  for (double theta : target.angles_deg) {
    out.levels.push_back(ActivationClass::nearest(quasistatic_activation(model, theta)).level());
  }
  return out;
}

/// Per-frame training labels from recorded elbow angles.
inline std::vector<ActivationClass> derive_labels(const ArmModel& model,
                                                  const AngleTrajectory& kinematics) {
  std::vector<ActivationClass> labels;
  labels.reserve(kinematics.size());
  for (double theta : kinematics.angles_deg) {
    labels.push_back(ActivationClass::nearest(quasistatic_activation(model, theta)));
  }
  return labels;
}

struct TrackingResult {
  ActivationTrajectory activations;
  AngleTrajectory simulated;
  double loss_deg2 = 0.0;  // sum of squared tracking errors
};

/// Greedy horizon-1 tracking: at each control step try all ten classes from
/// the current simulated state and keep the one whose end-of-step angle is
/// closest to the target (lowest class on ties). Starts at rest on the
/// first target angle unless an explicit initial state is given.
inline TrackingResult inverse_tracking(const ArmModel& model, const AngleTrajectory& target,
                                       std::optional<ArmState> initial = std::nullopt,
                                       double sub_dt_s = 1e-3) {
  model.validate();
  for (double theta : target.angles_deg) quasistatic_activation(model, theta);
  TrackingResult result;
  if (target.angles_deg.empty()) return result;

  ArmState s = initial.value_or(ArmState{deg_to_rad(target.angles_deg.front()), 0.0});
  for (double goal : target.angles_deg) {
    double best_err = std::numeric_limits<double>::infinity();
    double best_level = 0.0;
    ArmState best_state{};
    for (int k = 1; k <= static_cast<int>(kNumClasses); ++k) {
      const double level = ActivationClass::from_index(k).level();
      const ArmState cand = advance_control_step(model, s, level, sub_dt_s);
      const double err = rad_to_deg(cand.theta_rad) - goal;
      if (err * err < best_err) {
        best_err = err * err;
        best_level = level;
        best_state = cand;
      }
    }
    s = best_state;
    result.activations.levels.push_back(best_level);
    result.simulated.angles_deg.push_back(rad_to_deg(s.theta_rad));
    result.loss_deg2 += best_err;
  }
  return result;
}

// Trajectory CSV: t_s,activation,angle_deg at 0.01 s rows.

inline void write_trajectory_csv(const ActivationTrajectory& act, const AngleTrajectory& angles,
                                 const std::string& path) {
  if (act.size() != angles.size()) {
    throw DataError("activation and angle trajectories differ in length");
  }
  std::string out = "t_s,activation,angle_deg\n";
  for (std::size_t i = 0; i < act.size(); ++i) {
    out += csv::format_double(static_cast<double>(i) * kControlStepS) + ',' +
           csv::format_double(act.levels[i]) + ',' + csv::format_double(angles.angles_deg[i]) +
           '\n';
  }
  csv::write_file(path, out);
}

/// Reads the `activation` column of a trajectory CSV (other columns ignored).
inline ActivationTrajectory read_activation_csv(const std::string& path) {
  const auto table = csv::read_file(path);
  const int col = table.column("activation");
  if (col < 0) throw DataError("'" + path + "' has no activation column");
  ActivationTrajectory act;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    act.levels.push_back(csv::parse_double(table.rows[r][static_cast<std::size_t>(col)],
                                           path + ": row " + std::to_string(r + 1)));
  }
  return act;
}

}  // namespace eegf0
