// Copyright (c) 2026 The Glidesim Authors.
// All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Glide trim, linearization, Riccati solving, and the four-gain LQR
// autopilot. The controller decouples into a vertical plane (states u, w,
// pitch rate, pitch; inputs battery station r_p1 and ballast m_b) and a
// horizontal plane (states yaw rate and yaw error; input battery roll zeta).
// Descending and ascending glides sit at different equilibria, and the
// steady yaw response to a battery roll reverses between them: rolling the
// battery banks the hull, the tilted lift walks the course, and the lift
// vector points opposite ways in a heavy dive and a light climb. Hence four
// gains, recomputed once per work cycle at the surface.

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "glidesim/config.hpp"
#include "glidesim/dynamics.hpp"
#include "glidesim/errors.hpp"
#include "glidesim/frames.hpp"

namespace glidesim {

enum class GlidePhase { kDescend, kAscend };

[[nodiscard]] inline const char* to_string(GlidePhase p) {
  return p == GlidePhase::kDescend ? "descend" : "ascend";
}

/// Steady vertical-plane glide: body velocities, pitch, and the control
/// positions that hold them, at the commanded forward speed.
struct Equilibrium {
  GlidePhase phase = GlidePhase::kDescend;
  double u = 0.0;      ///< forward speed at trim, m/s
  double w = 0.0;      ///< heave at trim, m/s
  double pitch = 0.0;  ///< trim pitch, rad
  double r_p1 = 0.0;   ///< battery station at trim, m
  double m_b = 0.0;    ///< ballast fill at trim, kg
  double speed = 0.0;  ///< commanded forward speed, m/s

  [[nodiscard]] Vec4 x() const { return Vec4(u, w, 0.0, pitch); }
  [[nodiscard]] Vec2 controls() const { return Vec2(r_p1, m_b); }
};

/// Linearized vertical-plane model dx/dt = A dx + B du around an
/// equilibrium; states (u, w, pitch rate, pitch), inputs (r_p1, m_b).
struct VerticalModel {
  Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
  Eigen::Matrix<double, 4, 2> B = Eigen::Matrix<double, 4, 2>::Zero();
};

/// Linearized horizontal-plane model; states (yaw rate, yaw error), input
/// zeta, evaluated riding on a vertical-plane equilibrium.
struct HorizontalModel {
  Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
  Eigen::Vector2d B = Eigen::Vector2d::Zero();
};

/// Continuous algebraic Riccati solution: gain K = R^-1 B^T P and the
/// symmetric positive-semidefinite P.
struct CareSolution {
  Eigen::MatrixXd K;
  Eigen::MatrixXd P;
};

/// Per-cycle setpoints consumed by the gain scheduler: the descend/ascend
/// pitch pair, the course to hold, and the forward speed.
struct CyclePlan {
  double pitch_descend = -0.35;  ///< rad, negative
  double pitch_ascend = 0.35;    ///< rad, positive
  double heading = 0.0;          ///< rad, NED yaw to hold
  double speed = 0.4;            ///< m/s forward speed
};

/// Gains and equilibrium for one glide phase (vertical + horizontal plane).
struct PhaseGains {
  Equilibrium eq;
  Eigen::Matrix<double, 2, 4> K_vertical =
      Eigen::Matrix<double, 2, 4>::Zero();
  Eigen::RowVector2d K_horizontal = Eigen::RowVector2d::Zero();
};

/// The four (phase x plane) gains of one work cycle plus the cycle course.
struct GainSet {
  PhaseGains descend;
  PhaseGains ascend;
  double heading = 0.0;  ///< rad, shared course for both phases

  [[nodiscard]] const PhaseGains& for_phase(GlidePhase p) const {
    return p == GlidePhase::kDescend ? descend : ascend;
  }
};

/// Merged actuator command of both planes, saturated to the travel limits.
struct ControlCommand {
  double r_p1 = 0.0;
  double m_b = 0.0;
  double zeta = 0.0;
  bool saturated = false;  ///< any component hit a travel limit
};

// ---------------------------------------------------------------------------
// Plane-restricted dynamics
// ---------------------------------------------------------------------------

/// Vertical-plane state derivative [u_dot, w_dot, pitch accel, pitch rate]
/// at state x = (u, w, q, theta) and controls u2 = (r_p1, m_b), evaluated at
/// the surface (z = 0) with frozen actuators and no current. The restriction
/// is exact for laterally symmetric configurations.
[[nodiscard]] inline Vec4 vertical_plane_dynamics(const GliderConfig& cfg,
                                                  const Vec4& x,
                                                  const Vec2& u2) {
  GliderState s;
  s.v = Vec3(x[0], 0.0, x[1]);
  s.omega = Vec3(0.0, x[2], 0.0);
  s.q = quat_from_euler(0.0, x[3], 0.0);
  s.p = Vec3::Zero();
  ActuatorState a;
  a.r_p1 = u2[0];
  a.r_p1_cmd = u2[0];
  a.m_b = u2[1];
  a.m_b_cmd = u2[1];
  const auto [v_dot, omega_dot] = dynamics_rhs(s, a, CurrentSample{}, cfg);
  return Vec4(v_dot.x(), v_dot.z(), omega_dot.y(), x[2]);
}

namespace detail {

/// Full state assembled from a vertical equilibrium, a yaw rate, a battery
/// roll, and the lateral unknowns y = (sway v, roll rate p, roll phi).
inline GliderState lateral_state(const Equilibrium& eq, double yaw_rate,
                                 const Vec3& y) {
  GliderState s;
  s.v = Vec3(eq.u, y[0], eq.w);
  s.omega = Vec3(y[1], 0.0, yaw_rate);
  s.q = quat_from_euler(y[2], eq.pitch, 0.0);
  s.p = Vec3::Zero();
  return s;
}

inline ActuatorState frozen_actuators(const Equilibrium& eq, double zeta) {
  ActuatorState a;
  a.zeta = zeta;
  a.zeta_cmd = zeta;
  a.r_p1 = eq.r_p1;
  a.r_p1_cmd = eq.r_p1;
  a.m_b = eq.m_b;
  a.m_b_cmd = eq.m_b;
  return a;
}

/// Solves the fast lateral states (sway, roll rate, roll) to quasi-steady
/// equilibrium for a given yaw rate and battery roll: sway and roll
/// accelerations vanish and the roll angle is consistent with the steady
/// turn (phi_dot = p + cos(phi) tan(pitch) r = 0). Damped Newton with
/// finite-difference Jacobian; throws NumericalError on stall.
inline Vec3 lateral_manifold(const GliderConfig& cfg, const Equilibrium& eq,
                             double yaw_rate, double zeta) {
  const double tan_pitch = std::tan(eq.pitch);
  const auto residual = [&](const Vec3& y) {
    const GliderState s = lateral_state(eq, yaw_rate, y);
    const ActuatorState a = frozen_actuators(eq, zeta);
    const auto [v_dot, omega_dot] = dynamics_rhs(s, a, CurrentSample{}, cfg);
    const double phi_dot = y[1] + std::cos(y[2]) * tan_pitch * yaw_rate;
    return Vec3(v_dot.y(), omega_dot.x(), phi_dot);
  };

  Vec3 y = Vec3::Zero();
  Vec3 res = residual(y);
  constexpr int kMaxIters = 40;
  constexpr double kTol = 1e-12;
  for (int iter = 0; iter < kMaxIters && res.norm() > kTol; ++iter) {
    Eigen::Matrix3d jac;
    for (int j = 0; j < 3; ++j) {
      const double h = std::max(1e-7, 1e-7 * std::abs(y[j]));
      Vec3 fwd = y, bwd = y;
      fwd[j] += h;
      bwd[j] -= h;
      jac.col(j) = (residual(fwd) - residual(bwd)) / (2.0 * h);
    }
    const Vec3 step = jac.fullPivLu().solve(-res);
    double t = 1.0;
    Vec3 y_next = y + step;
    Vec3 res_next = residual(y_next);
    for (int k = 0; k < 30 && !(res_next.norm() < res.norm()); ++k) {
      t *= 0.5;
      y_next = y + t * step;
      res_next = residual(y_next);
    }
    if (!(res_next.norm() < res.norm())) {
      throw NumericalError(
          "lateral quasi-steady solve stalled at residual " +
          std::to_string(res.norm()) + " (yaw rate " +
          std::to_string(yaw_rate) + ", zeta " + std::to_string(zeta) + ")");
    }
    y = y_next;
    res = res_next;
  }
  if (!(res.norm() <= kTol)) {
    throw NumericalError("lateral quasi-steady solve did not converge "
                         "(residual " +
                         std::to_string(res.norm()) + ")");
  }
  return y;
}

}  // namespace detail

/// Horizontal-plane state derivative [yaw accel, yaw-error rate] at
/// x = (yaw rate, yaw error) and battery roll zeta, riding on a vertical
/// equilibrium. The off-plane lateral states relax much faster than the
/// course, so the restriction evaluates the yaw acceleration on their
/// quasi-steady manifold: sway, roll rate, and roll angle are solved to the
/// steady banked condition for the given yaw rate and battery roll. This
/// keeps the slow model honest about what actually steers a buoyancy glider
/// — the instantaneous battery yaw torque is largely absorbed by the
/// sideslip rebalance, and the net turn follows the bank through the tilted
/// lift. Yaw-error kinematics: e_dot = r / cos(pitch).
[[nodiscard]] inline Vec2 horizontal_plane_dynamics(const GliderConfig& cfg,
                                                    const Equilibrium& eq,
                                                    const Vec2& x,
                                                    double zeta) {
  const Vec3 lat = detail::lateral_manifold(cfg, eq, x[0], zeta);
  const GliderState s = detail::lateral_state(eq, x[0], lat);
  const ActuatorState a = detail::frozen_actuators(eq, zeta);
  const auto [v_dot, omega_dot] = dynamics_rhs(s, a, CurrentSample{}, cfg);
  (void)v_dot;
  return Vec2(omega_dot.z(), x[0] / std::cos(eq.pitch));
}

// ---------------------------------------------------------------------------
// Trim
// ---------------------------------------------------------------------------

namespace detail {

/// Trim residual: accelerations of the vertical plane plus the forward-speed
/// constraint, as a function of y = (u, w, r_p1, m_b) at fixed pitch.
inline Vec4 trim_residual(const GliderConfig& cfg, const Vec4& y, double pitch,
                          double speed) {
  const Vec4 x(y[0], y[1], 0.0, pitch);
  const Vec2 u2(y[2], y[3]);
  const Vec4 f = vertical_plane_dynamics(cfg, x, u2);
  return Vec4(f[0], f[1], f[2], y[0] - speed);
}

inline double fd_step(double value) {
  return std::max(1e-6, 1e-6 * std::abs(value));
}

}  // namespace detail

/// Finds the steady glide at the requested pitch and forward speed by damped
/// Newton iteration on (u, w, r_p1, m_b). The initial guess comes from the
/// zero-coupling balance: a small attack angle of the sign demanded by the
/// phase (lift must support a heavy descent and hold down a light ascent)
/// and the ballast that cancels drag along the glide path.
///
/// Throws ConfigError when the pitch is outside the commandable envelope or
/// the trim lands outside the actuator travel; NumericalError when the
/// iteration fails to converge.
[[nodiscard]] inline Equilibrium find_equilibrium(const GliderConfig& cfg,
                                                  double desired_pitch,
                                                  double desired_speed,
                                                  GlidePhase phase) {
  if (desired_pitch < cfg.pitch_limits.min ||
      desired_pitch > cfg.pitch_limits.max) {
    throw ConfigError("desired pitch " + std::to_string(desired_pitch) +
                      " rad outside commandable range [" +
                      std::to_string(cfg.pitch_limits.min) + ", " +
                      std::to_string(cfg.pitch_limits.max) + "]");
  }
  if (!(desired_speed > 0.0)) {
    throw ConfigError("desired speed must be positive");
  }

  const double alpha0 = (phase == GlidePhase::kDescend) ? 0.1 : -0.1;
  const double gamma0 = desired_pitch - alpha0;
  const double v2 = desired_speed * desired_speed;
  double dm0 = 0.0;
  if (std::abs(std::sin(gamma0)) > 1e-6) {
    dm0 = -cfg.hydro.K_D0 * v2 / (kGravity * std::sin(gamma0));
  }

  Vec4 y(desired_speed * std::cos(alpha0), desired_speed * std::sin(alpha0),
         0.0, cfg.neutral_ballast() + dm0);

  Vec4 res = detail::trim_residual(cfg, y, desired_pitch, desired_speed);
  constexpr int kMaxIters = 100;
  constexpr double kTol = 1e-9;
  int iter = 0;
  for (; iter < kMaxIters && res.norm() > kTol; ++iter) {
    Eigen::Matrix4d jac;
    for (int j = 0; j < 4; ++j) {
      const double h = detail::fd_step(y[j]);
      Vec4 fwd = y, bwd = y;
      fwd[j] += h;
      bwd[j] -= h;
      jac.col(j) = (detail::trim_residual(cfg, fwd, desired_pitch,
                                          desired_speed) -
                    detail::trim_residual(cfg, bwd, desired_pitch,
                                          desired_speed)) /
                   (2.0 * h);
    }
    const Vec4 step = jac.fullPivLu().solve(-res);
    if (!step.allFinite()) {
      throw NumericalError("trim Newton step is non-finite (residual " +
                           std::to_string(res.norm()) + ")");
    }
    // Backtracking line search on the residual norm.
    double t = 1.0;
    Vec4 y_next = y + step;
    Vec4 res_next =
        detail::trim_residual(cfg, y_next, desired_pitch, desired_speed);
    for (int k = 0; k < 40 && !(res_next.norm() < res.norm()); ++k) {
      t *= 0.5;
      y_next = y + t * step;
      res_next =
          detail::trim_residual(cfg, y_next, desired_pitch, desired_speed);
    }
    if (!(res_next.norm() < res.norm())) {
      throw NumericalError(
          "trim iteration stalled (residual " + std::to_string(res.norm()) +
          " at iteration " + std::to_string(iter) + ")");
    }
    y = y_next;
    res = res_next;
  }
  if (res.norm() > kTol) {
    throw NumericalError("trim did not converge in " +
                         std::to_string(kMaxIters) + " iterations (residual " +
                         std::to_string(res.norm()) + ")");
  }

  if (y[3] < 0.0 || y[3] > cfg.actuators.max_m_b) {
    throw ConfigError("glide at pitch " + std::to_string(desired_pitch) +
                      ", speed " + std::to_string(desired_speed) +
                      " needs ballast " + std::to_string(y[3]) +
                      " kg, outside pump range [0, " +
                      std::to_string(cfg.actuators.max_m_b) + "]");
  }
  if (y[2] < cfg.actuators.min_r_p1 || y[2] > cfg.actuators.max_r_p1) {
    throw ConfigError("glide at pitch " + std::to_string(desired_pitch) +
                      " needs battery station " + std::to_string(y[2]) +
                      " m, outside travel [" +
                      std::to_string(cfg.actuators.min_r_p1) + ", " +
                      std::to_string(cfg.actuators.max_r_p1) + "]");
  }

  Equilibrium eq;
  eq.phase = phase;
  eq.u = y[0];
  eq.w = y[1];
  eq.pitch = desired_pitch;
  eq.r_p1 = y[2];
  eq.m_b = y[3];
  eq.speed = desired_speed;
  return eq;
}

// ---------------------------------------------------------------------------
// Linearization
// ---------------------------------------------------------------------------

namespace detail {

inline void check_column_finite(const Eigen::Ref<const Eigen::VectorXd>& col,
                                const char* kind, int index) {
  if (!col.allFinite()) {
    throw NumericalError(std::string("linearization produced a non-finite "
                                     "column perturbing ") +
                         kind + " " + std::to_string(index));
  }
}

}  // namespace detail

/// Central-difference Jacobians of the vertical-plane dynamics around an
/// equilibrium; step h_i = max(1e-6, 1e-6 |x_i|) per coordinate.
[[nodiscard]] inline VerticalModel linearize_vertical(const GliderConfig& cfg,
                                                      const Equilibrium& eq) {
  const Vec4 x0 = eq.x();
  const Vec2 u0 = eq.controls();
  VerticalModel m;
  for (int j = 0; j < 4; ++j) {
    const double h = detail::fd_step(x0[j]);
    Vec4 fwd = x0, bwd = x0;
    fwd[j] += h;
    bwd[j] -= h;
    m.A.col(j) = (vertical_plane_dynamics(cfg, fwd, u0) -
                  vertical_plane_dynamics(cfg, bwd, u0)) /
                 (2.0 * h);
    detail::check_column_finite(m.A.col(j), "state", j);
  }
  for (int j = 0; j < 2; ++j) {
    const double h = detail::fd_step(u0[j]);
    Vec2 fwd = u0, bwd = u0;
    fwd[j] += h;
    bwd[j] -= h;
    m.B.col(j) = (vertical_plane_dynamics(cfg, x0, fwd) -
                  vertical_plane_dynamics(cfg, x0, bwd)) /
                 (2.0 * h);
    detail::check_column_finite(m.B.col(j), "input", j);
  }
  return m;
}

/// Central-difference Jacobians of the horizontal-plane dynamics around the
/// straight-course condition (zero yaw rate and error, zeta = 0) riding on a
/// vertical equilibrium.
[[nodiscard]] inline HorizontalModel linearize_horizontal(
    const GliderConfig& cfg, const Equilibrium& eq) {
  HorizontalModel m;
  for (int j = 0; j < 2; ++j) {
    const double h = 1e-6;
    Vec2 fwd = Vec2::Zero(), bwd = Vec2::Zero();
    fwd[j] += h;
    bwd[j] -= h;
    m.A.col(j) = (horizontal_plane_dynamics(cfg, eq, fwd, 0.0) -
                  horizontal_plane_dynamics(cfg, eq, bwd, 0.0)) /
                 (2.0 * h);
    detail::check_column_finite(m.A.col(j), "state", j);
  }
  const double h = 1e-6;
  m.B = (horizontal_plane_dynamics(cfg, eq, Vec2::Zero(), h) -
         horizontal_plane_dynamics(cfg, eq, Vec2::Zero(), -h)) /
        (2.0 * h);
  detail::check_column_finite(m.B, "input", 0);
  return m;
}

// ---------------------------------------------------------------------------
// Riccati
// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::MatrixXd riccati_residual(const Eigen::MatrixXd& A,
                                        const Eigen::MatrixXd& S,
                                        const Eigen::MatrixXd& Q,
                                        const Eigen::MatrixXd& P) {
  return (A.transpose() * P + P * A - P * S * P + Q).eval();
}

/// PBH stabilizability: every eigenvalue of A with nonnegative real part
/// must keep [A - lambda I, B] at full row rank.
inline void check_stabilizable(const Eigen::MatrixXd& A,
                               const Eigen::MatrixXd& B) {
  const Eigen::Index n = A.rows();
  const Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()[i];
    if (lambda.real() < -1e-9) continue;
    Eigen::MatrixXcd pencil(n, n + B.cols());
    pencil.leftCols(n) =
        A.cast<std::complex<double>>() -
        lambda * Eigen::MatrixXcd::Identity(n, n);
    pencil.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(pencil);
    qr.setThreshold(1e-10);
    if (qr.rank() < n) {
      std::ostringstream msg;
      msg << "(A, B) pair is not stabilizable: mode at eigenvalue " << lambda
          << " is uncontrollable";
      throw NumericalError(msg.str());
    }
  }
}

}  // namespace detail

/// Solves A^T P + P A - P B R^-1 B^T P + Q = 0 by the Hamiltonian
/// eigenstructure method with Kleinman-Newton refinement, and returns
/// K = R^-1 B^T P together with P. Requires (A, B) stabilizable, Q PSD,
/// R PD. Guarantees on return: symmetric P, Riccati residual Frobenius norm
/// <= 1e-8, and a Hurwitz closed loop A - B K.
[[nodiscard]] inline CareSolution solve_care(const Eigen::MatrixXd& A,
                                             const Eigen::MatrixXd& B,
                                             const Eigen::MatrixXd& Q,
                                             const Eigen::MatrixXd& R) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != B.cols() || R.cols() != B.cols()) {
    throw ConfigError("solve_care: inconsistent matrix dimensions");
  }
  detail::check_stabilizable(A, B);

  const Eigen::MatrixXd R_inv = R.inverse();
  const Eigen::MatrixXd S = B * R_inv * B.transpose();

  Eigen::MatrixXd H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = A;
  H.topRightCorner(n, n) = -S;
  H.bottomLeftCorner(n, n) = -Q;
  H.bottomRightCorner(n, n) = -A.transpose();

  const Eigen::EigenSolver<Eigen::MatrixXd> es(H);
  Eigen::MatrixXcd stable(2 * n, n);
  Eigen::Index found = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (es.eigenvalues()[i].real() < 0.0) {
      if (found == n) {
        throw NumericalError(
            "Hamiltonian spectrum has more than n stable eigenvalues");
      }
      stable.col(found++) = es.eigenvectors().col(i);
    }
  }
  if (found != n) {
    throw NumericalError(
        "Hamiltonian spectrum is not hyperbolic: expected " +
        std::to_string(n) + " stable eigenvalues, found " +
        std::to_string(found));
  }

  const Eigen::MatrixXcd U = stable.topRows(n);
  const Eigen::MatrixXcd V = stable.bottomRows(n);
  const Eigen::FullPivLU<Eigen::MatrixXcd> lu(U);
  if (!lu.isInvertible()) {
    throw NumericalError("Hamiltonian stable subspace is not a graph over "
                         "the state space");
  }
  Eigen::MatrixXd P = (V * lu.inverse()).real();
  P = 0.5 * (P + P.transpose()).eval();

  // Kleinman-Newton refinement: each sweep solves the closed-loop Lyapunov
  // equation Ak^T dP + dP Ak = -residual via Kronecker vectorization.
  std::vector<double> history;
  for (int sweep = 0; sweep < 50; ++sweep) {
    const Eigen::MatrixXd res = detail::riccati_residual(A, S, Q, P);
    history.push_back(res.norm());
    if (res.norm() <= 1e-10) break;
    const Eigen::MatrixXd Ak = A - S * P;
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd kron(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        kron.block(i * n, j * n, n, n) =
            Ak.transpose() * (i == j ? 1.0 : 0.0) +
            I * Ak.transpose()(i, j);
      }
    }
    Eigen::VectorXd rhs(n * n);
    for (Eigen::Index c = 0; c < n; ++c) rhs.segment(c * n, n) = -res.col(c);
    const Eigen::VectorXd dp_vec = kron.fullPivLu().solve(rhs);
    Eigen::MatrixXd dP(n, n);
    for (Eigen::Index c = 0; c < n; ++c) dP.col(c) = dp_vec.segment(c * n, n);
    P += 0.5 * (dP + dP.transpose());
    if (!P.allFinite() ||
        (history.size() > 3 && history.back() > 10.0 * history.front())) {
      std::ostringstream msg;
      msg << "Riccati refinement diverged; residual history:";
      for (double r : history) msg << " " << r;
      throw NumericalError(msg.str());
    }
  }

  const Eigen::MatrixXd final_res = detail::riccati_residual(A, S, Q, P);
  if (!(final_res.norm() <= 1e-8)) {
    std::ostringstream msg;
    msg << "Riccati residual " << final_res.norm()
        << " exceeds 1e-8; history:";
    for (double r : history) msg << " " << r;
    throw NumericalError(msg.str());
  }

  CareSolution sol;
  sol.P = P;
  sol.K = R_inv * B.transpose() * P;

  const Eigen::MatrixXd closed = A - B * sol.K;
  const Eigen::EigenSolver<Eigen::MatrixXd> cl(closed);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (cl.eigenvalues()[i].real() >= 0.0) {
      std::ostringstream msg;
      msg << "closed loop is not Hurwitz: eigenvalue "
          << cl.eigenvalues()[i];
      throw NumericalError(msg.str());
    }
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Gain scheduling and the feedback law
// ---------------------------------------------------------------------------

namespace detail {

inline PhaseGains phase_gains(const GliderConfig& cfg, double pitch,
                              double speed, GlidePhase phase) {
  PhaseGains g;
  g.eq = find_equilibrium(cfg, pitch, speed, phase);

  const VerticalModel vm = linearize_vertical(cfg, g.eq);
  const Eigen::MatrixXd qv = cfg.control.q_vertical.asDiagonal();
  const Eigen::MatrixXd rv = cfg.control.r_vertical.asDiagonal();
  g.K_vertical = solve_care(vm.A, vm.B, qv, rv).K;

  const HorizontalModel hm = linearize_horizontal(cfg, g.eq);
  const Eigen::MatrixXd qh = cfg.control.q_horizontal.asDiagonal();
  Eigen::MatrixXd rh(1, 1);
  rh(0, 0) = cfg.control.r_horizontal;
  g.K_horizontal = solve_care(hm.A, hm.B, qh, rh).K;
  return g;
}

}  // namespace detail

/// Computes the four gains of one work cycle: {descend, ascend} x
/// {vertical, horizontal}, each with its equilibrium, plus the shared
/// course. Pure function of its inputs; the mission loop calls it exactly
/// once per surfacing.
[[nodiscard]] inline GainSet compute_gain_set(const GliderConfig& cfg,
                                              const CyclePlan& plan) {
  if (!(plan.pitch_descend < 0.0) || !(plan.pitch_ascend > 0.0)) {
    throw ConfigError(
        "cycle plan must carry a negative descend pitch and a positive "
        "ascend pitch");
  }
  GainSet set;
  set.descend = detail::phase_gains(cfg, plan.pitch_descend, plan.speed,
                                    GlidePhase::kDescend);
  set.ascend = detail::phase_gains(cfg, plan.pitch_ascend, plan.speed,
                                   GlidePhase::kAscend);
  set.heading = plan.heading;
  return set;
}

/// The saturated feedback law u = u_eq - K dx for the active phase, both
/// planes merged. The yaw error wraps to (-pi, pi]; with detach_speed the
/// forward-speed error is zeroed before multiplication so the vertical loop
/// regulates geometry only.
[[nodiscard]] inline ControlCommand feedback_command(const GliderState& state,
                                                     const GainSet& gains,
                                                     GlidePhase phase,
                                                     bool detach_speed,
                                                     const GliderConfig& cfg) {
  const PhaseGains& g = gains.for_phase(phase);
  const Vec3 euler = euler_from_quat(state.q);

  Vec4 dx;
  dx[0] = detach_speed ? 0.0 : state.v.x() - g.eq.u;
  dx[1] = state.v.z() - g.eq.w;
  dx[2] = state.omega.y();
  dx[3] = euler[1] - g.eq.pitch;
  const Vec2 u_vert = g.eq.controls() - g.K_vertical * dx;

  Vec2 dh;
  dh[0] = state.omega.z();
  dh[1] = wrap_angle(euler[2] - gains.heading);
  const double zeta_raw = -(g.K_horizontal * dh)(0);

  ControlCommand cmd;
  const ActuatorLimits& lim = cfg.actuators;
  cmd.r_p1 = std::clamp(u_vert[0], lim.min_r_p1, lim.max_r_p1);
  cmd.m_b = std::clamp(u_vert[1], 0.0, lim.max_m_b);
  cmd.zeta = std::clamp(zeta_raw, -lim.zeta_range, lim.zeta_range);
  cmd.saturated = cmd.r_p1 != u_vert[0] || cmd.m_b != u_vert[1] ||
                  cmd.zeta != zeta_raw;
  return cmd;
}

}  // namespace glidesim
