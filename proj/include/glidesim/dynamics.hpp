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

// Six-DOF kinetics of a buoyancy-driven glider. The vehicle is modeled as a
// rigid hull (mass m_s, inertia J_s about the body origin), a movable point
// mass m_p that translates along body-x and revolves about it at radius R_p,
// and a ballast mass m_b at a fixed station. The coupled momentum equations
// are solved in the body frame:
//
//   (M_rigid + M_f) [v_dot; omega_dot] = Coriolis + gravity/buoyancy
//                                        + viscous + flotation
//
// with the hull added mass M_f kept on the left-hand side (relative
// accelerations equal absolute accelerations for the steady currents modeled
// here). Ballast mass enters the weight and buoyancy terms only; its inertia
// is lumped into the hull.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "glidesim/config.hpp"
#include "glidesim/errors.hpp"
#include "glidesim/frames.hpp"

namespace glidesim {

/// Vehicle motion state. Velocities are body-frame; attitude maps body to
/// NED; position is NED (z is depth, positive down).
struct GliderState {
  Vec3 v = Vec3::Zero();      ///< linear velocity, body frame, m/s
  Vec3 omega = Vec3::Zero();  ///< angular velocity, body frame, rad/s
  Quat q = Quat::Identity();  ///< attitude, body -> NED
  Vec3 p = Vec3::Zero();      ///< position, NED, m

  /// Body-to-NED rotation matrix.
  [[nodiscard]] Mat3 rotation() const { return quat_to_rotmat(q); }
};

/// Actuator positions, their commanded targets, and the rates realized by the
/// most recent rate-limited step. The realized rates feed the kinetic
/// equations as zeta_dot and r_p1_dot; commanded targets never enter the
/// dynamics directly.
struct ActuatorState {
  double zeta = 0.0;   ///< battery roll angle, rad
  double r_p1 = 0.0;   ///< battery axial station, m
  double m_b = 0.0;    ///< ballast fill, kg

  double zeta_cmd = 0.0;
  double r_p1_cmd = 0.0;
  double m_b_cmd = 0.0;

  double zeta_rate = 0.0;  ///< rad/s realized over the last step
  double r_p1_rate = 0.0;  ///< m/s realized over the last step
  double m_b_rate = 0.0;   ///< kg/s realized over the last step
};

/// Ambient water motion at the vehicle position, NED frame. Rotational flow
/// is carried for completeness; the bundled current fields always set it to
/// zero.
struct CurrentSample {
  Vec3 v_f = Vec3::Zero();      ///< water velocity, NED, m/s
  Vec3 omega_f = Vec3::Zero();  ///< water rotation, NED, rad/s
};

/// Derived geometry of the movable mass for the current actuator state.
struct MovableMassState {
  Vec3 r_p = Vec3::Zero();      ///< battery CG position, body frame
  Vec3 r_p_dot = Vec3::Zero();  ///< battery CG velocity, body frame
  Mat3 J_p = Mat3::Zero();      ///< battery inertia in body axes
  Mat3 bRp = Mat3::Identity();  ///< battery-to-body rotation (roll by zeta)
};

/// Scalar hydrodynamic loads in the velocity frame, plus the flow angles they
/// were evaluated at. All zero when the flow speed is degenerate.
struct HydroForces {
  double drag = 0.0;
  double side_force = 0.0;
  double lift = 0.0;
  double roll_moment = 0.0;   ///< T_DL1
  double pitch_moment = 0.0;  ///< T_DL2
  double yaw_moment = 0.0;    ///< T_DL3
  FlowAngles angles;
};

/// A force/torque pair in the body frame.
struct GeneralizedForce {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();

  GeneralizedForce& operator+=(const GeneralizedForce& o) {
    force += o.force;
    torque += o.torque;
    return *this;
  }
};

/// Body-frame relative velocity of the vehicle with respect to the water.
struct RelativeVelocity {
  Vec3 v_r = Vec3::Zero();
  Vec3 omega_r = Vec3::Zero();
};

namespace detail {

/// One rate-limited tracking step for a scalar actuator: move toward the
/// clamped target at the configured slew rate, land exactly on the target
/// when within one step of it, and never leave [lo, hi].
struct ScalarStep {
  double value = 0.0;
  double rate = 0.0;
};

inline ScalarStep step_toward(double u, double target, double slew, double lo,
                              double hi, double dt) {
  target = std::clamp(target, lo, hi);
  const double gap = target - u;
  const double step = slew * dt;
  double next = (std::abs(gap) <= step) ? target
                                        : u + (gap > 0.0 ? step : -step);
  next = std::clamp(next, lo, hi);
  return {next, (next - u) / dt};
}

}  // namespace detail

/// Advance all three actuators one rate-limited step toward their commanded
/// targets. Targets outside the travel limits are clamped on entry; realized
/// rates are recorded for use as zeta_dot and r_p1_dot in the dynamics.
[[nodiscard]] inline ActuatorState actuator_step(const ActuatorState& a,
                                                 double dt,
                                                 const GliderConfig& cfg) {
  if (!(dt > 0.0)) throw ConfigError("actuator_step requires dt > 0");
  const ActuatorLimits& lim = cfg.actuators;
  ActuatorState out = a;

  const auto z = detail::step_toward(a.zeta, a.zeta_cmd, lim.delta_zeta,
                                     -lim.zeta_range, lim.zeta_range, dt);
  out.zeta = z.value;
  out.zeta_rate = z.rate;

  const auto r = detail::step_toward(a.r_p1, a.r_p1_cmd, lim.delta_r_p1,
                                     lim.min_r_p1, lim.max_r_p1, dt);
  out.r_p1 = r.value;
  out.r_p1_rate = r.rate;

  const auto b = detail::step_toward(a.m_b, a.m_b_cmd, lim.delta_m_b, 0.0,
                                     lim.max_m_b, dt);
  out.m_b = b.value;
  out.m_b_rate = b.rate;

  return out;
}

/// Battery-pack geometry derived from the actuator state. The pack rides at
/// r_p = [r_p1, -R_p sin(zeta), R_p cos(zeta)] (hanging below the roll axis
/// at zeta = 0) and its inertia follows the roll rotation. Battery
/// accelerations (zeta_ddot, r_p1_ddot) are treated as zero.
[[nodiscard]] inline MovableMassState movable_mass_state(
    const ActuatorState& a, const GliderConfig& cfg) {
  const double s = std::sin(a.zeta);
  const double c = std::cos(a.zeta);
  MovableMassState m;
  m.r_p = Vec3(a.r_p1, -cfg.R_p * s, cfg.R_p * c);
  m.r_p_dot = Vec3(a.r_p1_rate, -cfg.R_p * c * a.zeta_rate,
                   -cfg.R_p * s * a.zeta_rate);
  m.bRp << 1.0, 0.0, 0.0,  //
      0.0, c, -s,          //
      0.0, s, c;
  m.J_p = m.bRp * cfg.J_p0 * m.bRp.transpose();
  return m;
}

/// Hull added-mass matrix, included on the left-hand side of the momentum
/// balance.
[[nodiscard]] inline Mat6 added_mass_matrix(const GliderConfig& cfg) {
  return cfg.added_mass.matrix();
}

/// Full 6x6 generalized mass matrix (rigid + movable + added mass):
///
///   [ (m_s+m_p) I                    -m_s hat(r_s) - m_p hat(r_p) ]
///   [ m_s hat(r_s) + m_p hat(r_p)    J_s + J_p - m_p hat(r_p)^2   ]  + M_f
///
/// Throws ConfigError (with the minimum eigenvalue) if the result is not
/// positive definite.
[[nodiscard]] inline Mat6 generalized_mass_matrix(const ActuatorState& a,
                                                  const GliderConfig& cfg) {
  const MovableMassState mm = movable_mass_state(a, cfg);
  const Mat3 rs_hat = hat(cfg.r_s);
  const Mat3 rp_hat = hat(mm.r_p);
  const Mat3 coupling = cfg.m_s * rs_hat + cfg.m_p * rp_hat;

  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = (cfg.m_s + cfg.m_p) * Mat3::Identity();
  m.topRightCorner<3, 3>() = -coupling;
  m.bottomLeftCorner<3, 3>() = coupling;
  m.bottomRightCorner<3, 3>() =
      cfg.J_s + mm.J_p - cfg.m_p * rp_hat * rp_hat;
  m += added_mass_matrix(cfg);

  Eigen::LLT<Mat6> llt(m);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Mat6> es(m);
    throw ConfigError(
        "generalized mass matrix is not positive definite (min eigenvalue " +
        std::to_string(es.eigenvalues().minCoeff()) + ")");
  }
  return m;
}

/// Net weight minus buoyancy, in kilograms, at depth z with ballast fill m_b:
///   dm(z) = m_b + m_s + m_p - rho(z) ((m_s + m_p)/rho_surface - K_vh z).
/// Positive means heavier than the displaced water (the vehicle sinks).
[[nodiscard]] inline double mass_excess(const GliderConfig& cfg, double z,
                                        double m_b) {
  const double volume = (cfg.m_s + cfg.m_p) / cfg.rho_surface - cfg.K_vh * z;
  return m_b + cfg.m_s + cfg.m_p - cfg.water_density(z) * volume;
}

/// Gravity/buoyancy wrench in the body frame. The buoyancy center is the
/// body origin, so the force is the net weight dm(z) g along world-down and
/// the torque is the gravity couple of the three mass stations.
[[nodiscard]] inline GeneralizedForce buoyancy_wrench(const GliderState& state,
                                                      const ActuatorState& a,
                                                      const GliderConfig& cfg) {
  const Vec3 down_b = state.rotation().transpose() * Vec3::UnitZ();
  const MovableMassState mm = movable_mass_state(a, cfg);
  const double dm = mass_excess(cfg, state.p.z(), a.m_b);

  GeneralizedForce w;
  w.force = dm * kGravity * down_b;
  const Vec3 static_moment =
      cfg.m_s * cfg.r_s + cfg.m_p * mm.r_p + a.m_b * cfg.r_b;
  w.torque = kGravity * static_moment.cross(down_b);
  return w;
}

/// Body-frame velocities relative to the ambient water.
[[nodiscard]] inline RelativeVelocity relative_velocity(
    const GliderState& state, const CurrentSample& cur) {
  const Mat3 bRn = state.rotation().transpose();
  return {state.v - bRn * cur.v_f, state.omega - bRn * cur.omega_f};
}

/// Viscous hydrodynamic wrench. Scalar loads are quadratic in the relative
/// flow speed and linear or quadratic in the flow angles and relative body
/// rates; they act along the velocity-frame axes and are rotated into the
/// body frame. Zero below the degenerate-flow cutoff.
///
/// Two config switches select as-published literal polynomial forms: the
/// default drag/lift use the attack angle (a sideslip-based lift cannot
/// change sign over a vertical-plane glide), and the default pitch moment is
/// (K_M0 + K_M a + K_q q_r) V^2 rather than the product form.
[[nodiscard]] inline std::pair<GeneralizedForce, HydroForces> viscous_wrench(
    const GliderState& state, const CurrentSample& cur,
    const GliderConfig& cfg) {
  const RelativeVelocity rel = relative_velocity(state, cur);
  const FlowAngles fa = flow_angles(rel.v_r);

  HydroForces h;
  h.angles = fa;
  if (fa.degenerate) return {GeneralizedForce{}, h};

  const HydroCoefficients& k = cfg.hydro;
  const double v2 = fa.speed * fa.speed;
  const double attack = cfg.options.hydro_beta_literal ? fa.beta : fa.alpha;
  const double beta = fa.beta;
  const double p_r = rel.omega_r.x();
  const double q_r = rel.omega_r.y();
  const double r_r = rel.omega_r.z();

  h.drag = (k.K_D0 + k.K_D * attack * attack) * v2;
  h.side_force = (k.K_beta * beta) * v2;
  h.lift = (k.K_L0 + k.K_L * attack) * v2;
  h.roll_moment = (k.K_MR * beta + k.K_p * p_r) * v2;
  h.pitch_moment = cfg.options.tdl2_literal
                       ? (k.K_M0 + k.K_M * beta * k.K_q * q_r) * v2
                       : (k.K_M0 + k.K_M * attack + k.K_q * q_r) * v2;
  h.yaw_moment = (k.K_MY * beta + k.K_r * r_r) * v2;

  const Mat3 bRv = body_from_velocity(fa);
  GeneralizedForce w;
  w.force = bRv * Vec3(-h.drag, h.side_force, -h.lift);
  w.torque = bRv * Vec3(h.roll_moment, h.pitch_moment, h.yaw_moment);
  return {w, h};
}

/// Waterplane flotation wrench, nonzero only when the hull breaches the
/// surface (z < 0): the breached slice stops displacing water, producing a
/// restoring downward force plus heave damping on the world-vertical motion.
/// Applied at the body origin with no torque; this stands in for free-surface
/// physics outside this model's scope.
[[nodiscard]] inline GeneralizedForce surface_wrench(const GliderState& state,
                                                     const GliderConfig& cfg) {
  GeneralizedForce w;
  const double z = state.p.z();
  if (z >= 0.0) return w;

  const Mat3 nRb = state.rotation();
  const double z_vel = (nRb * state.v).z();
  const double f_down = -kGravity * cfg.water_density(0.0) *
                            cfg.surface.waterplane_area * z -
                        cfg.surface.heave_damping * z_vel;
  w.force = nRb.transpose() * Vec3(0.0, 0.0, f_down);
  return w;
}

namespace detail {
inline void require_finite(const Vec3& value, const char* term) {
  if (!value.allFinite()) {
    throw NumericalError(std::string("non-finite ") + term +
                         " term in dynamics");
  }
}
}  // namespace detail

/// Body-frame accelerations from the coupled momentum balance
/// (M_rigid + M_f) [v_dot; omega_dot] = RHS. The right-hand side collects
/// the momentum-coupling (Coriolis) terms of the hull and battery, the
/// battery-spin terms, and the external wrenches. Battery accelerations are
/// zero by assumption; realized actuator rates supply zeta_dot and r_p1_dot.
[[nodiscard]] inline std::pair<Vec3, Vec3> dynamics_rhs(
    const GliderState& state, const ActuatorState& a, const CurrentSample& cur,
    const GliderConfig& cfg) {
  const MovableMassState mm = movable_mass_state(a, cfg);
  const Vec3& v = state.v;
  const Vec3& om = state.omega;

  // Hull momentum coupling. The rotational term is the exact Newton-Euler
  // pair (r_s x v) x omega + (omega x r_s) x v; grouping matters, and this
  // one conserves momentum for a torque-free body (see the conservation
  // tests).
  const Vec3 v_s = v + om.cross(cfg.r_s);
  Vec3 rhs_f = cfg.m_s * v_s.cross(om);
  Vec3 rhs_t = cfg.m_s * ((cfg.r_s.cross(v)).cross(om) +
                          (om.cross(cfg.r_s)).cross(v));
  rhs_t += (cfg.J_s * om).cross(om);

  // Battery momentum coupling. v_p already contains one r_p_dot; the second
  // one is the transport Coriolis term.
  const Vec3 v_p = v + om.cross(mm.r_p) + mm.r_p_dot;
  const Vec3 battery_coupling = (v_p + mm.r_p_dot).cross(om);
  rhs_f += cfg.m_p * battery_coupling;
  rhs_t += cfg.m_p * mm.r_p.cross(battery_coupling);

  // Battery spin terms.
  const Vec3 zeta_spin = a.zeta_rate * Vec3::UnitX();
  const Vec3 om_p = om + zeta_spin;
  rhs_t += (mm.J_p * om_p).cross(om_p);
  rhs_t += mm.J_p * zeta_spin.cross(om);

  detail::require_finite(rhs_f, "momentum-coupling force");
  detail::require_finite(rhs_t, "momentum-coupling torque");

  const GeneralizedForce buoy = buoyancy_wrench(state, a, cfg);
  detail::require_finite(buoy.force, "buoyancy");
  const auto [visc, hydro] = viscous_wrench(state, cur, cfg);
  detail::require_finite(visc.force, "viscous force");
  detail::require_finite(visc.torque, "viscous torque");
  const GeneralizedForce surf = surface_wrench(state, cfg);
  detail::require_finite(surf.force, "flotation");

  Vec6 rhs;
  rhs.head<3>() = rhs_f + buoy.force + visc.force + surf.force;
  rhs.tail<3>() = rhs_t + buoy.torque + visc.torque + surf.torque;

  const Mat6 m = generalized_mass_matrix(a, cfg);
  const Vec6 accel = Eigen::LLT<Mat6>(m).solve(rhs);
  if (!accel.allFinite()) {
    throw NumericalError("mass-matrix solve produced non-finite accelerations");
  }
  return {accel.head<3>(), accel.tail<3>()};
}

/// Total mechanical energy: generalized kinetic energy (including added
/// mass) plus the gravity/buoyancy potential. Valid as a conserved/dissipated
/// diagnostic when the mass excess is depth-independent (K_vh = 0, uniform
/// density); the attitude term is exact always.
[[nodiscard]] inline double mechanical_energy(const GliderState& state,
                                              const ActuatorState& a,
                                              const GliderConfig& cfg) {
  const MovableMassState mm = movable_mass_state(a, cfg);
  Vec6 xdot;
  xdot.head<3>() = state.v;
  xdot.tail<3>() = state.omega;
  const double kinetic = 0.5 * xdot.dot(generalized_mass_matrix(a, cfg) * xdot);

  const Vec3 down_b = state.rotation().transpose() * Vec3::UnitZ();
  const Vec3 static_moment =
      cfg.m_s * cfg.r_s + cfg.m_p * mm.r_p + a.m_b * cfg.r_b;
  const double potential =
      -kGravity * mass_excess(cfg, state.p.z(), a.m_b) * state.p.z() -
      kGravity * static_moment.dot(down_b);
  return kinetic + potential;
}

}  // namespace glidesim
