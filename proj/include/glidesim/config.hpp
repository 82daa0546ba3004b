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

// Vehicle description for a buoyancy-driven glider with a single movable
// internal mass (battery pack that translates along body-x and rotates about
// it) and a variable ballast tank. All quantities SI unless noted. The body
// origin sits at the center of buoyancy; positions are offsets from it in the
// kinetic body frame (x forward, y starboard, z keel-down).

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "glidesim/errors.hpp"
#include "glidesim/frames.hpp"

namespace glidesim {

/// Quadratic hydrodynamic coefficients. Each force/moment is coefficient *
/// V_r^2 with V_r the relative flow speed, so units are N/(m/s)^2 (forces)
/// and N*m/(m/s)^2 (moments), per radian or per rad/s where an angle or rate
/// multiplies in.
struct HydroCoefficients {
  double K_D0 = 0.0;  ///< parasitic drag
  double K_D = 0.0;   ///< induced drag (quadratic in attack angle)
  double K_beta = 0.0;  ///< side force per sideslip
  double K_L0 = 0.0;  ///< lift at zero attack
  double K_L = 0.0;   ///< lift slope per attack
  double K_MR = 0.0;  ///< roll moment per sideslip
  double K_p = 0.0;   ///< roll damping per roll rate
  double K_M0 = 0.0;  ///< pitch moment at zero attack
  double K_M = 0.0;   ///< pitch moment slope per attack
  double K_q = 0.0;   ///< pitch damping per pitch rate
  double K_MY = 0.0;  ///< yaw moment per sideslip
  double K_r = 0.0;   ///< yaw damping per yaw rate
};

/// Added-mass coefficients of the hull (kg, kg*m, kg*m^2). The standard
/// port/starboard symmetry leaves six diagonal entries plus the sway-yaw and
/// heave-pitch couplings; both members of each coupling pair appear in the
/// config document and must match exactly.
struct AddedMass {
  double lambda11 = 0.0, lambda22 = 0.0, lambda33 = 0.0;
  double lambda44 = 0.0, lambda55 = 0.0, lambda66 = 0.0;
  double lambda26 = 0.0, lambda62 = 0.0;
  double lambda35 = 0.0, lambda53 = 0.0;

  [[nodiscard]] Mat6 matrix() const {
    Mat6 m = Mat6::Zero();
    m(0, 0) = lambda11;
    m(1, 1) = lambda22;
    m(2, 2) = lambda33;
    m(3, 3) = lambda44;
    m(4, 4) = lambda55;
    m(5, 5) = lambda66;
    m(1, 5) = lambda26;
    m(5, 1) = lambda62;
    m(2, 4) = lambda35;
    m(4, 2) = lambda53;
    return m;
  }
};

/// Actuator travel and rate limits. Rates are the fixed slew magnitudes used
/// by the rate limiter; commands clamp to the travel range.
struct ActuatorLimits {
  double delta_zeta = 0.0;   ///< battery roll slew, rad/s
  double delta_r_p1 = 0.0;   ///< battery translation slew, m/s
  double delta_m_b = 0.0;    ///< ballast pump rate, kg/s
  double min_r_p1 = 0.0, max_r_p1 = 0.0;  ///< battery travel, m
  double max_m_b = 0.0;      ///< ballast capacity, kg (minimum is empty, 0)
  double zeta_range = 0.0;   ///< battery roll limit, rad (symmetric +/-)
};

/// Commandable pitch envelope of the vehicle (set by actuator authority).
struct PitchLimits {
  double min = 0.0;  ///< most negative commandable pitch, rad
  double max = 0.0;  ///< most positive commandable pitch, rad
};

/// Waterplane flotation model, active only above z = 0 (NED z is depth, so
/// z < 0 means part of the hull is out of the water). Simulator plumbing for
/// headless runs; it replaces the free-surface physics an engine-backed
/// deployment would provide.
struct SurfaceModel {
  double waterplane_area = 0.0;  ///< m^2, lost displacement per meter breach
  double heave_damping = 0.0;    ///< N*s/m, water entry/exit losses
};

/// Switches between the as-published literal polynomial forms and the
/// repaired forms used by default (see README, "model options").
struct ModelOptions {
  /// Literal pitch viscous moment (K_M0 + K_M*beta*K_q*q_r)*V^2 instead of
  /// the repaired (K_M0 + K_M*alpha + K_q*q_r)*V^2.
  bool tdl2_literal = false;
  /// Literal sideslip-based drag/lift (K_D0+K_D*beta^2, K_L0+K_L*beta)
  /// instead of the attack-angle forms. Literal lift cannot change sign in a
  /// vertical-plane glide, so ascending trim does not exist under this
  /// option; it is provided for comparison runs only.
  bool hydro_beta_literal = false;
};

/// LQR weights and guidance pitch floor. Overridable from the config
/// document; defaults favor gentle actuator use in the vertical plane. The
/// heading weight is deliberately cheap: waypoint capture needs the battery
/// roll to reach hard-over once the course error passes ~0.4 rad, otherwise
/// the closed loop turns at roughly twice the vehicle's minimum turning
/// radius and a surfacing-to-surfacing approach can settle into a stable
/// orbit around the target instead of converging on it.
struct ControlWeights {
  Vec4 q_vertical = Vec4::Ones();              ///< state weights (u, w, q, pitch)
  Vec2 r_vertical = Vec2(100.0, 100.0);        ///< input weights (r_p1, m_b)
  Vec2 q_horizontal = Vec2::Ones();            ///< state weights (yaw rate, yaw err)
  double r_horizontal = 0.25;                  ///< input weight (zeta)
  double min_glide_pitch = 0.2;                ///< rad, floor on |pitch| command
};

struct GliderConfig {
  std::string description;

  double m_s = 0.0;        ///< rigid hull mass, kg
  Vec3 r_s = Vec3::Zero(); ///< hull CG offset, m
  double m_p = 0.0;        ///< movable (battery) mass, kg
  Vec3 r_b = Vec3::Zero(); ///< ballast CG offset, m; must be [r_b1, 0, 0]
  Mat3 J_s = Mat3::Zero(); ///< hull inertia about the body origin, kg*m^2
  Mat3 J_p0 = Mat3::Zero();///< battery inertia about its own axes at zeta=0
  double R_p = 0.0;        ///< battery CG offset from the roll axis, m

  double rho_deep = 0.0;     ///< deep seawater density rho(z), kg/m^3
  double rho_surface = 0.0;  ///< surface seawater density p_5, kg/m^3
  double rho_gradient = 0.0; ///< optional linear rho(z) slope, kg/m^4
  double K_vh = 0.0;         ///< hull volume loss per meter depth, m^3/m

  HydroCoefficients hydro;
  AddedMass added_mass;
  ActuatorLimits actuators;
  PitchLimits pitch_limits;
  SurfaceModel surface;
  ModelOptions options;
  ControlWeights control;

  /// Seawater density at depth z (m, positive down).
  [[nodiscard]] double water_density(double z) const {
    return rho_deep + rho_gradient * z;
  }

  /// Ballast fill that makes the vehicle neutrally buoyant at the surface.
  [[nodiscard]] double neutral_ballast() const {
    const double displaced =
        water_density(0.0) * ((m_s + m_p) / rho_surface);
    return displaced - (m_s + m_p);
  }

  void validate() const;
};

namespace detail {
inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("config error: " + msg);
}

inline void require_spd3(const Mat3& m, const std::string& name) {
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
          name + " must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat3> es(m);
  require(es.eigenvalues().minCoeff() > 0.0,
          name + " must be positive definite (min eigenvalue " +
              std::to_string(es.eigenvalues().minCoeff()) + ")");
}
}  // namespace detail

inline void GliderConfig::validate() const {
  using detail::require;
  require(m_s > 0.0, "m_s must be positive");
  require(m_p > 0.0, "m_p must be positive");
  require(R_p >= 0.0, "R_p must be non-negative");
  require(std::abs(r_b.y()) == 0.0 && std::abs(r_b.z()) == 0.0,
          "r_b must lie on the body x-axis ([r_b1, 0, 0])");
  detail::require_spd3(J_s, "J_s");
  detail::require_spd3(J_p0, "J_p0");

  require(rho_deep > 0.0 && rho_surface > 0.0,
          "water densities must be positive");
  require(K_vh >= 0.0, "K_vh must be non-negative");

  require(added_mass.lambda26 == added_mass.lambda62,
          "added-mass symmetry violated: lambda26 != lambda62");
  require(added_mass.lambda35 == added_mass.lambda53,
          "added-mass symmetry violated: lambda35 != lambda53");
  {
    Eigen::SelfAdjointEigenSolver<Mat6> es(added_mass.matrix());
    require(es.eigenvalues().minCoeff() >= -1e-12,
            "added-mass matrix must be positive semidefinite (min eigenvalue " +
                std::to_string(es.eigenvalues().minCoeff()) + ")");
  }

  require(actuators.delta_zeta > 0.0 && actuators.delta_r_p1 > 0.0 &&
              actuators.delta_m_b > 0.0,
          "actuator rates must be positive");
  require(actuators.min_r_p1 < actuators.max_r_p1,
          "battery travel range is empty (min_r_p1 >= max_r_p1)");
  require(actuators.max_m_b >= 0.0, "max_m_b must be non-negative");
  require(actuators.zeta_range > 0.0, "zeta_range must be positive");

  require(pitch_limits.min < 0.0 && pitch_limits.max > 0.0,
          "pitch limits must straddle zero");
  require(surface.waterplane_area >= 0.0 && surface.heave_damping >= 0.0,
          "surface model parameters must be non-negative");
  require(control.min_glide_pitch > 0.0 &&
              control.min_glide_pitch < pitch_limits.max,
          "min_glide_pitch must be positive and inside the pitch envelope");
  require((control.q_vertical.array() >= 0.0).all() &&
              (control.q_horizontal.array() >= 0.0).all(),
          "state weights must be non-negative");
  require((control.r_vertical.array() > 0.0).all() &&
              control.r_horizontal > 0.0,
          "input weights must be positive");
}

/// Reference vehicle: a plausible, self-consistent dataset for a ~65 kg,
/// 1.8 m class buoyancy glider. These are NOT published values for any real
/// vehicle; they are sized so the documented scenarios close (0.5 m/s inside
/// the ballast envelope, multi-cycle heading changes, bounded depth
/// overshoot) and they pass every validation and invariant suite in-tree.
/// configs/petrel2like.json mirrors this dataset.
inline GliderConfig reference_config() {
  GliderConfig c;
  c.description =
      "reference 65 kg / 1.8 m buoyancy glider (plausible dataset, "
      "not manufacturer data)";

  c.m_s = 54.2;
  // Bottom-heaviness budget: the static righting arm m_s*z_s + m_p*R_p must
  // stay below ~0.55 kg*m or the battery runs out of travel trimming the
  // steepest commanded pitch (+0.755 rad). Within that budget, z_s and R_p
  // set the roll stiffness that keeps the banked turn under hard-over zeta
  // inside the controlled-flight envelope.
  c.r_s = Vec3(0.0, 0.0, 0.006);
  c.m_p = 11.0;
  c.r_b = Vec3(0.05, 0.0, 0.0);
  c.J_s = Vec3(0.60, 14.0, 14.2).asDiagonal();
  c.J_p0 = Vec3(0.02, 0.12, 0.12).asDiagonal();
  c.R_p = 0.02;

  c.rho_deep = 1028.0;
  c.rho_surface = 1021.0;
  c.rho_gradient = 0.0;
  c.K_vh = 5.0e-7;

  c.hydro.K_D0 = 5.6;
  c.hydro.K_D = 95.0;
  c.hydro.K_beta = -60.0;
  c.hydro.K_L0 = 0.0;
  c.hydro.K_L = 180.0;
  c.hydro.K_MR = -2.0;
  c.hydro.K_p = -6.0;
  c.hydro.K_M0 = 0.5;
  c.hydro.K_M = -40.0;
  c.hydro.K_q = -55.0;
  c.hydro.K_MY = 25.0;
  c.hydro.K_r = -100.0;

  c.added_mass.lambda11 = 1.9;
  c.added_mass.lambda22 = 52.0;
  c.added_mass.lambda33 = 66.0;
  c.added_mass.lambda44 = 0.12;
  c.added_mass.lambda55 = 18.0;
  c.added_mass.lambda66 = 16.0;
  c.added_mass.lambda26 = 1.5;
  c.added_mass.lambda62 = 1.5;
  c.added_mass.lambda35 = -2.2;
  c.added_mass.lambda53 = -2.2;

  c.actuators.delta_zeta = 0.02;
  c.actuators.delta_r_p1 = 0.004;
  c.actuators.delta_m_b = 0.035;
  c.actuators.min_r_p1 = -0.05;
  c.actuators.max_r_p1 = 0.05;
  c.actuators.max_m_b = 0.9;
  c.actuators.zeta_range = 0.8;

  c.pitch_limits.min = -0.6432;
  c.pitch_limits.max = 0.755;

  c.surface.waterplane_area = 0.25;
  c.surface.heave_damping = 200.0;

  return c;
}

}  // namespace glidesim
