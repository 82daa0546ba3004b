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

// Frame and attitude utilities shared by every other module.
//
// Conventions:
//  * World frame is NED (x north, y east, z down). The glider's kinetic body
//    frame uses x forward, y starboard, z keel-down. Aerospace ZYX Euler
//    angles (roll about x, pitch about y, yaw about z).
//  * Attitude quaternions rotate body coordinates into NED coordinates:
//    p_ned = R(q) * p_body. Quaternions are kept unit-norm; every composition
//    in the simulator is followed by a renormalization and the helpers below
//    treat a norm error above 1e-6 as a hard fault.
//  * A separate right-handed ENU world frame (x east, y north, z up) and a
//    "visual" body frame (x forward, y port, z up) are provided for display
//    pipelines that want the conventional graphics axes.

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "glidesim/errors.hpp"

namespace glidesim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Quat = Eigen::Quaterniond;

inline constexpr double kGravity = 9.81;  // m/s^2
inline constexpr double kPi = 3.14159265358979323846;

/// Relative flow speeds below this are treated as hydrodynamically dead water:
/// flow angles are undefined and the viscous wrench is zero.
inline constexpr double kMinFlowSpeed = 1e-6;  // m/s

/// Unit-norm tolerance accepted for attitude quaternions entering the API.
inline constexpr double kQuatNormTol = 1e-6;

/// Skew-symmetric cross-product matrix: hat(a) * b == a x b.
[[nodiscard]] inline Mat3 hat(const Vec3& a) {
  Mat3 m;
  // clang-format off
  m <<     0.0, -a.z(),  a.y(),
        a.z(),    0.0, -a.x(),
       -a.y(),  a.x(),    0.0;
  // clang-format on
  return m;
}

/// Wraps an angle to (-pi, pi].
[[nodiscard]] inline double wrap_angle(double x) {
  double w = x - 2.0 * kPi * std::ceil((x - kPi) / (2.0 * kPi));
  if (w <= -kPi) w = kPi;  // guard the open end against rounding
  return w;
}

// ---------------------------------------------------------------------------
// Quaternion helpers
// ---------------------------------------------------------------------------

/// Throws NumericalError if q is further than kQuatNormTol from unit norm;
/// otherwise returns the renormalized quaternion.
[[nodiscard]] inline Quat normalized_checked(const Quat& q) {
  const double n = q.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > kQuatNormTol) {
    throw NumericalError("attitude quaternion lost unit norm (|q| = " +
                         std::to_string(n) + ")");
  }
  Quat out = q;
  out.normalize();
  return out;
}

/// Body->NED rotation matrix of an attitude quaternion.
[[nodiscard]] inline Mat3 quat_to_rotmat(const Quat& q) {
  return normalized_checked(q).toRotationMatrix();
}

/// Inverse of quat_to_rotmat up to quaternion sign (q and -q encode the same
/// rotation).
[[nodiscard]] inline Quat rotmat_to_quat(const Mat3& r) {
  Quat q(r);
  q.normalize();
  return q;
}

/// ZYX (yaw-pitch-roll) Euler angles to a body->NED quaternion.
[[nodiscard]] inline Quat quat_from_euler(double roll, double pitch,
                                          double yaw) {
  Quat q = Eigen::AngleAxisd(yaw, Vec3::UnitZ()) *
           Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
           Eigen::AngleAxisd(roll, Vec3::UnitX());
  q.normalize();
  return q;
}

/// ZYX Euler angles (roll, pitch, yaw) of a body->NED quaternion. At the
/// pitch singularity (|pitch| = pi/2) roll is folded into yaw.
[[nodiscard]] inline Vec3 euler_from_quat(const Quat& qin) {
  const Quat q = normalized_checked(qin);
  const double w = q.w(), x = q.x(), y = q.y(), z = q.z();
  const double roll = std::atan2(2.0 * (w * x + y * z),
                                 1.0 - 2.0 * (x * x + y * y));
  const double pitch =
      std::asin(std::clamp(2.0 * (w * y - z * x), -1.0, 1.0));
  const double yaw = std::atan2(2.0 * (w * z + x * y),
                                1.0 - 2.0 * (y * y + z * z));
  return {roll, pitch, yaw};
}

/// Quaternion kinematics: qdot = 0.5 * q (x) [0, omega_body].
[[nodiscard]] inline Quat quat_derivative(const Quat& q, const Vec3& omega) {
  const Quat omega_q(0.0, omega.x(), omega.y(), omega.z());
  const Quat p = q * omega_q;
  return Quat(0.5 * p.w(), 0.5 * p.x(), 0.5 * p.y(), 0.5 * p.z());
}

// ---------------------------------------------------------------------------
// Flow angles and the velocity frame
// ---------------------------------------------------------------------------

/// Attack/sideslip decomposition of a body-frame relative flow velocity.
struct FlowAngles {
  double speed = 0.0;  ///< |v_r|, m/s
  double alpha = 0.0;  ///< attack angle, rad, atan2(w_r, u_r)
  double beta = 0.0;   ///< sideslip angle, rad, asin(v_r_y / speed)
  bool degenerate = false;  ///< speed below kMinFlowSpeed; angles forced to 0
};

[[nodiscard]] inline FlowAngles flow_angles(const Vec3& v_r) {
  FlowAngles fa;
  fa.speed = v_r.norm();
  if (fa.speed < kMinFlowSpeed) {
    fa.degenerate = true;
    return fa;
  }
  fa.alpha = std::atan2(v_r.z(), v_r.x());
  fa.beta = std::asin(std::clamp(v_r.y() / fa.speed, -1.0, 1.0));
  return fa;
}

/// Rotation taking velocity-frame coordinates into body coordinates. The
/// velocity frame has x along the relative flow, so
/// v_r_body = body_from_velocity(alpha, beta) * [speed, 0, 0]^T.
[[nodiscard]] inline Mat3 body_from_velocity(double alpha, double beta) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  Mat3 r;
  // clang-format off
  r << ca * cb, -ca * sb, -sa,
            sb,       cb, 0.0,
       sa * cb, -sa * sb,  ca;
  // clang-format on
  return r;
}

[[nodiscard]] inline Mat3 body_from_velocity(const FlowAngles& fa) {
  return body_from_velocity(fa.alpha, fa.beta);
}

// ---------------------------------------------------------------------------
// NED <-> ENU world frames, kinetic <-> visual body frames
// ---------------------------------------------------------------------------

/// Rotation taking NED world coordinates into ENU world coordinates:
/// (n, e, d) -> (e, n, -d). Involutory (its own inverse).
[[nodiscard]] inline Mat3 enu_from_ned() {
  Mat3 r;
  // clang-format off
  r << 0.0, 1.0,  0.0,
       1.0, 0.0,  0.0,
       0.0, 0.0, -1.0;
  // clang-format on
  return r;
}

/// Rotation taking visual-body coordinates (x fwd, y port, z up) into
/// kinetic-body coordinates (x fwd, y stbd, z down): a pi roll. Involutory.
[[nodiscard]] inline Mat3 kinetic_from_visual() {
  Mat3 r;
  // clang-format off
  r << 1.0,  0.0,  0.0,
       0.0, -1.0,  0.0,
       0.0,  0.0, -1.0;
  // clang-format on
  return r;
}

struct EnuPose {
  Mat3 rotation;  ///< visual-body -> ENU
  Vec3 position;  ///< ENU, m
};

/// Converts a kinetic pose (body->NED rotation, NED position) to the display
/// convention (visual-body->ENU rotation, ENU position).
[[nodiscard]] inline EnuPose ned_enu_pose(const Mat3& r_ned_body,
                                          const Vec3& p_ned) {
  return EnuPose{enu_from_ned() * r_ned_body * kinetic_from_visual(),
                 enu_from_ned() * p_ned};
}

/// Inverse of ned_enu_pose.
[[nodiscard]] inline std::pair<Mat3, Vec3> enu_ned_pose(const Mat3& r_enu_vis,
                                                        const Vec3& p_enu) {
  return {enu_from_ned() * r_enu_vis * kinetic_from_visual(),
          enu_from_ned() * p_enu};
}

/// Kind tag for twist conversion. Linear and angular rates and accelerations
/// all transform by the same world rotation between two static frames; the
/// tag documents intent at call sites.
enum class TwistKind { kLinear, kAngular, kAcceleration };

/// Re-expresses a world vector given in NED components in ENU components.
/// Norm preserving.
[[nodiscard]] inline Vec3 ned_enu_twist(const Vec3& v_ned,
                                        TwistKind /*kind*/ = TwistKind::kLinear) {
  return enu_from_ned() * v_ned;
}

}  // namespace glidesim
