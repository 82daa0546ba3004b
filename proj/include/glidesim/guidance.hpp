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

// Recursive surface-fix guidance. A buoyancy glider has no underwater
// positioning, so course and glide-slope commands are recomputed only at
// surfacings: convert the GNSS fix to local NED, run the waypoint switch
// (direct circle of acceptance or the adaptive pass-by variant), then point
// the heading at the active waypoint and pick the pitch pair that covers the
// remaining distance in the requested number of dive loops.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glidesim/config.hpp"
#include "glidesim/errors.hpp"
#include "glidesim/frames.hpp"

namespace glidesim {

// WGS84 ellipsoid.
inline constexpr double kWgs84SemiMajor = 6378137.0;        // m
inline constexpr double kWgs84Flattening = 1.0 / 298.257223563;
inline constexpr double kDegToRad = kPi / 180.0;

/// Datum of the mission's local NED tangent plane, degrees.
struct GeoOrigin {
  double lat0 = 0.0;
  double lon0 = 0.0;
};

/// One mission waypoint: horizontal fix plus the dive depth and forward
/// speed to use while travelling toward it.
struct Waypoint {
  double lat = 0.0;           ///< deg
  double lon = 0.0;           ///< deg
  double target_depth = 0.0;  ///< m, > 0
  double desired_speed = 0.0; ///< m/s, > 0
};

enum class PitchMode { kRecursive, kFixed };

struct MissionTask {
  GeoOrigin origin;
  std::vector<Waypoint> waypoints;
  double acceptance_radius = 0.0;  ///< R, m
  int min_loops = 1;               ///< dive loops budgeted per leg
  PitchMode pitch_mode = PitchMode::kRecursive;
  double fixed_pitch_descend = -0.35;  ///< rad, used in Fixed mode
  double fixed_pitch_ascend = 0.35;    ///< rad, used in Fixed mode

  void validate() const {
    detail::require(acceptance_radius > 0.0,
                    "acceptance_radius must be positive");
    detail::require(min_loops >= 1, "min_loops must be at least 1");
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
      const Waypoint& w = waypoints[i];
      const std::string tag = "waypoint " + std::to_string(i) + ": ";
      detail::require(std::abs(w.lat) <= 90.0, tag + "latitude out of range");
      detail::require(std::abs(w.lon) <= 180.0,
                      tag + "longitude out of range");
      detail::require(w.target_depth > 0.0,
                      tag + "target_depth must be positive");
      detail::require(w.desired_speed > 0.0,
                      tag + "desired_speed must be positive");
    }
    detail::require(std::abs(origin.lat0) <= 90.0,
                    "origin latitude out of range");
    detail::require(std::abs(origin.lon0) <= 180.0,
                    "origin longitude out of range");
    if (pitch_mode == PitchMode::kFixed) {
      detail::require(fixed_pitch_descend < 0.0,
                      "fixed_pitch_descend must be negative");
      detail::require(fixed_pitch_ascend > 0.0,
                      "fixed_pitch_ascend must be positive");
    }
  }
};

/// A GNSS surface fix, degrees.
struct GeoFix {
  double lat = 0.0;
  double lon = 0.0;
};

/// What the guidance hands the gain scheduler at each surfacing.
struct GuidanceOutput {
  double desired_heading = 0.0;        ///< rad, (-pi, pi]
  double desired_pitch_descend = 0.0;  ///< rad, negative
  double desired_pitch_ascend = 0.0;   ///< rad, positive
  double desired_speed = 0.0;          ///< m/s
  std::size_t active_waypoint = 0;
  bool mission_complete = false;
  bool switched_waypoint = false;   ///< the fix advanced the cursor
  bool adaptive_switch = false;     ///< ... via the pass-by test
  bool degenerate_heading = false;  ///< fix on top of waypoint; heading held
  bool used_dead_reckoning = false; ///< no fix; last position reused
};

/// Geometry of the work cycle most recently flown, used by the adaptive
/// circle of acceptance: dive depth D and commanded descend pitch magnitude.
struct PreviousCycle {
  double depth = 0.0;  ///< m
  double pitch = 0.0;  ///< rad, magnitude of the descend pitch
};

/// Mutable mission cursor owned by the mission runner and touched only
/// between work cycles.
struct GuidanceState {
  std::size_t active_waypoint = 0;
  double last_heading = 0.0;
  Vec3 last_position = Vec3::Zero();      ///< latest NED position (fix or DR)
  bool has_previous_fix = false;
  Vec3 previous_position = Vec3::Zero();  ///< NED position one surfacing ago
  PreviousCycle previous_cycle;
};

// ---------------------------------------------------------------------------
// Geodesy
// ---------------------------------------------------------------------------

namespace detail {

struct Ecef {
  double x, y, z;
};

inline Ecef geodetic_to_ecef(double lat_rad, double lon_rad) {
  const double e2 = kWgs84Flattening * (2.0 - kWgs84Flattening);
  const double sin_lat = std::sin(lat_rad);
  const double n = kWgs84SemiMajor / std::sqrt(1.0 - e2 * sin_lat * sin_lat);
  return {n * std::cos(lat_rad) * std::cos(lon_rad),
          n * std::cos(lat_rad) * std::sin(lon_rad),
          n * (1.0 - e2) * sin_lat};
}

}  // namespace detail

/// WGS84 geodetic -> ECEF -> local tangent-plane NED about the origin, in
/// meters. The guidance plane is horizontal: the returned down component is
/// zero by construction.
[[nodiscard]] inline Vec3 geodetic_to_ned(double lat_deg, double lon_deg,
                                          const GeoOrigin& origin) {
  const double lat = lat_deg * kDegToRad;
  const double lon = lon_deg * kDegToRad;
  const double lat0 = origin.lat0 * kDegToRad;
  const double lon0 = origin.lon0 * kDegToRad;
  const detail::Ecef p = detail::geodetic_to_ecef(lat, lon);
  const detail::Ecef p0 = detail::geodetic_to_ecef(lat0, lon0);
  const double dx = p.x - p0.x, dy = p.y - p0.y, dz = p.z - p0.z;

  const double sl = std::sin(lat0), cl = std::cos(lat0);
  const double so = std::sin(lon0), co = std::cos(lon0);
  const double north = -sl * co * dx - sl * so * dy + cl * dz;
  const double east = -so * dx + co * dy;
  return Vec3(north, east, 0.0);
}

/// Inverse of geodetic_to_ned by Newton iteration on the ellipsoid, to
/// better than 1e-9 m for offsets up to tens of kilometers.
[[nodiscard]] inline GeoFix ned_to_geodetic(const Vec3& ned,
                                            const GeoOrigin& origin) {
  const double e2 = kWgs84Flattening * (2.0 - kWgs84Flattening);
  double lat = origin.lat0 * kDegToRad;
  double lon = origin.lon0 * kDegToRad;
  for (int iter = 0; iter < 25; ++iter) {
    const Vec3 have =
        geodetic_to_ned(lat / kDegToRad, lon / kDegToRad, origin);
    const double rn = ned.x() - have.x();
    const double re = ned.y() - have.y();
    if (std::hypot(rn, re) < 1e-10) break;
    const double s = std::sin(lat);
    const double w2 = 1.0 - e2 * s * s;
    const double meridian = kWgs84SemiMajor * (1.0 - e2) / std::pow(w2, 1.5);
    const double normal = kWgs84SemiMajor / std::sqrt(w2);
    lat += rn / meridian;
    lon += re / (normal * std::cos(lat));
  }
  return {lat / kDegToRad, lon / kDegToRad};
}

// ---------------------------------------------------------------------------
// Steering laws
// ---------------------------------------------------------------------------

struct HeadingCommand {
  double heading = 0.0;
  bool degenerate = false;
};

/// Line-of-sight heading from the current position toward the waypoint,
/// four-quadrant, in (-pi, pi]. Within 1 m of the waypoint the bearing is
/// numerically meaningless: the fallback (last commanded heading) is
/// returned and flagged.
[[nodiscard]] inline HeadingCommand desired_heading(const Vec3& p_t,
                                                    const Vec3& p_k,
                                                    double fallback) {
  const double dn = p_k.x() - p_t.x();
  const double de = p_k.y() - p_t.y();
  if (std::hypot(dn, de) < 1.0) {
    return {fallback, true};
  }
  return {wrap_angle(std::atan2(de, dn)), false};
}

struct PitchPair {
  double descend = 0.0;  ///< rad, negative
  double ascend = 0.0;   ///< rad, positive
};

/// Glide-slope identity: to cover the per-loop horizontal stride
/// L_d = L_t / min_loops while diving to depth D and back, command the pitch
/// whose glide slope travels exactly that far: tan|phi| = 2 D / L_d
/// (equivalently, a work cycle at pitch phi covers 2 D / tan|phi| of
/// ground). Far targets glide out near the floor pitch; the command steepens
/// as the remaining distance shrinks and finally rides the actuator limits,
/// so each surfacing halves the miss instead of overshooting. Each side
/// clamps to its own limit (the commandable envelope is asymmetric), and the
/// floor keeps long transits from flattening into a stall.
[[nodiscard]] inline PitchPair desired_pitch(double distance, double depth,
                                             int min_loops,
                                             const PitchLimits& limits,
                                             double min_glide_pitch) {
  if (!(depth > 0.0)) {
    throw ConfigError("desired_pitch: depth must be positive");
  }
  if (min_loops < 1) {
    throw ConfigError("desired_pitch: min_loops must be at least 1");
  }
  const double stride = distance / static_cast<double>(min_loops);
  // atan2 handles the terminal stride -> 0 case: the command saturates at
  // the vertical and the clamps below bring it back into the envelope.
  const double phi = std::atan2(2.0 * depth, stride);
  const double floored = std::max(phi, min_glide_pitch);
  PitchPair out;
  out.descend = -std::min(floored, -limits.min);
  out.ascend = std::min(floored, limits.max);
  return out;
}

// ---------------------------------------------------------------------------
// Waypoint switching
// ---------------------------------------------------------------------------

struct CoaResult {
  double radius = 0.0;     ///< R_a, m
  bool applicable = false; ///< cos(theta) >= 0: the waypoint was passed
  bool simplified = false; ///< near-collinear form used
};

/// Adaptive circle of acceptance for the pass-by case. With p_d = p_t - p_k
/// and the previous-surfacing leg p_t - p_prev:
///   cos(theta) = p_d . (p_t - p_prev) / (|p_d| |p_t - p_prev|),
/// applicable when cos(theta) >= 0 (target now behind). Near collinearity
/// (|cos(theta) - 1| < 1e-3) the preferred simplified form R_a = L - |p_d|
/// is used, with L = 2 D / tan(phi_d) the horizontal stride of the previous
/// cycle; otherwise R_a = sqrt(|p_d|^2 - |p_d cos(theta)|^2).
[[nodiscard]] inline CoaResult adaptive_coa(const Vec3& p_t,
                                            const Vec3& p_prev,
                                            const Vec3& p_k,
                                            const PreviousCycle& prev) {
  const Eigen::Vector2d leg = (p_t - p_prev).head<2>();
  const Eigen::Vector2d p_d = (p_t - p_k).head<2>();
  if (leg.norm() < 1e-9) {
    return {0.0, false, false};
  }
  if (p_d.norm() < 1e-12) {
    return {0.0, true, false};  // standing on the waypoint
  }
  const double cos_theta = p_d.dot(leg) / (p_d.norm() * leg.norm());
  if (cos_theta < 0.0) {
    return {0.0, false, false};
  }
  if (std::abs(cos_theta - 1.0) < 1e-3) {
    if (!(prev.depth > 0.0) || !(std::abs(prev.pitch) > 1e-9)) {
      return {0.0, false, false};  // no previous cycle geometry to lean on
    }
    const double stride = 2.0 * prev.depth / std::tan(std::abs(prev.pitch));
    return {std::max(0.0, stride - p_d.norm()), true, true};
  }
  const double sin2 = std::max(0.0, 1.0 - cos_theta * cos_theta);
  return {p_d.norm() * std::sqrt(sin2), true, false};
}

struct SwitchResult {
  std::size_t index = 0;         ///< active waypoint after the check
  bool switched = false;
  bool adaptive = false;         ///< the pass-by test made the switch
  bool mission_complete = false; ///< the final waypoint was consumed
};

/// Advances the waypoint cursor when the fix is inside the constant circle
/// of acceptance, or when the applicable adaptive radius fits inside it
/// (R_a^2 <= R^2). One switch at most per surfacing.
[[nodiscard]] inline SwitchResult check_waypoint_switch(
    const Vec3& p_t, const Vec3& p_prev, bool has_prev,
    const MissionTask& task, std::size_t active,
    const PreviousCycle& prev_cycle) {
  SwitchResult out;
  out.index = active;
  if (active >= task.waypoints.size()) {
    out.mission_complete = true;
    return out;
  }
  const Waypoint& wp = task.waypoints[active];
  const Vec3 p_k = geodetic_to_ned(wp.lat, wp.lon, task.origin);
  const double r2 =
      task.acceptance_radius * task.acceptance_radius;

  bool hit = (p_t - p_k).head<2>().squaredNorm() <= r2;
  if (!hit && has_prev) {
    const CoaResult coa = adaptive_coa(p_t, p_prev, p_k, prev_cycle);
    if (coa.applicable && coa.radius * coa.radius <= r2) {
      hit = true;
      out.adaptive = true;
    }
  }
  if (hit) {
    out.switched = true;
    out.index = active + 1;
    out.mission_complete = out.index >= task.waypoints.size();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Surface recursion
// ---------------------------------------------------------------------------

/// One iteration of the surface-fix recursion: absorb the fix (or fall back
/// to dead reckoning), run the waypoint switch, then aim heading, pitch
/// pair, and speed at the active waypoint. Mutates only the guidance cursor.
[[nodiscard]] inline GuidanceOutput surface_update(
    const std::optional<GeoFix>& fix, const MissionTask& task,
    GuidanceState& st, const GliderConfig& cfg) {
  GuidanceOutput out;
  Vec3 p = st.last_position;
  if (fix.has_value()) {
    p = geodetic_to_ned(fix->lat, fix->lon, task.origin);
  } else {
    out.used_dead_reckoning = true;
  }

  const SwitchResult sw =
      check_waypoint_switch(p, st.previous_position, st.has_previous_fix,
                            task, st.active_waypoint, st.previous_cycle);
  st.active_waypoint = sw.index;
  out.active_waypoint = sw.index;
  out.switched_waypoint = sw.switched;
  out.adaptive_switch = sw.adaptive;

  st.previous_position = p;
  st.last_position = p;
  st.has_previous_fix = true;

  if (sw.mission_complete) {
    out.mission_complete = true;
    out.desired_heading = st.last_heading;
    out.desired_pitch_descend = -cfg.control.min_glide_pitch;
    out.desired_pitch_ascend = cfg.control.min_glide_pitch;
    out.desired_speed = 0.0;
    return out;
  }

  const Waypoint& wp = task.waypoints[st.active_waypoint];
  const Vec3 p_k = geodetic_to_ned(wp.lat, wp.lon, task.origin);
  const HeadingCommand hc = desired_heading(p, p_k, st.last_heading);
  out.desired_heading = hc.heading;
  out.degenerate_heading = hc.degenerate;
  st.last_heading = hc.heading;

  if (task.pitch_mode == PitchMode::kFixed) {
    // Fixed mode bypasses the distance recursion but stays inside the
    // commandable envelope.
    out.desired_pitch_descend =
        std::clamp(task.fixed_pitch_descend, cfg.pitch_limits.min, -1e-3);
    out.desired_pitch_ascend =
        std::clamp(task.fixed_pitch_ascend, 1e-3, cfg.pitch_limits.max);
  } else {
    const double distance = (p_k - p).head<2>().norm();
    const PitchPair pp =
        desired_pitch(distance, wp.target_depth, task.min_loops,
                      cfg.pitch_limits, cfg.control.min_glide_pitch);
    out.desired_pitch_descend = pp.descend;
    out.desired_pitch_ascend = pp.ascend;
  }
  out.desired_speed = wp.desired_speed;

  st.previous_cycle.depth = wp.target_depth;
  st.previous_cycle.pitch = std::abs(out.desired_pitch_descend);
  return out;
}

}  // namespace glidesim
