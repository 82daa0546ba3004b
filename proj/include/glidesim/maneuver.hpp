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

// Pre-mission manoeuvrability analysis. A glider turning at its rotation-rate
// ceiling while holding its slowest forward speed traces the least-turning
// circle of radius v_lower / r_upper. A waypoint tucked strictly inside that
// circle cannot be reached by a single turn-then-run leg; checking every leg
// before diving is much cheaper than discovering the problem at sea.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "glidesim/config.hpp"
#include "glidesim/errors.hpp"
#include "glidesim/frames.hpp"
#include "glidesim/guidance.hpp"

namespace glidesim {

/// Worst-case turning capability: initial heading, slowest forward speed,
/// fastest achievable yaw rate.
struct TurnSpec {
  double theta_i = 0.0;  ///< rad, heading at the start of the turn
  double v_lower = 0.0;  ///< m/s, lower bound on forward speed
  double r_upper = 0.0;  ///< rad/s, upper bound on rotation rate

  void validate() const {
    detail::require(v_lower > 0.0, "TurnSpec.v_lower must be positive");
    detail::require(r_upper > 0.0, "TurnSpec.r_upper must be positive");
    detail::require(std::isfinite(theta_i), "TurnSpec.theta_i must be finite");
  }

  [[nodiscard]] double min_turn_radius() const { return v_lower / r_upper; }
};

struct ReachabilityResult {
  bool reachable = false;
  std::optional<Vec3> intersection;  ///< present iff reachable
  double min_turn_radius = 0.0;      ///< v_lower / r_upper
  int direction = +1;                ///< chosen turn sense, +1 = clockwise
};

/// Horizontal position after turning for `duration` seconds at the rate
/// ceiling, starting from the origin with heading theta_i. sign selects the
/// turn sense (+1 increases heading). Near-zero total rotation falls back to
/// the straight-line series limit.
[[nodiscard]] inline Vec2 min_turn_position(const TurnSpec& spec,
                                            double duration, int sign) {
  spec.validate();
  detail::require(duration >= 0.0, "turn duration must be non-negative");
  detail::require(sign == 1 || sign == -1, "turn sign must be +1 or -1");
  const double r = static_cast<double>(sign) * spec.r_upper;
  const double v = spec.v_lower;
  const double th = spec.theta_i;
  if (std::abs(r * duration) < 1e-6) {
    return Vec2(v * duration * std::cos(th), v * duration * std::sin(th));
  }
  const double x = (v / r) * (std::sin(th + r * duration) - std::sin(th));
  const double y = -(v / r) * (std::cos(th + r * duration) - std::cos(th));
  return Vec2(x, y);
}

/// Shortest-turn sense from the current heading to the desired one: wrap the
/// error to (-pi, pi] and take its sign; a zero error turns positive by
/// convention.
[[nodiscard]] inline int turn_direction(double theta_c, double theta_d) {
  const double err = wrap_angle(theta_d - theta_c);
  return err >= 0.0 ? +1 : -1;
}

/// Single-turn reachability. The turning circle toward the target's side is
/// tangent to the heading line at p_init; the chord from p_init to the
/// target re-crosses that circle at segment parameter
///   s = 2 d . (c - p_init) / |d|^2,
/// which is <= 1 exactly when the target is not strictly inside the circle.
/// Exact tangency (s = 1) counts as reachable: the limiting path exists.
[[nodiscard]] inline ReachabilityResult reachability_check(
    const Vec3& p_init, const Vec3& p_target, const TurnSpec& spec) {
  spec.validate();
  const Eigen::Vector2d d = (p_target - p_init).head<2>();
  if (d.norm() < 1e-12) {
    throw ConfigError(
        "reachability_check: target coincides with the start position");
  }
  ReachabilityResult out;
  out.min_turn_radius = spec.min_turn_radius();

  const double bearing = std::atan2(d.y(), d.x());
  out.direction = turn_direction(spec.theta_i, bearing);
  const double center_angle =
      spec.theta_i + static_cast<double>(out.direction) * kPi / 2.0;
  const Eigen::Vector2d center =
      p_init.head<2>() +
      out.min_turn_radius *
          Eigen::Vector2d(std::cos(center_angle), std::sin(center_angle));

  const double s =
      2.0 * d.dot(center - p_init.head<2>()) / d.squaredNorm();
  out.reachable = s <= 1.0 + 1e-12;
  if (out.reachable) {
    const double clamped = std::clamp(s, 0.0, 1.0);
    const Eigen::Vector2d hit = p_init.head<2>() + clamped * d;
    out.intersection = Vec3(hit.x(), hit.y(), 0.0);
  }
  return out;
}

/// Per-leg verdict for the pre-mission check.
struct LegVerdict {
  std::size_t leg = 0;          ///< 1-based, matches operator reports
  bool reachable = false;
  double distance = 0.0;        ///< m, straight-line leg length
  double bearing = 0.0;         ///< rad, leg bearing in NED
  double min_turn_radius = 0.0; ///< m
};

/// Runs the reachability check along the whole waypoint chain, assuming the
/// glider starts at the NED origin with spec.theta_i and arrives at each
/// waypoint heading along the leg it just flew.
[[nodiscard]] inline std::vector<LegVerdict> check_mission_legs(
    const MissionTask& task, const TurnSpec& spec) {
  task.validate();
  spec.validate();
  std::vector<LegVerdict> verdicts;
  Vec3 from = Vec3::Zero();
  double heading = spec.theta_i;
  for (std::size_t i = 0; i < task.waypoints.size(); ++i) {
    const Waypoint& wp = task.waypoints[i];
    const Vec3 to = geodetic_to_ned(wp.lat, wp.lon, task.origin);
    TurnSpec leg_spec = spec;
    leg_spec.theta_i = heading;
    const ReachabilityResult r = reachability_check(from, to, leg_spec);

    LegVerdict v;
    v.leg = i + 1;
    v.reachable = r.reachable;
    v.distance = (to - from).head<2>().norm();
    v.bearing = std::atan2(to.y() - from.y(), to.x() - from.x());
    v.min_turn_radius = r.min_turn_radius;
    verdicts.push_back(v);

    heading = v.bearing;  // arrival heading for the next leg
    from = to;
  }
  return verdicts;
}

}  // namespace glidesim
