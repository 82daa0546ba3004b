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

// Time stepping and mission orchestration. A fixed-step 4th-order integrator
// advances the rigid-body state; work cycles alternate descend and ascend
// gain sets around the sawtooth; the mission runner closes the outer loop by
// feeding each surfacing fix through the guidance recursion. Everything here
// is deterministic: fixed step, no adaptive control flow, no randomness.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "glidesim/config.hpp"
#include "glidesim/dynamics.hpp"
#include "glidesim/errors.hpp"
#include "glidesim/frames.hpp"
#include "glidesim/guidance.hpp"
#include "glidesim/lqr.hpp"
#include "glidesim/maneuver.hpp"

namespace glidesim {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// When within a cycle the ballast command reverses. The default pumps out
/// at the moment the target depth is crossed; the alternative freezes the
/// pump until the nose has actually pitched up through level.
enum class BallastSwitchMode { kAtDepth, kAfterPitchFlip };

struct SimConfig {
  double dt = 0.05;                        ///< s, fixed integrator step
  double max_sim_time = 20000.0;           ///< s, total simulated-time budget
  double surface_depth_threshold = 0.5;    ///< m, "surfaced" below this depth
  int control_decimation = 10;             ///< control tick every N steps
  double depth_overshoot_tolerance = 0.1;  ///< fraction of target depth
  BallastSwitchMode ballast_switch = BallastSwitchMode::kAtDepth;
  int max_cycles = 0;  ///< stop a mission after this many cycles; 0 = no cap

  void validate() const {
    detail::require(dt > 0.0, "SimConfig.dt must be positive");
    detail::require(max_sim_time > 0.0,
                    "SimConfig.max_sim_time must be positive");
    detail::require(surface_depth_threshold >= 0.0,
                    "SimConfig.surface_depth_threshold must be non-negative");
    detail::require(control_decimation >= 1,
                    "SimConfig.control_decimation must be at least 1");
    detail::require(depth_overshoot_tolerance >= 0.0,
                    "SimConfig.depth_overshoot_tolerance must be "
                    "non-negative");
    detail::require(max_cycles >= 0,
                    "SimConfig.max_cycles must be non-negative");
  }
};

// ---------------------------------------------------------------------------
// Currents
// ---------------------------------------------------------------------------

/// One depth-stratified current layer. A zero period means a steady
/// current; otherwise the velocity is scaled by cos(2 pi t / period + phase).
struct CurrentLayer {
  double depth_min = 0.0;        ///< m
  double depth_max = 0.0;        ///< m
  Vec3 velocity = Vec3::Zero();  ///< m/s, NED
  double period = 0.0;           ///< s, 0 = constant in time
  double phase = 0.0;            ///< rad
};

struct CurrentField {
  std::vector<CurrentLayer> layers;

  void validate() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const CurrentLayer& a = layers[i];
      const std::string tag = "current layer " + std::to_string(i) + ": ";
      detail::require(a.depth_min < a.depth_max,
                      tag + "depth_min must be below depth_max");
      detail::require(a.velocity.allFinite(), tag + "velocity must be finite");
      detail::require(a.period >= 0.0, tag + "period must be non-negative");
      for (std::size_t j = i + 1; j < layers.size(); ++j) {
        const CurrentLayer& b = layers[j];
        detail::require(a.depth_max <= b.depth_min ||
                            b.depth_max <= a.depth_min,
                        "current layers " + std::to_string(i) + " and " +
                            std::to_string(j) + " overlap in depth");
      }
    }
  }
};

/// Water velocity at the given NED position and time: the velocity of the
/// layer whose half-open depth range [depth_min, depth_max) contains p.z,
/// scaled by its cosine factor when periodic; zero outside all layers.
/// Rotational flow is always zero.
[[nodiscard]] inline CurrentSample current_at(const CurrentField& field,
                                              const Vec3& p, double t) {
  CurrentSample out;
  const double z = p.z();
  for (const CurrentLayer& layer : field.layers) {
    if (z >= layer.depth_min && z < layer.depth_max) {
      double scale = 1.0;
      if (layer.period > 0.0) {
        scale = std::cos(2.0 * kPi * t / layer.period + layer.phase);
      }
      out.v_f = scale * layer.velocity;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Trajectory log
// ---------------------------------------------------------------------------

enum class MissionPhase { kSurfaced, kDescend, kAscend };

[[nodiscard]] inline const char* to_string(MissionPhase phase) {
  switch (phase) {
    case MissionPhase::kSurfaced: return "surfaced";
    case MissionPhase::kDescend: return "descend";
    case MissionPhase::kAscend: return "ascend";
  }
  return "unknown";
}

struct WorkCycleState {
  MissionPhase phase = MissionPhase::kSurfaced;
  double target_depth = 0.0;  ///< m
  int cycle_index = 0;
};

struct LogRecord {
  double t = 0.0;
  Vec3 p = Vec3::Zero();
  Quat q = Quat::Identity();
  Vec3 v = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
  double zeta = 0.0;
  double r_p1 = 0.0;
  double m_b = 0.0;
  MissionPhase phase = MissionPhase::kSurfaced;
};

struct SimEvent {
  double t = 0.0;
  std::string type;    ///< surfacing | depth-reached | waypoint-switch |
                       ///< gain-recompute | clamping | mission-complete
  std::string detail;
};

/// Append-only run history: one record per integrator step plus a sparse
/// event stream. Timestamps must strictly increase.
struct TrajectoryLog {
  std::vector<LogRecord> records;
  std::vector<SimEvent> events;

  void append(const LogRecord& rec) {
    if (!records.empty() && !(rec.t > records.back().t)) {
      throw NumericalError(
          "trajectory log timestamps must strictly increase (got " +
          std::to_string(rec.t) + " after " +
          std::to_string(records.back().t) + ")");
    }
    records.push_back(rec);
  }

  void note(double t, std::string type, std::string detail) {
    events.push_back({t, std::move(type), std::move(detail)});
  }
};

// ---------------------------------------------------------------------------
// Integrator
// ---------------------------------------------------------------------------

namespace detail {

using RawState = Eigen::Matrix<double, 13, 1>;

inline RawState pack_state(const GliderState& s) {
  RawState y;
  y.segment<3>(0) = s.v;
  y.segment<3>(3) = s.omega;
  y.segment<4>(6) << s.q.w(), s.q.x(), s.q.y(), s.q.z();
  y.segment<3>(10) = s.p;
  return y;
}

inline GliderState unpack_state(const RawState& y) {
  GliderState s;
  s.v = y.segment<3>(0);
  s.omega = y.segment<3>(3);
  s.q = Quat(y[6], y[7], y[8], y[9]).normalized();
  s.p = y.segment<3>(10);
  return s;
}

inline RawState state_derivative(const RawState& y, const ActuatorState& a,
                                 const CurrentField& field,
                                 const GliderConfig& cfg, double t) {
  const GliderState s = unpack_state(y);  // renormalizes the stage quaternion
  const auto [v_dot, omega_dot] =
      dynamics_rhs(s, a, current_at(field, s.p, t), cfg);
  const Quat q_dot = quat_derivative(s.q, s.omega);
  RawState d;
  d.segment<3>(0) = v_dot;
  d.segment<3>(3) = omega_dot;
  d.segment<4>(6) << q_dot.w(), q_dot.x(), q_dot.y(), q_dot.z();
  d.segment<3>(10) = s.rotation() * s.v;
  return d;
}

/// Actuator positions advanced to an intermediate stage time, rates kept.
inline ActuatorState actuators_at(const ActuatorState& start,
                                  const ActuatorState& stepped, double tau) {
  ActuatorState a = stepped;
  a.zeta = start.zeta + stepped.zeta_rate * tau;
  a.r_p1 = start.r_p1 + stepped.r_p1_rate * tau;
  a.m_b = start.m_b + stepped.m_b_rate * tau;
  return a;
}

}  // namespace detail

/// One fixed step of classic 4-stage integration of the rigid-body ODE
/// (accelerations from the momentum balance, quaternion rate, NED
/// kinematics). The actuators advance once per step via actuator_step; the
/// stage evaluations see linearly interpolated actuator positions and the
/// realized rates, so a slewing battery or pump stays consistent with the
/// Coriolis terms that depend on its velocity. Stage quaternions are
/// renormalized before each derivative evaluation and again on exit.
[[nodiscard]] inline GliderState integrate_step(const GliderState& state,
                                                ActuatorState& act,
                                                const CurrentField& field,
                                                const GliderConfig& cfg,
                                                double t, double dt) {
  if (!(dt > 0.0)) {
    throw ConfigError("integrate_step: dt must be positive");
  }
  const ActuatorState stepped = actuator_step(act, dt, cfg);
  const ActuatorState a0 = detail::actuators_at(act, stepped, 0.0);
  const ActuatorState a_half = detail::actuators_at(act, stepped, 0.5 * dt);
  const ActuatorState a1 = detail::actuators_at(act, stepped, dt);

  const detail::RawState y = detail::pack_state(state);
  const detail::RawState k1 =
      detail::state_derivative(y, a0, field, cfg, t);
  const detail::RawState k2 = detail::state_derivative(
      y + 0.5 * dt * k1, a_half, field, cfg, t + 0.5 * dt);
  const detail::RawState k3 = detail::state_derivative(
      y + 0.5 * dt * k2, a_half, field, cfg, t + 0.5 * dt);
  const detail::RawState k4 =
      detail::state_derivative(y + dt * k3, a1, field, cfg, t + dt);
  const detail::RawState next =
      y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

  if (!next.allFinite()) {
    std::ostringstream os;
    os << "integrate_step: non-finite state after step at t=" << t
       << " s; last good position NED=(" << state.p.x() << ", "
       << state.p.y() << ", " << state.p.z() << "), |v|=" << state.v.norm()
       << ", m_b=" << act.m_b;
    throw NumericalError(os.str());
  }
  act = stepped;
  return detail::unpack_state(next);
}

// ---------------------------------------------------------------------------
// Work cycle
// ---------------------------------------------------------------------------

struct CycleOutcome {
  int cycle_index = 0;
  double start_time = 0.0;  ///< s
  double end_time = 0.0;    ///< s
  double max_depth = 0.0;   ///< m
  bool reached_target_depth = false;
  bool overshoot_within_tolerance = true;
};

namespace detail {

inline double depth_rate(const GliderState& s) {
  return (s.rotation() * s.v).z();
}

inline std::string describe_plan(const CyclePlan& plan) {
  std::ostringstream os;
  os << "pitch " << plan.pitch_descend << "/" << plan.pitch_ascend
     << " rad, heading " << plan.heading << " rad, speed " << plan.speed
     << " m/s";
  return os.str();
}

}  // namespace detail

/// One descend/ascend sawtooth leg. Gains are computed exactly once, before
/// the dive; the descend set steers until the target depth is crossed, the
/// ascend set until the glider is back above the surface threshold and
/// rising. Every integrator step appends one log record; phase changes,
/// the single gain computation, and command saturation are logged as
/// events. Exceeding the simulated-time budget abandons the cycle with the
/// partial log intact.
inline CycleOutcome run_work_cycle(GliderState& state, ActuatorState& act,
                                   const CyclePlan& plan, double target_depth,
                                   const GliderConfig& cfg,
                                   const SimConfig& sim,
                                   const CurrentField& field,
                                   TrajectoryLog& log, double& t,
                                   int cycle_index = 0) {
  sim.validate();
  field.validate();
  if (!(target_depth > 0.0)) {
    throw ConfigError("run_work_cycle: target depth must be positive");
  }
  if (state.p.z() >= sim.surface_depth_threshold) {
    throw ConfigError(
        "run_work_cycle: the glider must start at the surface (depth " +
        std::to_string(state.p.z()) + " m)");
  }

  CycleOutcome outcome;
  outcome.cycle_index = cycle_index;
  outcome.start_time = t;

  const GainSet gains = compute_gain_set(cfg, plan);
  log.note(t, "gain-recompute",
           "cycle " + std::to_string(cycle_index) + ": " +
               detail::describe_plan(plan));

  auto record = [&](MissionPhase phase) {
    LogRecord rec;
    rec.t = t;
    rec.p = state.p;
    rec.q = state.q;
    rec.v = state.v;
    rec.omega = state.omega;
    rec.zeta = act.zeta;
    rec.r_p1 = act.r_p1;
    rec.m_b = act.m_b;
    rec.phase = phase;
    log.append(rec);
  };
  if (log.records.empty()) {
    record(MissionPhase::kSurfaced);  // pre-dive snapshot at cycle start
  }

  MissionPhase phase = MissionPhase::kDescend;
  bool ballast_released = sim.ballast_switch == BallastSwitchMode::kAtDepth;
  bool was_saturated = false;
  double hold_m_b_cmd = 0.0;

  for (long step = 0;; ++step) {
    if (t >= sim.max_sim_time) {
      throw MissionError(
          "work cycle " + std::to_string(cycle_index) +
          " exceeded the simulated-time budget (" +
          std::to_string(sim.max_sim_time) + " s) in phase " +
          to_string(phase) + " at depth " + std::to_string(state.p.z()) +
          " m");
    }

    if (step % sim.control_decimation == 0) {
      const GlidePhase gp = phase == MissionPhase::kDescend
                                ? GlidePhase::kDescend
                                : GlidePhase::kAscend;
      // Near the surface the glider is barely moving; regulating forward
      // speed there only makes the pump fight the transient.
      const bool detach =
          state.p.z() < 2.0 * sim.surface_depth_threshold;
      ControlCommand cmd = feedback_command(state, gains, gp, detach, cfg);
      if (phase == MissionPhase::kAscend && !ballast_released) {
        const double pitch = euler_from_quat(state.q).y();
        if (pitch >= 0.0) {
          ballast_released = true;  // nose is up: let the pump reverse
        } else {
          cmd.m_b = hold_m_b_cmd;
        }
      }
      act.zeta_cmd = cmd.zeta;
      act.r_p1_cmd = cmd.r_p1;
      act.m_b_cmd = cmd.m_b;
      if (cmd.saturated && !was_saturated) {
        log.note(t, "clamping",
                 "command clamped to actuator travel limits in phase " +
                     std::string(to_string(phase)));
      }
      was_saturated = cmd.saturated;
    }

    state = integrate_step(state, act, field, cfg, t, sim.dt);
    t += sim.dt;
    outcome.max_depth = std::max(outcome.max_depth, state.p.z());
    record(phase);

    if (phase == MissionPhase::kDescend && state.p.z() >= target_depth) {
      phase = MissionPhase::kAscend;
      outcome.reached_target_depth = true;
      hold_m_b_cmd = act.m_b;  // frozen until the pitch flips, if configured
      log.note(t, "depth-reached",
               "target " + std::to_string(target_depth) + " m, depth " +
                   std::to_string(state.p.z()) + " m");
    } else if (phase == MissionPhase::kAscend &&
               state.p.z() < sim.surface_depth_threshold &&
               detail::depth_rate(state) < 0.0) {
      log.records.back().phase = MissionPhase::kSurfaced;
      log.note(t, "surfacing",
               "cycle " + std::to_string(cycle_index) + " complete at depth " +
                   std::to_string(state.p.z()) + " m");
      break;
    }
  }

  outcome.end_time = t;
  outcome.overshoot_within_tolerance =
      outcome.max_depth <=
      target_depth * (1.0 + sim.depth_overshoot_tolerance);
  return outcome;
}

// ---------------------------------------------------------------------------
// Mission runner
// ---------------------------------------------------------------------------

struct MissionResult {
  TrajectoryLog log;
  bool complete = false;  ///< every waypoint visited
  bool cycle_budget_exhausted = false;  ///< stopped by SimConfig.max_cycles
  int cycles = 0;
  std::size_t waypoints_reached = 0;
  double final_position_error = 0.0;  ///< m, horizontal, vs final waypoint
  double elapsed = 0.0;               ///< s of simulated time
};

namespace detail {

/// Best-effort manoeuvrability note for mission failures: compares the leg
/// to the active waypoint against the least-turning circle implied by the
/// current plan's heading authority. Never throws.
inline std::string manoeuvrability_diagnosis(const MissionTask& task,
                                             const GuidanceState& gs,
                                             const GliderState& state,
                                             const CyclePlan& plan,
                                             const GliderConfig& cfg) {
  try {
    if (gs.active_waypoint >= task.waypoints.size()) {
      return "all waypoints already consumed";
    }
    const Waypoint& wp = task.waypoints[gs.active_waypoint];
    const Vec3 target = geodetic_to_ned(wp.lat, wp.lon, task.origin);
    Vec3 here = state.p;
    here.z() = 0.0;

    const Equilibrium eq =
        find_equilibrium(cfg, plan.pitch_descend, plan.speed,
                         GlidePhase::kDescend);
    const HorizontalModel hm = linearize_horizontal(cfg, eq);
    const double r_upper =
        std::abs(hm.B(0) * cfg.actuators.zeta_range / hm.A(0, 0));
    TurnSpec spec;
    spec.theta_i = euler_from_quat(state.q).z();
    spec.v_lower = eq.speed * std::cos(eq.pitch);
    spec.r_upper = r_upper;
    const ReachabilityResult r = reachability_check(here, target, spec);

    std::ostringstream os;
    os << "active waypoint " << gs.active_waypoint << " at "
       << (target - here).head<2>().norm() << " m: "
       << (r.reachable ? "single-turn reachable"
                       : "inside the minimum turning circle")
       << " (least turn radius " << r.min_turn_radius << " m)";
    return os.str();
  } catch (const std::exception& e) {
    return std::string("diagnosis unavailable: ") + e.what();
  }
}

}  // namespace detail

/// Full waypoint mission: at every surfacing, feed the fix through the
/// guidance recursion, rebuild the gain schedule for the commanded plan, and
/// fly one work cycle toward the active waypoint. Terminates when the
/// guidance reports completion; exhausting the simulated-time budget raises
/// a mission error annotated with a manoeuvrability diagnosis.
[[nodiscard]] inline MissionResult run_mission(const MissionTask& task,
                                               const GliderConfig& cfg,
                                               const SimConfig& sim,
                                               const CurrentField& field = {}) {
  cfg.validate();
  task.validate();
  sim.validate();
  field.validate();

  MissionResult res;
  if (task.waypoints.empty()) {
    res.complete = true;
    return res;
  }

  GliderState state;  // deployed at the NED origin, level, pointing north
  ActuatorState act;
  act.m_b = cfg.neutral_ballast();  // launched neutrally ballasted
  act.m_b_cmd = act.m_b;

  GuidanceState gs;
  double t = 0.0;
  CyclePlan plan;

  for (int cycle = 1;; ++cycle) {
    const GeoFix fix =
        ned_to_geodetic(Vec3(state.p.x(), state.p.y(), 0.0), task.origin);
    const GuidanceOutput out = surface_update(fix, task, gs, cfg);
    if (out.switched_waypoint) {
      ++res.waypoints_reached;
      res.log.note(t, "waypoint-switch",
                   "waypoint " + std::to_string(out.active_waypoint - 1) +
                       " reached (" +
                       (out.adaptive_switch ? "adaptive pass-by"
                                            : "direct hit") +
                       ")");
    }
    if (out.mission_complete) {
      res.log.note(t, "mission-complete",
                   std::to_string(res.waypoints_reached) +
                       " waypoints visited in " +
                       std::to_string(res.cycles) + " cycles");
      res.complete = true;
      break;
    }

    if (sim.max_cycles > 0 && cycle > sim.max_cycles) {
      res.log.note(t, "cycle-budget",
                   std::to_string(sim.max_cycles) +
                       " requested work cycles flown; stopping with " +
                       std::to_string(res.waypoints_reached) +
                       " waypoints visited");
      res.cycle_budget_exhausted = true;
      break;
    }

    plan.pitch_descend = out.desired_pitch_descend;
    plan.pitch_ascend = out.desired_pitch_ascend;
    plan.heading = out.desired_heading;
    plan.speed = out.desired_speed;
    const double target_depth =
        task.waypoints[out.active_waypoint].target_depth;

    try {
      const CycleOutcome cyc =
          run_work_cycle(state, act, plan, target_depth, cfg, sim, field,
                         res.log, t, cycle);
      (void)cyc;
    } catch (const MissionError& e) {
      throw MissionError(
          std::string(e.what()) + "; " +
          detail::manoeuvrability_diagnosis(task, gs, state, plan, cfg));
    }
    res.cycles = cycle;
  }

  res.elapsed = t;
  if (!task.waypoints.empty()) {
    const Waypoint& last = task.waypoints.back();
    const Vec3 target = geodetic_to_ned(last.lat, last.lon, task.origin);
    res.final_position_error = (target - state.p).head<2>().norm();
  }
  return res;
}

}  // namespace glidesim
