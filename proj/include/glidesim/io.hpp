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

// Document I/O and the mission-runner front door. Config and task files are
// JSON with a schema_version field and strict parsing: a missing required
// field fails naming the field, an unrecognized key fails naming the key (a
// typo in a coefficient name must never silently fall back to a default),
// and every default that IS applied gets logged. Run artifacts (trajectory
// CSV, event JSONL, summary JSON, plot exports) are written with fixed
// formatting so identical inputs produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "glidesim/config.hpp"
#include "glidesim/errors.hpp"
#include "glidesim/frames.hpp"
#include "glidesim/guidance.hpp"
#include "glidesim/lqr.hpp"
#include "glidesim/maneuver.hpp"
#include "glidesim/sim.hpp"

namespace glidesim {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Strict JSON walking
// ---------------------------------------------------------------------------

namespace detail {

/// Reader over one JSON object that tracks which keys were consumed.
/// `done()` rejects anything left over, so typos in field names fail loudly
/// instead of silently keeping a default. Paths accumulate ("hydro.K_D0")
/// so errors in nested blocks name the full location.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string path)
      : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) {
      throw ConfigError(where() + " must be a JSON object");
    }
  }

  [[nodiscard]] bool has(const std::string& key) const {
    return j_->contains(key);
  }

  const Json& require(const std::string& key) {
    seen_.insert(key);
    const auto it = j_->find(key);
    if (it == j_->end()) {
      throw ConfigError("missing field " + join(key));
    }
    return *it;
  }

  /// Marks an optional key consumed; returns nullptr when absent.
  const Json* take(const std::string& key) {
    seen_.insert(key);
    const auto it = j_->find(key);
    return it == j_->end() ? nullptr : &*it;
  }

  double number(const std::string& key) {
    return as_number(require(key), join(key));
  }

  double number_or(const std::string& key, double fallback,
                   std::vector<std::string>* notes) {
    if (const Json* v = take(key)) return as_number(*v, join(key));
    note(notes, join(key), std::to_string(fallback));
    return fallback;
  }

  int integer(const std::string& key) {
    return as_integer(require(key), join(key));
  }

  int integer_or(const std::string& key, int fallback,
                 std::vector<std::string>* notes) {
    if (const Json* v = take(key)) return as_integer(*v, join(key));
    note(notes, join(key), std::to_string(fallback));
    return fallback;
  }

  bool boolean_or(const std::string& key, bool fallback,
                  std::vector<std::string>* notes) {
    if (const Json* v = take(key)) {
      if (!v->is_boolean()) {
        throw ConfigError(join(key) + " must be a boolean");
      }
      return v->get<bool>();
    }
    note(notes, join(key), fallback ? "true" : "false");
    return fallback;
  }

  std::string text(const std::string& key) {
    const Json& v = require(key);
    if (!v.is_string()) throw ConfigError(join(key) + " must be a string");
    return v.get<std::string>();
  }

  std::string text_or(const std::string& key, const std::string& fallback) {
    if (const Json* v = take(key)) {
      if (!v->is_string()) throw ConfigError(join(key) + " must be a string");
      return v->get<std::string>();
    }
    return fallback;
  }

  StrictObject object(const std::string& key) {
    return StrictObject(require(key), join(key));
  }

  std::optional<StrictObject> object_if_present(const std::string& key) {
    if (const Json* v = take(key)) return StrictObject(*v, join(key));
    return std::nullopt;
  }

  /// Fixed-size numeric array.
  template <int N>
  Eigen::Matrix<double, N, 1> vector(const std::string& key) {
    return as_vector<N>(require(key), join(key));
  }

  template <int N>
  Eigen::Matrix<double, N, 1> vector_or(
      const std::string& key, const Eigen::Matrix<double, N, 1>& fallback,
      std::vector<std::string>* notes) {
    if (const Json* v = take(key)) return as_vector<N>(*v, join(key));
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < N; ++i) os << (i ? ", " : "") << fallback[i];
    os << "]";
    note(notes, join(key), os.str());
    return fallback;
  }

  /// Inertia-style matrix: either 3 numbers (a diagonal) or 3 rows of 3.
  Mat3 matrix3(const std::string& key) {
    const Json& v = require(key);
    const std::string path = join(key);
    if (!v.is_array() || v.size() != 3) {
      throw ConfigError(path +
                        " must be an array of 3 numbers (diagonal) or "
                        "3 rows of 3 numbers");
    }
    if (v[0].is_array()) {
      Mat3 m;
      for (int r = 0; r < 3; ++r) {
        const Vec3 row =
            as_vector<3>(v[r], path + "[" + std::to_string(r) + "]");
        m.row(r) = row.transpose();
      }
      return m;
    }
    return Vec3(as_vector<3>(v, path)).asDiagonal();
  }

  /// Rejects keys nobody consumed. Call once, after all fields are read.
  void done() const {
    for (const auto& item : j_->items()) {
      if (seen_.count(item.key()) == 0) {
        throw ConfigError("unknown field " + join(item.key()) +
                          " (strict parsing: check the spelling against the "
                          "documented schema)");
      }
    }
  }

  [[nodiscard]] std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  [[nodiscard]] std::string where() const {
    return path_.empty() ? "document root" : path_;
  }

  static void note(std::vector<std::string>* notes, const std::string& path,
                   const std::string& value) {
    if (notes != nullptr) {
      notes->push_back("defaulted " + path + " = " + value);
    }
  }

  static double as_number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + " must be a number");
    return v.get<double>();
  }

  static int as_integer(const Json& v, const std::string& path) {
    if (!v.is_number_integer()) {
      throw ConfigError(path + " must be an integer");
    }
    return v.get<int>();
  }

  template <int N>
  static Eigen::Matrix<double, N, 1> as_vector(const Json& v,
                                               const std::string& path) {
    if (!v.is_array() || v.size() != static_cast<std::size_t>(N)) {
      throw ConfigError(path + " must be an array of " + std::to_string(N) +
                        " numbers");
    }
    Eigen::Matrix<double, N, 1> out;
    for (int i = 0; i < N; ++i) {
      out[i] = as_number(v[i], path + "[" + std::to_string(i) + "]");
    }
    return out;
  }

  const Json* j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void check_schema_version(StrictObject& root) {
  const int version = root.integer("schema_version");
  if (version != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " +
                      std::to_string(version) + " (this build reads version " +
                      std::to_string(kSchemaVersion) + ")");
  }
}

inline Json parse_document(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

inline std::string read_file(const std::filesystem::path& path,
                             const std::string& what) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(what + " not readable: " + path.string());
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Config document
// ---------------------------------------------------------------------------

/// Parses a glider config document. Required: every physical field of the
/// vehicle (masses, geometry, inertias, densities, hydrodynamic and
/// added-mass coefficients, actuator limits, pitch envelope). Optional with
/// a logged default: description, rho_gradient, surface flotation, model
/// options, control weights. The returned config has passed validate().
inline GliderConfig parse_glider_config(const Json& doc,
                                        std::vector<std::string>* notes) {
  detail::StrictObject root(doc, "");
  detail::check_schema_version(root);

  GliderConfig c;
  c.description = root.text_or("description", "");
  c.m_s = root.number("m_s");
  c.r_s = root.vector<3>("r_s");
  c.m_p = root.number("m_p");
  c.r_b = root.vector<3>("r_b");
  c.J_s = root.matrix3("J_s");
  c.J_p0 = root.matrix3("J_p0");
  c.R_p = root.number("R_p");

  c.rho_deep = root.number("rho_deep");
  c.rho_surface = root.number("rho_surface");
  c.rho_gradient = root.number_or("rho_gradient", 0.0, notes);
  c.K_vh = root.number("K_vh");

  {
    detail::StrictObject h = root.object("hydro");
    c.hydro.K_D0 = h.number("K_D0");
    c.hydro.K_D = h.number("K_D");
    c.hydro.K_beta = h.number("K_beta");
    c.hydro.K_L0 = h.number("K_L0");
    c.hydro.K_L = h.number("K_L");
    c.hydro.K_MR = h.number("K_MR");
    c.hydro.K_p = h.number("K_p");
    c.hydro.K_M0 = h.number("K_M0");
    c.hydro.K_M = h.number("K_M");
    c.hydro.K_q = h.number("K_q");
    c.hydro.K_MY = h.number("K_MY");
    c.hydro.K_r = h.number("K_r");
    h.done();
  }
  {
    detail::StrictObject a = root.object("added_mass");
    c.added_mass.lambda11 = a.number("lambda11");
    c.added_mass.lambda22 = a.number("lambda22");
    c.added_mass.lambda33 = a.number("lambda33");
    c.added_mass.lambda44 = a.number("lambda44");
    c.added_mass.lambda55 = a.number("lambda55");
    c.added_mass.lambda66 = a.number("lambda66");
    c.added_mass.lambda26 = a.number("lambda26");
    c.added_mass.lambda62 = a.number("lambda62");
    c.added_mass.lambda35 = a.number("lambda35");
    c.added_mass.lambda53 = a.number("lambda53");
    a.done();
  }
  {
    detail::StrictObject a = root.object("actuators");
    c.actuators.delta_zeta = a.number("delta_zeta");
    c.actuators.delta_r_p1 = a.number("delta_r_p1");
    c.actuators.delta_m_b = a.number("delta_m_b");
    c.actuators.min_r_p1 = a.number("min_r_p1");
    c.actuators.max_r_p1 = a.number("max_r_p1");
    c.actuators.max_m_b = a.number("max_m_b");
    c.actuators.zeta_range = a.number("zeta_range");
    a.done();
  }
  {
    detail::StrictObject p = root.object("pitch_limits");
    c.pitch_limits.min = p.number("min");
    c.pitch_limits.max = p.number("max");
    p.done();
  }

  if (auto s = root.object_if_present("surface")) {
    c.surface.waterplane_area = s->number("waterplane_area");
    c.surface.heave_damping = s->number("heave_damping");
    s->done();
  } else if (notes != nullptr) {
    notes->push_back("defaulted surface = {waterplane_area 0, heave_damping "
                     "0} (no flotation model)");
  }
  if (auto o = root.object_if_present("options")) {
    c.options.tdl2_literal = o->boolean_or("tdl2_literal", false, notes);
    c.options.hydro_beta_literal =
        o->boolean_or("hydro_beta_literal", false, notes);
    o->done();
  } else if (notes != nullptr) {
    notes->push_back("defaulted options = repaired hydrodynamic forms");
  }
  if (auto w = root.object_if_present("control")) {
    ControlWeights d;
    c.control.q_vertical = w->vector_or<4>("q_vertical", d.q_vertical, notes);
    c.control.r_vertical = w->vector_or<2>("r_vertical", d.r_vertical, notes);
    c.control.q_horizontal =
        w->vector_or<2>("q_horizontal", d.q_horizontal, notes);
    c.control.r_horizontal =
        w->number_or("r_horizontal", d.r_horizontal, notes);
    c.control.min_glide_pitch =
        w->number_or("min_glide_pitch", d.min_glide_pitch, notes);
    w->done();
  } else if (notes != nullptr) {
    notes->push_back("defaulted control = built-in LQR weights");
  }

  root.done();
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Task document
// ---------------------------------------------------------------------------

/// Everything a task file can describe: the waypoint mission itself plus the
/// run environment (currents), simulation settings, an optional cap on the
/// number of work cycles, and an optional explicit turning capability for
/// the pre-mission reachability check.
struct TaskDocument {
  MissionTask task;
  CurrentField currents;
  SimConfig sim;
  bool has_turn_spec = false;
  TurnSpec turn_spec;
};

inline TaskDocument parse_mission_task(const Json& doc,
                                       std::vector<std::string>* notes) {
  detail::StrictObject root(doc, "");
  detail::check_schema_version(root);

  TaskDocument out;
  {
    detail::StrictObject o = root.object("origin");
    out.task.origin.lat0 = o.number("lat0");
    out.task.origin.lon0 = o.number("lon0");
    o.done();
  }
  {
    const Json& w = root.require("waypoints");
    if (!w.is_array()) throw ConfigError("waypoints must be an array");
    for (std::size_t i = 0; i < w.size(); ++i) {
      detail::StrictObject wp(w[i], "waypoints[" + std::to_string(i) + "]");
      Waypoint p;
      p.lat = wp.number("lat");
      p.lon = wp.number("lon");
      p.target_depth = wp.number("depth_m");
      p.desired_speed = wp.number("speed_mps");
      wp.done();
      out.task.waypoints.push_back(p);
    }
  }
  out.task.acceptance_radius = root.number("acceptance_radius_m");
  out.task.min_loops = root.integer("min_loops");

  const std::string mode = root.text("pitch_mode");
  if (mode == "recursive") {
    out.task.pitch_mode = PitchMode::kRecursive;
    if (root.has("fixed_pitch_rad")) {
      throw ConfigError(
          "fixed_pitch_rad is only valid with pitch_mode \"fixed\"");
    }
  } else if (mode == "fixed") {
    out.task.pitch_mode = PitchMode::kFixed;
    const Vec2 pair = root.vector<2>("fixed_pitch_rad");
    out.task.fixed_pitch_descend = pair[0];
    out.task.fixed_pitch_ascend = pair[1];
  } else {
    throw ConfigError("pitch_mode must be \"recursive\" or \"fixed\" (got \"" +
                      mode + "\")");
  }

  out.sim.max_cycles = root.integer_or("max_cycles", 0, nullptr);

  if (const Json* cur = root.take("currents")) {
    if (!cur->is_array()) throw ConfigError("currents must be an array");
    for (std::size_t i = 0; i < cur->size(); ++i) {
      detail::StrictObject lo((*cur)[i],
                              "currents[" + std::to_string(i) + "]");
      CurrentLayer layer;
      layer.depth_min = lo.number("depth_min_m");
      layer.depth_max = lo.number("depth_max_m");
      layer.velocity = lo.vector<3>("velocity_mps");
      layer.period = lo.number_or("period_s", 0.0, nullptr);
      layer.phase = lo.number_or("phase_rad", 0.0, nullptr);
      lo.done();
      out.currents.layers.push_back(layer);
    }
  }

  if (auto s = root.object_if_present("sim")) {
    SimConfig d;
    out.sim.dt = s->number_or("dt_s", d.dt, notes);
    out.sim.max_sim_time = s->number_or("max_time_s", d.max_sim_time, notes);
    out.sim.surface_depth_threshold =
        s->number_or("surface_threshold_m", d.surface_depth_threshold, notes);
    out.sim.control_decimation =
        s->integer_or("control_decimation", d.control_decimation, notes);
    out.sim.depth_overshoot_tolerance = s->number_or(
        "overshoot_tolerance", d.depth_overshoot_tolerance, notes);
    const std::string sw = s->text_or("ballast_switch", "at-depth");
    if (sw == "at-depth") {
      out.sim.ballast_switch = BallastSwitchMode::kAtDepth;
    } else if (sw == "after-pitch-flip") {
      out.sim.ballast_switch = BallastSwitchMode::kAfterPitchFlip;
    } else {
      throw ConfigError(
          "sim.ballast_switch must be \"at-depth\" or \"after-pitch-flip\"");
    }
    s->done();
  }

  if (auto t = root.object_if_present("turn_spec")) {
    out.has_turn_spec = true;
    out.turn_spec.theta_i = t->number_or("theta_i_rad", 0.0, notes);
    out.turn_spec.v_lower = t->number("v_lower_mps");
    out.turn_spec.r_upper = t->number("r_upper_radps");
    t->done();
  }

  root.done();
  out.task.validate();
  out.currents.validate();
  out.sim.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Manifest and loading
// ---------------------------------------------------------------------------

enum class Subcommand { kRun, kCheck, kTrim, kGains };

[[nodiscard]] inline const char* to_string(Subcommand s) {
  switch (s) {
    case Subcommand::kRun: return "run";
    case Subcommand::kCheck: return "check";
    case Subcommand::kTrim: return "trim";
    case Subcommand::kGains: return "gains";
  }
  return "unknown";
}

/// One CLI invocation: which subcommand, which documents, where artifacts
/// go, and the optional overrides of the simulation settings.
struct RunManifest {
  Subcommand subcommand = Subcommand::kRun;
  std::string config_path;
  std::string task_path;
  std::string out_dir = "out";
  std::optional<double> dt;        ///< overrides the task's sim.dt_s
  std::optional<double> max_time;  ///< overrides the task's sim.max_time_s
  std::optional<unsigned> seed;    ///< reserved for future noise models

  void validate() const {
    namespace fs = std::filesystem;
    if (config_path.empty() || !fs::exists(config_path)) {
      throw ConfigError("config file not found: " + config_path);
    }
    if (task_path.empty() || !fs::exists(task_path)) {
      throw ConfigError("task file not found: " + task_path);
    }
    if (dt && !(*dt > 0.0)) {
      throw ConfigError("--dt must be positive");
    }
    if (max_time && !(*max_time > 0.0)) {
      throw ConfigError("--max-time must be positive");
    }
  }
};

struct LoadedInputs {
  GliderConfig config;
  MissionTask task;
  SimConfig sim;
  CurrentField currents;
  bool has_turn_spec = false;
  TurnSpec turn_spec;
  std::vector<std::string> notes;  ///< every default that was applied
};

/// Reads and validates both documents and applies the manifest overrides.
inline LoadedInputs load_inputs(const RunManifest& manifest) {
  manifest.validate();
  LoadedInputs in;
  in.config = parse_glider_config(
      detail::parse_document(
          detail::read_file(manifest.config_path, "config file"),
          "config file " + manifest.config_path),
      &in.notes);
  TaskDocument doc = parse_mission_task(
      detail::parse_document(
          detail::read_file(manifest.task_path, "task file"),
          "task file " + manifest.task_path),
      &in.notes);
  in.task = std::move(doc.task);
  in.currents = std::move(doc.currents);
  in.sim = doc.sim;
  in.has_turn_spec = doc.has_turn_spec;
  in.turn_spec = doc.turn_spec;
  if (manifest.dt) in.sim.dt = *manifest.dt;
  if (manifest.max_time) in.sim.max_sim_time = *manifest.max_time;
  in.sim.validate();
  return in;
}

// ---------------------------------------------------------------------------
// Run artifacts
// ---------------------------------------------------------------------------

namespace detail {

/// Fixed-width-free but fixed-format float: enough digits to round-trip a
/// trajectory for analysis, identical bytes for identical values.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) {
    throw ConfigError("could not open output file: " + path.string());
  }
  return os;
}

inline void close_out(std::ofstream& os, const std::filesystem::path& path) {
  os.flush();
  if (!os) {
    throw ConfigError("failed writing output file: " + path.string());
  }
}

}  // namespace detail

/// The canonical run log: one row per integrator step, columns fixed.
inline void write_trajectory_csv(const TrajectoryLog& log,
                                 const std::filesystem::path& path) {
  using detail::fmt;
  std::ofstream os = detail::open_out(path);
  os << "t,x_n,y_e,z_d,qw,qx,qy,qz,roll,pitch,yaw,u,v,w,p,q,r,zeta,rp1,mb,"
        "phase\n";
  for (const LogRecord& r : log.records) {
    const Vec3 euler = euler_from_quat(r.q);
    os << fmt(r.t) << ',' << fmt(r.p.x()) << ',' << fmt(r.p.y()) << ','
       << fmt(r.p.z()) << ',' << fmt(r.q.w()) << ',' << fmt(r.q.x()) << ','
       << fmt(r.q.y()) << ',' << fmt(r.q.z()) << ',' << fmt(euler.x()) << ','
       << fmt(euler.y()) << ',' << fmt(euler.z()) << ',' << fmt(r.v.x())
       << ',' << fmt(r.v.y()) << ',' << fmt(r.v.z()) << ','
       << fmt(r.omega.x()) << ',' << fmt(r.omega.y()) << ','
       << fmt(r.omega.z()) << ',' << fmt(r.zeta) << ',' << fmt(r.r_p1) << ','
       << fmt(r.m_b) << ',' << to_string(r.phase) << '\n';
  }
  detail::close_out(os, path);
}

/// Sparse event stream, one JSON object per line.
inline void write_events_jsonl(const TrajectoryLog& log,
                               const std::filesystem::path& path) {
  std::ofstream os = detail::open_out(path);
  for (const SimEvent& e : log.events) {
    OrderedJson j;
    j["t"] = e.t;
    j["type"] = e.type;
    j["detail"] = e.detail;
    os << j.dump() << '\n';
  }
  detail::close_out(os, path);
}

inline void write_summary_json(const MissionResult& res,
                               const MissionTask& task,
                               const std::filesystem::path& path) {
  OrderedJson j;
  j["schema_version"] = kSchemaVersion;
  j["complete"] = res.complete;
  j["termination"] =
      res.complete ? "all-waypoints"
                   : (res.cycle_budget_exhausted ? "cycle-budget" : "none");
  j["cycles"] = res.cycles;
  j["waypoints_reached"] = res.waypoints_reached;
  j["waypoint_count"] = task.waypoints.size();
  j["final_position_error_m"] = res.final_position_error;
  j["elapsed_s"] = res.elapsed;
  std::ofstream os = detail::open_out(path);
  os << j.dump(2) << '\n';
  detail::close_out(os, path);
}

// ---------------------------------------------------------------------------
// Plot exports
// ---------------------------------------------------------------------------

enum class PlotKind { kDepthProfile, kXyTrack, kStateTimeseries };

/// Columnar plot-ready views of a run log.
///  - depth-profile: t,z_d,phase — the sawtooth.
///  - xy-track: kind,t,x_n,y_e,course_rad,waypoint — every sample as a
///    `track` row, one `surfacing` row per surfaced sample carrying the
///    over-ground course (the arrow direction at each fix), and one
///    `waypoint` marker row per task waypoint when the task is supplied.
///  - state-timeseries: attitude, body rates and velocities, and all three
///    actuator positions against time.
inline void export_plot_data(const TrajectoryLog& log, PlotKind which,
                             const std::filesystem::path& path,
                             const MissionTask* task = nullptr) {
  using detail::fmt;
  if (log.records.empty()) {
    throw ConfigError("export_plot_data: the trajectory log is empty");
  }
  std::ofstream os = detail::open_out(path);
  switch (which) {
    case PlotKind::kDepthProfile: {
      os << "t,z_d,phase\n";
      for (const LogRecord& r : log.records) {
        os << fmt(r.t) << ',' << fmt(r.p.z()) << ',' << to_string(r.phase)
           << '\n';
      }
      break;
    }
    case PlotKind::kXyTrack: {
      os << "kind,t,x_n,y_e,course_rad,waypoint\n";
      auto course = [](const LogRecord& r) {
        const Vec3 v_world = r.q.toRotationMatrix() * r.v;
        return std::atan2(v_world.y(), v_world.x());
      };
      for (const LogRecord& r : log.records) {
        os << "track," << fmt(r.t) << ',' << fmt(r.p.x()) << ','
           << fmt(r.p.y()) << ',' << fmt(course(r)) << ",\n";
      }
      for (const LogRecord& r : log.records) {
        if (r.phase == MissionPhase::kSurfaced) {
          os << "surfacing," << fmt(r.t) << ',' << fmt(r.p.x()) << ','
             << fmt(r.p.y()) << ',' << fmt(course(r)) << ",\n";
        }
      }
      if (task != nullptr) {
        for (std::size_t i = 0; i < task->waypoints.size(); ++i) {
          const Waypoint& w = task->waypoints[i];
          const Vec3 p = geodetic_to_ned(w.lat, w.lon, task->origin);
          os << "waypoint,," << fmt(p.x()) << ',' << fmt(p.y()) << ",," << i
             << '\n';
        }
      }
      break;
    }
    case PlotKind::kStateTimeseries: {
      os << "t,roll,pitch,yaw,u,v,w,p,q,r,zeta,rp1,mb,phase\n";
      for (const LogRecord& r : log.records) {
        const Vec3 euler = euler_from_quat(r.q);
        os << fmt(r.t) << ',' << fmt(euler.x()) << ',' << fmt(euler.y())
           << ',' << fmt(euler.z()) << ',' << fmt(r.v.x()) << ','
           << fmt(r.v.y()) << ',' << fmt(r.v.z()) << ',' << fmt(r.omega.x())
           << ',' << fmt(r.omega.y()) << ',' << fmt(r.omega.z()) << ','
           << fmt(r.zeta) << ',' << fmt(r.r_p1) << ',' << fmt(r.m_b) << ','
           << to_string(r.phase) << '\n';
      }
      break;
    }
  }
  detail::close_out(os, path);
}

// ---------------------------------------------------------------------------
// Subcommand execution
// ---------------------------------------------------------------------------

namespace detail {

/// The guidance plan the first work cycle would fly: the surface fix at the
/// deployment point run through one guidance update. trim/gains/check all
/// describe the mission as it leaves the origin.
inline CyclePlan first_cycle_plan(const GliderConfig& cfg,
                                  const MissionTask& task) {
  if (task.waypoints.empty()) {
    throw ConfigError("the task has no waypoints to plan against");
  }
  GuidanceState gs;
  const GuidanceOutput out = surface_update(
      GeoFix{task.origin.lat0, task.origin.lon0}, task, gs, cfg);
  if (out.mission_complete) {
    throw ConfigError(
        "the deployment point already satisfies every waypoint");
  }
  CyclePlan plan;
  plan.pitch_descend = out.desired_pitch_descend;
  plan.pitch_ascend = out.desired_pitch_ascend;
  plan.heading = out.desired_heading;
  plan.speed = out.desired_speed;
  return plan;
}

/// Worst-case turn capability implied by the first-cycle descend trim: the
/// yaw-rate ceiling of the linearized heading loop at hard-over battery
/// roll, paired with the over-ground speed at that trim.
inline TurnSpec derived_turn_spec(const GliderConfig& cfg,
                                  const CyclePlan& plan) {
  const Equilibrium eq = find_equilibrium(cfg, plan.pitch_descend, plan.speed,
                                          GlidePhase::kDescend);
  const HorizontalModel hm = linearize_horizontal(cfg, eq);
  TurnSpec spec;
  spec.theta_i = 0.0;  // deployment heading: due north
  spec.v_lower = eq.speed * std::cos(eq.pitch);
  spec.r_upper = std::abs(hm.B(0) * cfg.actuators.zeta_range / hm.A(0, 0));
  return spec;
}

inline void print_equilibrium(std::ostream& os, const Equilibrium& eq) {
  os << "  " << to_string(eq.phase) << ": pitch " << fmt(eq.pitch)
     << " rad, u " << fmt(eq.u) << " m/s, w " << fmt(eq.w) << " m/s, r_p1 "
     << fmt(eq.r_p1) << " m, m_b " << fmt(eq.m_b) << " kg\n";
}

inline void print_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    os << "    [";
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      os << (c ? ", " : " ") << fmt(m(r, c));
    }
    os << " ]\n";
  }
}

}  // namespace detail

/// Runs one manifest end to end and returns the artifacts' location story on
/// `out`; defaults that were applied while loading go to `diag`. Throws
/// ConfigError / NumericalError / MissionError; the CLI maps those to exit
/// codes 1 / 2 / 3.
inline void execute(const RunManifest& manifest, std::ostream& out,
                    std::ostream& diag) {
  namespace fs = std::filesystem;
  const LoadedInputs in = load_inputs(manifest);
  for (const std::string& note : in.notes) {
    diag << "note: " << note << '\n';
  }

  switch (manifest.subcommand) {
    case Subcommand::kRun: {
      const MissionResult res =
          run_mission(in.task, in.config, in.sim, in.currents);
      const fs::path dir(manifest.out_dir);
      fs::create_directories(dir);
      write_trajectory_csv(res.log, dir / "trajectory.csv");
      write_events_jsonl(res.log, dir / "events.jsonl");
      write_summary_json(res, in.task, dir / "summary.json");
      if (!res.log.records.empty()) {
        export_plot_data(res.log, PlotKind::kDepthProfile,
                         dir / "depth_profile.csv");
        export_plot_data(res.log, PlotKind::kXyTrack, dir / "xy_track.csv",
                         &in.task);
        export_plot_data(res.log, PlotKind::kStateTimeseries,
                         dir / "state_timeseries.csv");
      }
      out << "mission " << (res.complete ? "complete" : "stopped") << ": "
          << res.waypoints_reached << "/" << in.task.waypoints.size()
          << " waypoints in " << res.cycles << " cycles ("
          << detail::fmt(res.elapsed) << " s simulated); artifacts in "
          << dir.string() << "\n";
      break;
    }
    case Subcommand::kCheck: {
      const CyclePlan plan = detail::first_cycle_plan(in.config, in.task);
      const TurnSpec spec = in.has_turn_spec
                                ? in.turn_spec
                                : detail::derived_turn_spec(in.config, plan);
      if (!in.has_turn_spec) {
        diag << "note: turn_spec derived from the first-cycle descend trim ("
             << "v_lower " << detail::fmt(spec.v_lower) << " m/s, r_upper "
             << detail::fmt(spec.r_upper) << " rad/s)\n";
      }
      const std::vector<LegVerdict> legs = check_mission_legs(in.task, spec);

      out << "minimum turning radius " << detail::fmt(spec.min_turn_radius())
          << " m\n";
      out << "leg  reachable  distance_m  bearing_rad\n";
      bool all = true;
      for (const LegVerdict& v : legs) {
        all = all && v.reachable;
        char line[96];
        std::snprintf(line, sizeof(line), "%3zu  %-9s  %10.1f  %+11.4f\n",
                      v.leg, v.reachable ? "yes" : "NO", v.distance,
                      v.bearing);
        out << line;
      }
      out << (all ? "all legs single-turn reachable\n"
                  : "at least one leg starts inside the minimum turning "
                    "circle\n");

      OrderedJson j;
      j["schema_version"] = kSchemaVersion;
      j["turn_spec"] = {{"theta_i_rad", spec.theta_i},
                        {"v_lower_mps", spec.v_lower},
                        {"r_upper_radps", spec.r_upper},
                        {"derived", !in.has_turn_spec}};
      j["min_turn_radius_m"] = spec.min_turn_radius();
      j["all_reachable"] = all;
      j["legs"] = OrderedJson::array();
      for (const LegVerdict& v : legs) {
        j["legs"].push_back({{"leg", v.leg},
                             {"reachable", v.reachable},
                             {"distance_m", v.distance},
                             {"bearing_rad", v.bearing}});
      }
      const fs::path dir(manifest.out_dir);
      fs::create_directories(dir);
      std::ofstream os = detail::open_out(dir / "check.json");
      os << j.dump(2) << '\n';
      detail::close_out(os, dir / "check.json");
      break;
    }
    case Subcommand::kTrim: {
      const CyclePlan plan = detail::first_cycle_plan(in.config, in.task);
      out << "first-cycle trim (heading " << detail::fmt(plan.heading)
          << " rad, speed " << detail::fmt(plan.speed) << " m/s)\n";
      detail::print_equilibrium(
          out, find_equilibrium(in.config, plan.pitch_descend, plan.speed,
                                GlidePhase::kDescend));
      detail::print_equilibrium(
          out, find_equilibrium(in.config, plan.pitch_ascend, plan.speed,
                                GlidePhase::kAscend));
      out << "  neutral ballast " << detail::fmt(in.config.neutral_ballast())
          << " kg\n";
      break;
    }
    case Subcommand::kGains: {
      const CyclePlan plan = detail::first_cycle_plan(in.config, in.task);
      const GainSet set = compute_gain_set(in.config, plan);
      out << "first-cycle gain schedule (heading "
          << detail::fmt(set.heading) << " rad)\n";
      for (const GlidePhase phase :
           {GlidePhase::kDescend, GlidePhase::kAscend}) {
        const PhaseGains& g = set.for_phase(phase);
        out << to_string(phase) << " K_vertical (inputs r_p1, m_b x states "
            << "u, w, q, pitch):\n";
        detail::print_matrix(out, g.K_vertical);
        out << to_string(phase) << " K_horizontal (input zeta x states "
            << "r, yaw error):\n";
        detail::print_matrix(out, g.K_horizontal);
      }
      break;
    }
  }
}

}  // namespace glidesim
