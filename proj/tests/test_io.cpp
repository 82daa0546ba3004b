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

#include "glidesim/io.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "glidesim/config.hpp"
#include "glidesim/errors.hpp"

namespace glidesim {
namespace {

namespace fs = std::filesystem;

// Checked-in documents, addressed from the source tree.
const char* kConfigPath = GLIDESIM_SOURCE_DIR "/configs/petrel2like.json";
const char* kFiveWpPath = GLIDESIM_SOURCE_DIR "/missions/five_waypoints.json";
const char* kOneCyclePath = GLIDESIM_SOURCE_DIR "/missions/one_cycle.json";

Json load_json(const std::string& path) {
  std::ifstream in(path);
  EXPECT_TRUE(in.good()) << path;
  std::ostringstream os;
  os << in.rdbuf();
  return Json::parse(os.str());
}

/// Expects that `mutate`d copies of the reference config document fail to
/// parse with a message containing `needle`.
void expect_config_error(const std::function<void(Json&)>& mutate,
                         const std::string& needle) {
  Json doc = load_json(kConfigPath);
  mutate(doc);
  try {
    (void)parse_glider_config(doc, nullptr);
    FAIL() << "expected ConfigError containing \"" << needle << "\"";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos)
        << "got: " << e.what();
  }
}

void expect_task_error(const std::function<void(Json&)>& mutate,
                       const std::string& needle) {
  Json doc = load_json(kFiveWpPath);
  mutate(doc);
  try {
    (void)parse_mission_task(doc, nullptr);
    FAIL() << "expected ConfigError containing \"" << needle << "\"";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos)
        << "got: " << e.what();
  }
}

/// A unique scratch directory per test, removed on destruction.
struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("glidesim_io_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
};

/// Three log records spanning one descend step and a surfacing.
TrajectoryLog tiny_log() {
  TrajectoryLog log;
  LogRecord r;
  r.t = 0.0;
  r.p = Vec3(0.0, 0.0, 0.0);
  r.q = Quat::Identity();
  r.v = Vec3(0.4, 0.0, 0.02);
  r.omega = Vec3::Zero();
  r.zeta = 0.0;
  r.r_p1 = 0.01;
  r.m_b = 0.5;
  r.phase = MissionPhase::kSurfaced;
  log.append(r);
  r.t = 0.05;
  r.p = Vec3(0.02, 0.0, 0.001);
  r.phase = MissionPhase::kDescend;
  log.append(r);
  r.t = 0.1;
  r.p = Vec3(0.04, 0.0, 0.002);
  r.phase = MissionPhase::kAscend;
  log.append(r);
  log.note(0.05, "depth-reached", "target 30 m");
  return log;
}

// ---------------------------------------------------------------------------
// Config document
// ---------------------------------------------------------------------------

TEST(ConfigDocument, CheckedInDatasetMatchesBuiltinReference) {
  std::vector<std::string> notes;
  const GliderConfig a = parse_glider_config(load_json(kConfigPath), &notes);
  const GliderConfig b = reference_config();

  EXPECT_EQ(a.description, b.description);
  EXPECT_EQ(a.m_s, b.m_s);
  EXPECT_EQ(a.r_s, b.r_s);
  EXPECT_EQ(a.m_p, b.m_p);
  EXPECT_EQ(a.r_b, b.r_b);
  EXPECT_EQ(a.J_s, b.J_s);
  EXPECT_EQ(a.J_p0, b.J_p0);
  EXPECT_EQ(a.R_p, b.R_p);
  EXPECT_EQ(a.rho_deep, b.rho_deep);
  EXPECT_EQ(a.rho_surface, b.rho_surface);
  EXPECT_EQ(a.rho_gradient, b.rho_gradient);
  EXPECT_EQ(a.K_vh, b.K_vh);
  EXPECT_EQ(a.hydro.K_D0, b.hydro.K_D0);
  EXPECT_EQ(a.hydro.K_D, b.hydro.K_D);
  EXPECT_EQ(a.hydro.K_beta, b.hydro.K_beta);
  EXPECT_EQ(a.hydro.K_L0, b.hydro.K_L0);
  EXPECT_EQ(a.hydro.K_L, b.hydro.K_L);
  EXPECT_EQ(a.hydro.K_MR, b.hydro.K_MR);
  EXPECT_EQ(a.hydro.K_p, b.hydro.K_p);
  EXPECT_EQ(a.hydro.K_M0, b.hydro.K_M0);
  EXPECT_EQ(a.hydro.K_M, b.hydro.K_M);
  EXPECT_EQ(a.hydro.K_q, b.hydro.K_q);
  EXPECT_EQ(a.hydro.K_MY, b.hydro.K_MY);
  EXPECT_EQ(a.hydro.K_r, b.hydro.K_r);
  EXPECT_EQ(a.added_mass.lambda11, b.added_mass.lambda11);
  EXPECT_EQ(a.added_mass.lambda22, b.added_mass.lambda22);
  EXPECT_EQ(a.added_mass.lambda33, b.added_mass.lambda33);
  EXPECT_EQ(a.added_mass.lambda44, b.added_mass.lambda44);
  EXPECT_EQ(a.added_mass.lambda55, b.added_mass.lambda55);
  EXPECT_EQ(a.added_mass.lambda66, b.added_mass.lambda66);
  EXPECT_EQ(a.added_mass.lambda26, b.added_mass.lambda26);
  EXPECT_EQ(a.added_mass.lambda62, b.added_mass.lambda62);
  EXPECT_EQ(a.added_mass.lambda35, b.added_mass.lambda35);
  EXPECT_EQ(a.added_mass.lambda53, b.added_mass.lambda53);
  EXPECT_EQ(a.actuators.delta_zeta, b.actuators.delta_zeta);
  EXPECT_EQ(a.actuators.delta_r_p1, b.actuators.delta_r_p1);
  EXPECT_EQ(a.actuators.delta_m_b, b.actuators.delta_m_b);
  EXPECT_EQ(a.actuators.min_r_p1, b.actuators.min_r_p1);
  EXPECT_EQ(a.actuators.max_r_p1, b.actuators.max_r_p1);
  EXPECT_EQ(a.actuators.max_m_b, b.actuators.max_m_b);
  EXPECT_EQ(a.actuators.zeta_range, b.actuators.zeta_range);
  EXPECT_EQ(a.pitch_limits.min, b.pitch_limits.min);
  EXPECT_EQ(a.pitch_limits.max, b.pitch_limits.max);
  EXPECT_EQ(a.surface.waterplane_area, b.surface.waterplane_area);
  EXPECT_EQ(a.surface.heave_damping, b.surface.heave_damping);
  EXPECT_EQ(a.options.tdl2_literal, b.options.tdl2_literal);
  EXPECT_EQ(a.options.hydro_beta_literal, b.options.hydro_beta_literal);
  EXPECT_EQ(a.control.q_vertical, b.control.q_vertical);
  EXPECT_EQ(a.control.r_vertical, b.control.r_vertical);
  EXPECT_EQ(a.control.q_horizontal, b.control.q_horizontal);
  EXPECT_EQ(a.control.r_horizontal, b.control.r_horizontal);
  EXPECT_EQ(a.control.min_glide_pitch, b.control.min_glide_pitch);

  // The checked-in dataset is fully explicit: nothing should have defaulted.
  EXPECT_TRUE(notes.empty());
}

TEST(ConfigDocument, MissingFieldNamesTheField) {
  expect_config_error([](Json& d) { d.erase("m_s"); }, "missing field m_s");
  expect_config_error([](Json& d) { d["hydro"].erase("K_q"); },
                      "missing field hydro.K_q");
  expect_config_error([](Json& d) { d["actuators"].erase("max_m_b"); },
                      "missing field actuators.max_m_b");
}

TEST(ConfigDocument, UnknownKeyIsFatalAndNamed) {
  expect_config_error([](Json& d) { d["hydro"]["K_Dx"] = 1.0; },
                      "unknown field hydro.K_Dx");
  expect_config_error([](Json& d) { d["buoyancy_trim"] = 0.1; },
                      "unknown field buoyancy_trim");
  expect_config_error([](Json& d) { d["control"]["r_horizontale"] = 1.0; },
                      "unknown field control.r_horizontale");
}

TEST(ConfigDocument, TypeErrorsNameTheField) {
  expect_config_error([](Json& d) { d["m_s"] = "54.2"; },
                      "m_s must be a number");
  expect_config_error([](Json& d) { d["r_s"] = Json::array({0.0, 0.0}); },
                      "r_s must be an array of 3 numbers");
}

TEST(ConfigDocument, AsymmetricCouplingIsRejected) {
  // lambda26 and lambda62 are one physical coefficient; disagreement means
  // the document is internally inconsistent, not a preference.
  expect_config_error(
      [](Json& d) { d["added_mass"]["lambda62"] = 1.6; }, "lambda");
}

TEST(ConfigDocument, SchemaVersionIsEnforced) {
  expect_config_error([](Json& d) { d["schema_version"] = 2; },
                      "unsupported schema_version 2");
  expect_config_error([](Json& d) { d.erase("schema_version"); },
                      "missing field schema_version");
}

TEST(ConfigDocument, OmittedOptionalBlocksAreDefaultedAndLogged) {
  Json doc = load_json(kConfigPath);
  doc.erase("control");
  doc.erase("options");
  doc.erase("rho_gradient");
  std::vector<std::string> notes;
  const GliderConfig cfg = parse_glider_config(doc, &notes);
  const GliderConfig ref = reference_config();
  EXPECT_EQ(cfg.control.r_horizontal, ref.control.r_horizontal);
  EXPECT_EQ(cfg.rho_gradient, 0.0);
  EXPECT_FALSE(cfg.options.tdl2_literal);
  ASSERT_EQ(notes.size(), 3u);
  EXPECT_NE(notes[0].find("rho_gradient"), std::string::npos);
}

// ---------------------------------------------------------------------------
// Task document
// ---------------------------------------------------------------------------

TEST(TaskDocument, CheckedInMissionParses) {
  std::vector<std::string> notes;
  const TaskDocument doc = parse_mission_task(load_json(kFiveWpPath), &notes);
  EXPECT_EQ(doc.task.waypoints.size(), 5u);
  EXPECT_EQ(doc.task.acceptance_radius, 15.0);
  EXPECT_EQ(doc.task.min_loops, 2);
  EXPECT_EQ(doc.task.pitch_mode, PitchMode::kRecursive);
  EXPECT_EQ(doc.task.origin.lat0, 22.30);
  EXPECT_EQ(doc.sim.dt, 0.05);
  EXPECT_EQ(doc.sim.max_sim_time, 120000.0);
  EXPECT_EQ(doc.sim.max_cycles, 0);
  EXPECT_FALSE(doc.has_turn_spec);
  EXPECT_TRUE(doc.currents.layers.empty());
}

TEST(TaskDocument, FixedPitchMissionParses) {
  const TaskDocument doc =
      parse_mission_task(load_json(kOneCyclePath), nullptr);
  EXPECT_EQ(doc.task.pitch_mode, PitchMode::kFixed);
  EXPECT_EQ(doc.task.fixed_pitch_descend, -0.6);
  EXPECT_EQ(doc.task.fixed_pitch_ascend, 0.7);
  EXPECT_EQ(doc.sim.max_cycles, 1);
}

TEST(TaskDocument, PitchModeMisuseIsRejected) {
  expect_task_error(
      [](Json& d) { d["fixed_pitch_rad"] = Json::array({-0.6, 0.7}); },
      "only valid with pitch_mode \"fixed\"");
  expect_task_error([](Json& d) { d["pitch_mode"] = "fixed"; },
                    "missing field fixed_pitch_rad");
  expect_task_error([](Json& d) { d["pitch_mode"] = "adaptive"; },
                    "pitch_mode must be");
}

TEST(TaskDocument, StrictParsingCoversWaypointsAndSim) {
  expect_task_error([](Json& d) { d["waypoints"][2].erase("depth_m"); },
                    "missing field waypoints[2].depth_m");
  expect_task_error([](Json& d) { d["waypoints"][0]["altitude"] = 3.0; },
                    "unknown field waypoints[0].altitude");
  expect_task_error([](Json& d) { d["sim"]["dt"] = 0.1; },
                    "unknown field sim.dt");
  expect_task_error([](Json& d) { d["loiter"] = true; },
                    "unknown field loiter");
}

TEST(TaskDocument, CurrentLayersAndTurnSpecParse) {
  Json doc = load_json(kFiveWpPath);
  doc["currents"] = Json::array(
      {{{"depth_min_m", 0.0},
        {"depth_max_m", 10.0},
        {"velocity_mps", Json::array({0.05, 0.0, 0.0})},
        {"period_s", 600.0},
        {"phase_rad", 0.5}}});
  doc["turn_spec"] = {{"v_lower_mps", 0.3}, {"r_upper_radps", 0.004}};
  const TaskDocument parsed = parse_mission_task(doc, nullptr);
  ASSERT_EQ(parsed.currents.layers.size(), 1u);
  EXPECT_EQ(parsed.currents.layers[0].velocity.x(), 0.05);
  EXPECT_EQ(parsed.currents.layers[0].period, 600.0);
  ASSERT_TRUE(parsed.has_turn_spec);
  EXPECT_EQ(parsed.turn_spec.theta_i, 0.0);
  EXPECT_EQ(parsed.turn_spec.v_lower, 0.3);
  EXPECT_NEAR(parsed.turn_spec.min_turn_radius(), 75.0, 1e-12);
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

TEST(Manifest, MissingFilesAreConfigErrors) {
  RunManifest m;
  m.config_path = "/nonexistent/config.json";
  m.task_path = kFiveWpPath;
  EXPECT_THROW(load_inputs(m), ConfigError);
  m.config_path = kConfigPath;
  m.task_path = "/nonexistent/task.json";
  EXPECT_THROW(load_inputs(m), ConfigError);
}

TEST(Manifest, OverridesBeatTheTaskDocument) {
  RunManifest m;
  m.config_path = kConfigPath;
  m.task_path = kFiveWpPath;
  m.dt = 0.1;
  m.max_time = 500.0;
  const LoadedInputs in = load_inputs(m);
  EXPECT_EQ(in.sim.dt, 0.1);
  EXPECT_EQ(in.sim.max_sim_time, 500.0);
}

TEST(Manifest, MalformedJsonIsAConfigError) {
  ScratchDir dir("badjson");
  const fs::path bad = dir.path / "bad.json";
  std::ofstream(bad) << "{ \"schema_version\": 1, ";
  RunManifest m;
  m.config_path = bad.string();
  m.task_path = kFiveWpPath;
  EXPECT_THROW(load_inputs(m), ConfigError);
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

TEST(Writers, TrajectoryCsvHasTheContractColumns) {
  ScratchDir dir("csv");
  const fs::path path = dir.path / "trajectory.csv";
  write_trajectory_csv(tiny_log(), path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header,
            "t,x_n,y_e,z_d,qw,qx,qy,qz,roll,pitch,yaw,u,v,w,p,q,r,zeta,rp1,"
            "mb,phase");
  std::string row;
  int rows = 0;
  while (std::getline(in, row)) {
    if (!row.empty()) ++rows;
  }
  EXPECT_EQ(rows, 3);
}

TEST(Writers, EventsJsonlIsOneObjectPerLine) {
  ScratchDir dir("jsonl");
  const fs::path path = dir.path / "events.jsonl";
  write_events_jsonl(tiny_log(), path);
  std::ifstream in(path);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  const Json j = Json::parse(line);
  EXPECT_EQ(j.at("t").get<double>(), 0.05);
  EXPECT_EQ(j.at("type").get<std::string>(), "depth-reached");
  EXPECT_FALSE(std::getline(in, line) && !line.empty());
}

TEST(Writers, PlotExportsRejectAnEmptyLog) {
  ScratchDir dir("empty");
  EXPECT_THROW(export_plot_data(TrajectoryLog{}, PlotKind::kDepthProfile,
                                dir.path / "x.csv"),
               ConfigError);
}

TEST(Writers, XyTrackCarriesSurfacingAndWaypointRows) {
  ScratchDir dir("xy");
  MissionTask task;
  task.origin = {22.30, 114.20};
  Waypoint wp;
  wp.lat = 22.3018061242;
  wp.lon = 114.20;
  wp.target_depth = 30.0;
  wp.desired_speed = 0.4;
  task.waypoints.push_back(wp);
  const fs::path path = dir.path / "xy_track.csv";
  export_plot_data(tiny_log(), PlotKind::kXyTrack, path, &task);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "kind,t,x_n,y_e,course_rad,waypoint");
  int track = 0, surfacing = 0, waypoint = 0;
  while (std::getline(in, line)) {
    if (line.rfind("track,", 0) == 0) ++track;
    if (line.rfind("surfacing,", 0) == 0) ++surfacing;
    if (line.rfind("waypoint,", 0) == 0) ++waypoint;
  }
  EXPECT_EQ(track, 3);
  EXPECT_EQ(surfacing, 1);  // tiny_log has exactly one surfaced sample
  EXPECT_EQ(waypoint, 1);
}

// ---------------------------------------------------------------------------
// Subcommand round trips
// ---------------------------------------------------------------------------

TEST(Execute, RunWritesTheFullArtifactSet) {
  ScratchDir dir("run");
  RunManifest m;
  m.subcommand = Subcommand::kRun;
  m.config_path = kConfigPath;
  m.task_path = kOneCyclePath;
  m.out_dir = (dir.path / "out").string();
  std::ostringstream out, diag;
  execute(m, out, diag);

  for (const char* name :
       {"trajectory.csv", "events.jsonl", "summary.json", "depth_profile.csv",
        "xy_track.csv", "state_timeseries.csv"}) {
    EXPECT_TRUE(fs::exists(fs::path(m.out_dir) / name)) << name;
  }
  const Json summary = load_json((fs::path(m.out_dir) / "summary.json").string());
  EXPECT_EQ(summary.at("schema_version").get<int>(), 1);
  EXPECT_EQ(summary.at("termination").get<std::string>(), "cycle-budget");
  EXPECT_EQ(summary.at("cycles").get<int>(), 1);
  EXPECT_EQ(summary.at("waypoint_count").get<int>(), 1);
  EXPECT_NE(out.str().find("1 cycles"), std::string::npos);
}

TEST(Execute, CheckReportsEveryLegReachable) {
  ScratchDir dir("check");
  RunManifest m;
  m.subcommand = Subcommand::kCheck;
  m.config_path = kConfigPath;
  m.task_path = kFiveWpPath;
  m.out_dir = (dir.path / "out").string();
  std::ostringstream out, diag;
  execute(m, out, diag);

  const Json check = load_json((fs::path(m.out_dir) / "check.json").string());
  EXPECT_TRUE(check.at("all_reachable").get<bool>());
  ASSERT_EQ(check.at("legs").size(), 5u);
  EXPECT_EQ(check.at("legs")[0].at("leg").get<int>(), 1);
  EXPECT_NEAR(check.at("legs")[0].at("distance_m").get<double>(), 200.0,
              1e-3);
  EXPECT_TRUE(check.at("turn_spec").at("derived").get<bool>());
  EXPECT_NE(diag.str().find("turn_spec derived"), std::string::npos);
  EXPECT_NE(out.str().find("all legs single-turn reachable"),
            std::string::npos);
}

TEST(Execute, CheckFlagsAWaypointInsideTheTurningCircle) {
  // First waypoint 40 m abeam of the due-north deployment heading: inside
  // the starboard turning circle (center ~92 m to the right), so leg 1 must
  // be flagged. A close waypoint dead ahead would NOT be flagged - the
  // turning circles sit to the sides of the vehicle.
  ScratchDir dir("checkbad");
  Json doc = load_json(kFiveWpPath);
  doc["waypoints"][0]["lat"] = 22.30;
  doc["waypoints"][0]["lon"] = 114.2003881949;  // ~40 m east
  const fs::path task = dir.path / "near.json";
  std::ofstream(task) << doc.dump(2);

  RunManifest m;
  m.subcommand = Subcommand::kCheck;
  m.config_path = kConfigPath;
  m.task_path = task.string();
  m.out_dir = (dir.path / "out").string();
  std::ostringstream out, diag;
  execute(m, out, diag);

  const Json check = load_json((fs::path(m.out_dir) / "check.json").string());
  EXPECT_FALSE(check.at("all_reachable").get<bool>());
  EXPECT_FALSE(check.at("legs")[0].at("reachable").get<bool>());
  EXPECT_NE(out.str().find("NO"), std::string::npos);
}

TEST(Execute, TrimAndGainsDescribeTheFirstCycle) {
  RunManifest m;
  m.config_path = kConfigPath;
  m.task_path = kOneCyclePath;

  m.subcommand = Subcommand::kTrim;
  std::ostringstream trim, diag;
  execute(m, trim, diag);
  EXPECT_NE(trim.str().find("descend: pitch -0.6"), std::string::npos);
  EXPECT_NE(trim.str().find("ascend: pitch 0.7"), std::string::npos);
  EXPECT_NE(trim.str().find("neutral ballast"), std::string::npos);

  m.subcommand = Subcommand::kGains;
  std::ostringstream gains;
  execute(m, gains, diag);
  EXPECT_NE(gains.str().find("descend K_vertical"), std::string::npos);
  EXPECT_NE(gains.str().find("ascend K_horizontal"), std::string::npos);
}

}  // namespace
}  // namespace glidesim
