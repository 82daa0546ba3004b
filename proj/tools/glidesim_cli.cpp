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

// Mission-runner front end. Four subcommands share one manifest:
//
//   glidesim run   --config c.json --task t.json [--out DIR] [--dt S]
//                  [--max-time S] [--seed N]
//       Fly the mission headless; write trajectory.csv, events.jsonl,
//       summary.json and the plot exports into DIR.
//   glidesim check ...
//       Pre-mission turning-radius reachability check, per-leg verdicts as
//       a table and check.json.
//   glidesim trim  ...
//       Print the descend/ascend equilibria of the first work cycle.
//   glidesim gains ...
//       Print the four LQR gain matrices of the first work cycle.
//
// Exit codes: 0 success, 1 bad configuration or arguments, 2 numerical
// failure, 3 mission-level failure.

#include <exception>
#include <iostream>
#include <string>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "glidesim/io.hpp"

namespace {

void add_common_options(CLI::App* cmd, glidesim::RunManifest* m) {
  cmd->add_option("--config", m->config_path, "Glider config JSON")
      ->required();
  cmd->add_option("--task", m->task_path, "Mission task JSON")->required();
  cmd->add_option("--out", m->out_dir,
                  "Output directory for artifacts (default: out)");
  cmd->add_option_function<double>(
      "--dt", [m](double v) { m->dt = v; },
      "Integrator step override, seconds");
  cmd->add_option_function<double>(
      "--max-time", [m](double v) { m->max_time = v; },
      "Simulated-time budget override, seconds");
  cmd->add_option_function<unsigned>(
      "--seed", [m](unsigned v) { m->seed = v; },
      "Reserved for future stochastic models; accepted and ignored");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"glidesim: underwater-glider mission simulator"};
  app.require_subcommand(1);

  glidesim::RunManifest manifest;
  struct Entry {
    const char* name;
    const char* help;
    glidesim::Subcommand sub;
  };
  const Entry entries[] = {
      {"run", "Fly the mission and write run artifacts",
       glidesim::Subcommand::kRun},
      {"check", "Turning-radius reachability check of every leg",
       glidesim::Subcommand::kCheck},
      {"trim", "Print the first-cycle glide equilibria",
       glidesim::Subcommand::kTrim},
      {"gains", "Print the first-cycle LQR gain matrices",
       glidesim::Subcommand::kGains},
  };
  for (const Entry& e : entries) {
    CLI::App* cmd = app.add_subcommand(e.name, e.help);
    add_common_options(cmd, &manifest);
    cmd->callback([&manifest, sub = e.sub] { manifest.subcommand = sub; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    glidesim::execute(manifest, std::cout, std::cerr);
  } catch (const glidesim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const glidesim::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const glidesim::MissionError& e) {
    std::cerr << "mission error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
