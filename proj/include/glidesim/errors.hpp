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

#include <stdexcept>
#include <string>

namespace glidesim {

/// Bad or inconsistent user input: config documents, task documents, CLI
/// arguments. Maps to process exit code 1.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical procedure failed its own contract: trim search did not
/// converge, Riccati residual out of tolerance, singular or non-SPD mass
/// matrix, non-finite state. Maps to process exit code 2.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// The mission could not be completed: work-cycle timeout, budget exhausted
/// with waypoints remaining. Maps to process exit code 3.
class MissionError : public std::runtime_error {
 public:
  explicit MissionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace glidesim
