// Copyright 2026 lesionkit contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>

#include "lesionkit/harvester.hpp"
#include "lesionkit/simulator.hpp"
#include "lesionkit/tracker.hpp"

namespace lk {

struct RunPaths {
  std::string volumes;
  std::string marks;
  std::string detections;  // may contain "{round}" for per-round files
  std::string scores;      // optional; may contain "{round}"
  std::string eval_marks;  // optional complete marks for convergence checks
  std::string lesions3d;   // optional 3D ground truth
  std::string out;
};

/// One config file drives every pipeline stage. Unknown keys are rejected;
/// every parameter is range-checked. Environment variables prefixed
/// LESIONKIT_ (SEED, MAX_ROUNDS, TG, PRECISION_TARGET, OUT) override the
/// file; command-line flags override both.
struct RunConfig {
  RunPaths paths;
  TrackerConfig tracker;
  HarvestParams harvest;
  int stride = 4;
  uint64_t seed = 1;
  int max_rounds = 6;
  WorldConfig world;
  OracleSkill skill;
  bool has_world = false;
};

RunConfig load_run_config(const std::string& path);
void apply_env_overrides(RunConfig& config);

/// Replaces a "{round}" placeholder; returns the path unchanged otherwise.
std::string round_path(const std::string& templated, int round);

}  // namespace lk
