// Copyright 2026 The PDM Planner Authors
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

#include <string>
#include <vector>

#include "pdm/planner.hpp"
#include "pdm/simkit.hpp"
#include "pdm/world.hpp"

namespace pdm {

enum class SimMode { non_reactive, reactive };

const char * to_string(SimMode mode);
SimMode sim_mode_from_string(const std::string & name);

inline constexpr int kRolloutSchemaVersion = 1;

/// One closed-loop simulation. Index k of `ego`, `states` and `agents` is
/// tick k (t = k / 10); commands and runtimes exist for every planned tick.
struct RolloutLog {
  std::string scenario_id;
  std::string planner;
  SimMode mode = SimMode::non_reactive;
  bool aborted = false;
  std::string error;
  std::vector<KinematicState> states;
  std::vector<EgoState> ego;
  std::vector<ControlCommand> commands;
  std::vector<double> runtime_ms;
  std::vector<std::vector<TrackedObject>> agents;

  bool operator==(const RolloutLog &) const = default;
};

struct EngineOptions {
  /// Ticks to simulate; 0 means the scenario length.
  std::size_t ticks = 0;
  /// Record wall-clock planner runtimes (otherwise zeros).
  bool timing = true;
  TrackerParams tracker;
};

/// Re-plans every tick, tracks the plan and propagates the ego. Planner
/// exceptions abort the rollout and are recorded, not raised.
RolloutLog run_closed_loop(
  const Scenario & scenario, Planner & planner, SimMode mode, const EngineOptions & options = {});

struct OpenLoopLog {
  std::string scenario_id;
  std::string planner;
  bool aborted = false;
  std::string error;
  std::vector<double> times;
  std::vector<Trajectory> predictions;
  std::vector<double> runtime_ms;
};

/// Queries the planner on logged states at every tick whose 8 s future lies
/// inside the log (all ticks when `all_ticks`).
OpenLoopLog run_open_loop(
  const Scenario & scenario, Planner & planner, bool timing = true, bool all_ticks = false);

/// Observation built from the scenario log at tick k.
Observation logged_observation(const Scenario & scenario, long tick);

std::string serialize_rollout(const RolloutLog & log);
RolloutLog parse_rollout(const std::string & text);

}  // namespace pdm
