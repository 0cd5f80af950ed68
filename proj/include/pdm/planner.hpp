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

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pdm/idm.hpp"
#include "pdm/route.hpp"
#include "pdm/simkit.hpp"
#include "pdm/world.hpp"

namespace pdm {

inline constexpr double kForecastHorizon = 8.0;  // F [s]
inline constexpr std::size_t kPlanPoints = 81;   // F at 0.1 s, including t

/// What a planner sees at one tick.
struct Observation {
  double t = 0.0;
  long tick = 0;
  EgoState ego;
  /// 21 ego states from t - 2 s to t, chronological; the last equals `ego`.
  std::vector<EgoState> history;
  std::vector<TrackedObject> agents;
  std::shared_ptr<const WorldMap> map;
  std::vector<int> route;
  VehicleParameters vehicle;
};

class Planner {
public:
  virtual ~Planner() = default;
  virtual std::string name() const = 0;
  /// Called once before the first plan() of a scenario.
  virtual void initialize(const Scenario & scenario) { (void)scenario; }
  /// Trajectory starting at obs.t with kPlanPoints samples at 0.1 s.
  virtual Trajectory plan(const Observation & obs) = 0;
};

/// Constant-velocity agent forecast: entry k holds the agents at t + k * dt,
/// k = 0..steps (the current snapshot first).
struct Forecast {
  std::vector<std::vector<TrackedObject>> states;
  double dt = kTickSeconds;
  std::size_t steps() const { return states.empty() ? 0 : states.size() - 1; }
};

Forecast forecast_agents(std::span<const TrackedObject> agents, double horizon, double dt = kTickSeconds);

/// Poses along `path` for a longitudinal profile sampled every dt from t0.
Trajectory trajectory_from_profile(
  const Path & path, std::span<const LongitudinalState> profile, double t0, double dt = kTickSeconds);

/// Full stop at `decel` along the current heading, kPlanPoints samples.
Trajectory braking_trajectory(const EgoState & ego, double t0, double decel);

/// Route chain and fine path for the ego, cached across ticks while the chain
/// stays the same.
class RouteCache {
public:
  /// Throws RouteError when no chain exists.
  const Path & path_for(const WorldMap & map, std::span<const int> route, const EgoState & ego);
  const std::vector<int> & chain() const { return chain_; }

private:
  const WorldMap * map_ = nullptr;
  std::vector<int> chain_;
  Path path_;
};

/// Replays the logged ego future; beyond the log end it extrapolates the last
/// logged velocity.
class LogReplayPlanner : public Planner {
public:
  std::string name() const override { return "log_replay"; }
  void initialize(const Scenario & scenario) override;
  Trajectory plan(const Observation & obs) override;

private:
  std::vector<EgoState> log_;
};

/// Straight-line extrapolation of the current velocity.
class ConstantVelocityPlanner : public Planner {
public:
  std::string name() const override { return "constant_velocity"; }
  Trajectory plan(const Observation & obs) override;
};

/// Single IDM rollout along the route centerline at the speed limit, reacting
/// to constant-velocity forecasts of the agents.
class IdmPlanner : public Planner {
public:
  explicit IdmPlanner(IdmParams params = {}) : params_(params) {}
  std::string name() const override { return "idm"; }
  Trajectory plan(const Observation & obs) override;
  const IdmParams & params() const { return params_; }

private:
  IdmParams params_;
  RouteCache route_;
};

/// Ego state as an EgoState, with lateral acceleration from the steering angle.
EgoState ego_from_kinematic(const KinematicState & s, double t, double wheelbase);

}  // namespace pdm
