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

#include "pdm/planner.hpp"

#include <algorithm>
#include <cmath>

#include "pdm/errors.hpp"

namespace pdm {

Forecast forecast_agents(std::span<const TrackedObject> agents, double horizon, double dt)
{
  Forecast f;
  f.dt = dt;
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  f.states.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double tau = static_cast<double>(k) * dt;
    f.states[k].reserve(agents.size());
    for (const TrackedObject & a : agents) {
      TrackedObject moved = a;
      moved.position = a.position + a.velocity * tau;
      f.states[k].push_back(moved);
    }
  }
  return f;
}

Trajectory trajectory_from_profile(const Path & path, std::span<const LongitudinalState> profile, double t0, double dt)
{
  Trajectory traj;
  traj.points.reserve(profile.size());
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const Pose2 pose = path.pose_at(profile[k].x);
    traj.points.push_back(
      {t0 + static_cast<double>(k) * dt, pose.position, wrap_angle(pose.heading), profile[k].v});
  }
  return traj;
}

Trajectory braking_trajectory(const EgoState & ego, double t0, double decel)
{
  const Vec2 dir = unit_from_heading(ego.heading);
  const double v0 = std::max(0.0, dot(ego.velocity, dir));
  const double t_stop = v0 / decel;
  Trajectory traj;
  for (std::size_t k = 0; k < kPlanPoints; ++k) {
    const double tau = static_cast<double>(k) * kTickSeconds;
    const double te = std::min(tau, t_stop);
    const double travelled = v0 * te - 0.5 * decel * te * te;
    traj.points.push_back({t0 + tau, ego.position + dir * travelled, ego.heading, std::max(0.0, v0 - decel * tau)});
  }
  return traj;
}

const Path & RouteCache::path_for(const WorldMap & map, std::span<const int> route, const EgoState & ego)
{
  std::vector<int> chain = search_route(map, route, ego);
  if (&map != map_ || chain != chain_) {
    map_ = &map;
    chain_ = std::move(chain);
    path_ = chain_path(map, chain_);
  }
  return path_;
}

void LogReplayPlanner::initialize(const Scenario & scenario) { log_ = scenario.ego_log; }

Trajectory LogReplayPlanner::plan(const Observation & obs)
{
  if (log_.empty()) {
    throw ConfigError("log replay planner used before initialize()");
  }
  const double t_first = log_.front().t;
  const auto start = static_cast<long>(std::llround((obs.t - t_first) / kTickSeconds));
  Trajectory traj;
  for (std::size_t k = 0; k < kPlanPoints; ++k) {
    const double t = obs.t + static_cast<double>(k) * kTickSeconds;
    const long i = start + static_cast<long>(k);
    if (i < static_cast<long>(log_.size())) {
      const EgoState & e = log_[static_cast<std::size_t>(std::max(0L, i))];
      traj.points.push_back({t, e.position, e.heading, e.speed()});
    } else {
      const EgoState & last = log_.back();
      const double tau = t - last.t;
      traj.points.push_back({t, last.position + last.velocity * tau, last.heading, last.speed()});
    }
  }
  return traj;
}

Trajectory ConstantVelocityPlanner::plan(const Observation & obs)
{
  const Vec2 dir = unit_from_heading(obs.ego.heading);
  const double v = std::max(0.0, dot(obs.ego.velocity, dir));
  Trajectory traj;
  for (std::size_t k = 0; k < kPlanPoints; ++k) {
    const double tau = static_cast<double>(k) * kTickSeconds;
    traj.points.push_back({obs.t + tau, obs.ego.position + dir * (v * tau), obs.ego.heading, v});
  }
  return traj;
}

Trajectory IdmPlanner::plan(const Observation & obs)
{
  const Path & full = route_.path_for(*obs.map, obs.route, obs.ego);
  const double s_ego = full.project({obs.ego.position, obs.ego.heading}).s;
  const Path path = full.slice(s_ego - 10.0, s_ego + 200.0);
  const double s0 = std::min(s_ego, 10.0);
  const Forecast forecast = forecast_agents(obs.agents, kForecastHorizon);
  IdmParams p = params_;
  p.target_speed = std::max(0.1, path.speed_limit_at(s0));
  const double v = std::max(0.0, dot(obs.ego.velocity, unit_from_heading(obs.ego.heading)));
  const auto profile =
    rollout_idm(path, {s0, v}, p, forecast.states, kForecastHorizon, kTickSeconds, obs.vehicle);
  return trajectory_from_profile(path, profile, obs.t);
}

EgoState ego_from_kinematic(const KinematicState & s, double t, double wheelbase)
{
  const Vec2 dir = unit_from_heading(s.heading);
  const Vec2 normal{-dir.y, dir.x};
  EgoState e;
  e.t = t;
  e.position = s.position();
  e.heading = s.heading;
  e.velocity = dir * s.v;
  e.acceleration = dir * s.accel + normal * (s.v * s.v * std::tan(s.steering) / wheelbase);
  return e;
}

}  // namespace pdm
