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

#include <array>
#include <span>
#include <vector>

#include "pdm/geometry.hpp"
#include "pdm/world.hpp"

namespace pdm {

inline constexpr double kMaxSteeringAngle = 0.55;  // rad
inline constexpr double kMaxAcceleration = 4.0;    // m/s^2, both directions
inline constexpr double kMaxSteeringRate = 0.5;    // rad/s

struct KinematicState {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double v = 0.0;
  double steering = 0.0;
  double accel = 0.0;

  Vec2 position() const { return {x, y}; }
  Pose2 pose() const { return {{x, y}, heading}; }
  bool operator==(const KinematicState &) const = default;
};

struct ControlCommand {
  double accel = 0.0;
  double steering_rate = 0.0;

  bool operator==(const ControlCommand &) const = default;
};

struct TrajectoryPoint {
  double t = 0.0;
  Vec2 position;
  double heading = 0.0;
  double v = 0.0;

  bool operator==(const TrajectoryPoint &) const = default;
};

/// Timed ego waypoints at uniform 0.1 s spacing starting at the planning time.
struct Trajectory {
  std::vector<TrajectoryPoint> points;

  double start_time() const { return points.front().t; }
  double end_time() const { return points.back().t; }
  /// Linear interpolation in time, clamped to the covered span.
  TrajectoryPoint at(double t) const;
  bool operator==(const Trajectory &) const = default;
};

/// Kinematic bicycle step integrated with the explicit midpoint rule.
/// Commands are clamped to their bounds first; steering angle and speed are
/// clamped after integration.
KinematicState bicycle_step(
  const KinematicState & s, const ControlCommand & cmd, double dt, double wheelbase);

/// Fixed LQR gains for the decoupled trajectory tracker.
struct LqrGains {
  /// Double integrator (station error, speed error); Q = diag(1, 0.1), R = 1, dt = 0.1.
  static constexpr std::array<double, 2> longitudinal{0.93012068224113043, 1.3952611987852317};
  /// Linearized lateral dynamics (lateral error, heading error) at integer
  /// speeds 1..20 m/s; Q = diag(1, 2), R = 8, dt = 0.1, wheelbase 3.1 m.
  static const std::array<std::array<double, 2>, 20> lateral;
  /// Lateral gain interpolated in speed (clamped to the table range).
  static std::array<double, 2> lateral_at(double speed);
};

struct TrackerParams {
  double dt = 0.1;
  double wheelbase = 3.1;
  /// Longitudinal reference point ahead of the current time [s].
  double reference_lead = 0.5;
  /// Only waypoints with t <= t_now + lookahead are read.
  double lookahead = 2.0;
};

/// Decoupled LQR trajectory tracker. Reads only waypoints up to
/// `t_now + lookahead`; throws GeometryError if the trajectory ends earlier.
ControlCommand track(
  const Trajectory & trajectory, const KinematicState & state, double t_now, const TrackerParams & params = {});

inline ControlCommand track(const Trajectory & trajectory, const KinematicState & state)
{
  return track(trajectory, state, trajectory.start_time());
}

/// Tracks a fixed trajectory for `steps` ticks from `initial`, re-querying the
/// controller with the advancing clock. Returns steps + 1 states.
std::vector<KinematicState> simulate_tracking(
  const Trajectory & trajectory, const KinematicState & initial, std::size_t steps,
  const TrackerParams & params = {});

/// Kinematic state matching a logged ego sample; steering from the log's yaw
/// rate when a neighbouring sample is available.
KinematicState kinematic_from_ego(const EgoState & ego, const EgoState * next, double wheelbase);

}  // namespace pdm
