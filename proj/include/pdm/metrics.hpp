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
#include <string>
#include <vector>

#include "pdm/engine.hpp"
#include "pdm/route.hpp"
#include "pdm/simkit.hpp"
#include "pdm/world.hpp"

namespace pdm {

struct ComfortBounds {
  double max_lon_accel = 2.4;
  double min_lon_accel = -4.05;
  double max_lat_accel = 4.89;
  double max_jerk = 8.37;
  double max_yaw_rate = 0.95;
};

struct ScoreWeights {
  double ttc = 5.0;
  double progress = 5.0;
  double speed_compliance = 4.0;
  double comfort = 2.0;
};

inline constexpr double kTtcThreshold = 0.95;      // s
inline constexpr double kTtcLookahead = 3.0;       // s
inline constexpr double kMaxOverspeed = 2.23;      // m/s, normalizes speed compliance
inline constexpr double kStationarySpeed = 0.05;   // m/s
inline constexpr double kRearStrikeMargin = 0.5;   // m behind the ego center
inline constexpr double kMinProgress = 2.0;        // m
inline constexpr double kWrongWayDuration = 1.0;   // s

/// Collision the ego is blamed for: footprints overlap while the ego moves and
/// the agent is not entirely behind the rear-strike line.
bool at_fault_collision(const OrientedBox & ego, double ego_speed, const TrackedObject & agent);

/// All four footprint corners inside the drivable area.
bool footprint_drivable(const WorldMap & map, const OrientedBox & ego);

/// Fraction of states within the comfort bounds (jerk from consecutive accels).
double comfort_fraction(
  std::span<const KinematicState> states, double dt, double wheelbase, const ComfortBounds & bounds = {});

/// 1 - (integrated overspeed) / (kMaxOverspeed * duration), floored at 0.
double speed_compliance(std::span<const double> speeds, std::span<const double> limits, double dt);

/// True when the heading error to the path exceeds 90 degrees for at least
/// kWrongWayDuration consecutive seconds.
bool drives_against_path(std::span<const double> heading_errors, double dt);

/// Weighted subscores times multipliers, in [0, 1].
double combine_score(
  bool multipliers_ok, double ttc, double progress, double speed, double comfort, const ScoreWeights & w = {});

struct OlsConfig {
  std::array<double, 3> horizons{3.0, 5.0, 8.0};
  std::array<double, 3> displacement_thresholds{2.0, 4.0, 8.0};
  std::array<double, 3> heading_thresholds{0.8, 0.8, 0.8};
  /// Scenario OLS is zero when more than this fraction of ticks miss.
  double max_miss_rate = 0.3;
};

struct OlsHorizon {
  double ade = 0.0;
  double fde = 0.0;
  double ahe = 0.0;
  double fhe = 0.0;
  bool miss = false;
};

struct OlsReport {
  /// Errors per horizon averaged over ticks.
  std::array<OlsHorizon, 3> horizons{};
  double ade_score = 0.0;
  double fde_score = 0.0;
  double ahe_score = 0.0;
  double fhe_score = 0.0;
  double miss_rate = 0.0;
  std::size_t ticks = 0;
  double ols = 0.0;
};

struct TickOls {
  std::array<OlsHorizon, 3> horizons{};
  std::array<double, 4> subscores{};  // ade, fde, ahe, fhe averaged over horizons
  bool miss = false;
};

/// Scores one prediction made at `t` against the log.
TickOls score_prediction(const Trajectory & prediction, const Scenario & scenario, const OlsConfig & cfg = {});

/// Throws ConfigError when a prediction does not reach the longest horizon.
OlsReport score_open_loop(const OpenLoopLog & log, const Scenario & scenario, const OlsConfig & cfg = {});

struct ClsReport {
  bool no_at_fault_collision = true;
  bool drivable_area = true;
  bool driving_direction = true;
  bool makes_progress = true;
  double ttc = 1.0;
  double progress = 1.0;
  double speed_compliance = 1.0;
  double comfort = 1.0;
  double min_ttc = 0.0;
  double ego_progress = 0.0;
  double expert_progress = 0.0;
  bool incomplete = false;
  double cls = 0.0;
};

/// Time until constant-velocity projections of ego and an agent first overlap
/// (infinity when not within kTtcLookahead). Agents behind the ego or a
/// stationary ego never count.
double time_to_collision(const OrientedBox & ego, const Vec2 & ego_velocity, const TrackedObject & agent);

ClsReport score_closed_loop(
  const RolloutLog & rollout, const Scenario & scenario, const ScoreWeights & w = {},
  const ComfortBounds & comfort = {});

struct ScenarioScores {
  std::string scenario_id;
  double cls_r = 0.0;
  double cls_nr = 0.0;
  double ols = 0.0;
  double runtime_ms = 0.0;
};

struct BenchmarkRow {
  double cls_r = 0.0;
  double cls_nr = 0.0;
  double ols = 0.0;
  double runtime_ms = 0.0;
  double overall = 0.0;
  std::size_t scenarios = 0;
};

/// Means over scenarios; overall = mean(CLS-R, CLS-NR, OLS).
BenchmarkRow aggregate(std::span<const ScenarioScores> scores);

}  // namespace pdm
