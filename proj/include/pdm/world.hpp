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
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pdm/geometry.hpp"

namespace pdm {

inline constexpr double kTickSeconds = 0.1;
inline constexpr double kScenarioDuration = 15.0;
inline constexpr double kScenarioFrequency = 10.0;
inline constexpr double kHistorySeconds = 2.0;

/// Ego vehicle geometry shared by planners, simulator and metrics.
struct VehicleParameters {
  double length = 4.6;
  double width = 1.9;
  double wheelbase = 3.1;
};

struct LaneSegment {
  int id = 0;
  /// Group of laterally adjacent lanes; routes are expressed in roadblocks.
  int roadblock = 0;
  Polyline centerline;
  std::vector<int> successors;
  double speed_limit = 0.0;
  Polyline left_boundary;
  Polyline right_boundary;
  std::optional<int> left_neighbor;
  std::optional<int> right_neighbor;

  bool operator==(const LaneSegment &) const = default;
};

class WorldMap {
public:
  WorldMap() = default;
  /// Validates all map invariants; throws InvariantError naming the violated rule.
  WorldMap(std::vector<LaneSegment> segments, std::vector<Polygon> drivable_area);

  const std::vector<LaneSegment> & segments() const { return segments_; }
  const std::vector<Polygon> & drivable_area() const { return drivable_.polygons(); }

  const LaneSegment * find(int id) const;
  const LaneSegment & at(int id) const;
  std::vector<const LaneSegment *> roadblock(int roadblock_id) const;

  bool in_drivable_area(const Vec2 & p) const { return drivable_.contains(p); }

  bool operator==(const WorldMap & other) const
  {
    return segments_ == other.segments_ && drivable_area() == other.drivable_area();
  }

private:
  std::vector<LaneSegment> segments_;
  PolygonIndex drivable_;
  std::unordered_map<int, std::size_t> by_id_;
};

enum class AgentKind { vehicle, pedestrian, static_object };

const char * to_string(AgentKind kind);
AgentKind agent_kind_from_string(const std::string & name);

struct AgentState {
  double t = 0.0;
  Vec2 position;
  double heading = 0.0;
  Vec2 velocity;

  bool operator==(const AgentState &) const = default;
};

struct AgentTrack {
  int id = 0;
  AgentKind kind = AgentKind::vehicle;
  std::vector<AgentState> states;
  double length = 4.6;
  double width = 1.9;

  double start_time() const { return states.front().t; }
  double end_time() const { return states.back().t; }
  bool covers(double t) const;

  bool operator==(const AgentTrack &) const = default;
};

/// Linear interpolation of position and velocity, shortest-arc heading.
/// Throws GeometryError when t is outside the track span.
AgentState agent_state_at(const AgentTrack & track, double t);

struct Scenario;

/// Snapshot of one agent as seen by planners and the simulator.
struct TrackedObject {
  int id = 0;
  AgentKind kind = AgentKind::vehicle;
  Vec2 position;
  double heading = 0.0;
  Vec2 velocity;
  double length = 0.0;
  double width = 0.0;

  OrientedBox box() const { return {position, heading, length, width}; }
  bool operator==(const TrackedObject &) const = default;
};

TrackedObject tracked_object(const AgentTrack & track, const AgentState & state);

/// Agents whose tracks cover time t, in track order.
std::vector<TrackedObject> agents_at(const Scenario & scenario, double t);

struct EgoState {
  Vec2 position;
  double heading = 0.0;
  Vec2 velocity;
  Vec2 acceleration;
  double t = 0.0;

  double speed() const { return velocity.norm(); }
  bool operator==(const EgoState &) const = default;
};

struct Scenario {
  std::string id;
  std::shared_ptr<const WorldMap> map;
  std::vector<AgentTrack> agents;
  /// 10 Hz samples covering [-2 s, duration].
  std::vector<EgoState> ego_log;
  std::vector<int> route;
  double duration = kScenarioDuration;
  double frequency = kScenarioFrequency;

  std::size_t history_ticks() const { return static_cast<std::size_t>(kHistorySeconds * frequency + 0.5); }
  std::size_t num_ticks() const { return static_cast<std::size_t>(duration * frequency + 0.5); }
  /// Logged ego state at tick k (k = 0 is t = 0; negative ticks reach into history).
  const EgoState & ego_at_tick(long k) const;

  bool operator==(const Scenario & other) const;
};

/// Throws InvariantError naming the first violated scenario rule.
void validate_scenario(const Scenario & scenario);

}  // namespace pdm
