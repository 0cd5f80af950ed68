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

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "pdm/world.hpp"

namespace pdm::fixtures {

inline Polyline line_x(double x0, double x1, double y = 0.0, double step = 5.0)
{
  Polyline out;
  const int n = static_cast<int>(std::ceil((x1 - x0) / step));
  for (int i = 0; i <= n; ++i) {
    out.push_back({x0 + (x1 - x0) * i / n, y});
  }
  return out;
}

inline LaneSegment lane(int id, int roadblock, Polyline centerline, double limit, double half_width = 1.8)
{
  LaneSegment seg;
  seg.id = id;
  seg.roadblock = roadblock;
  seg.left_boundary = offset_polyline(centerline, half_width);
  seg.right_boundary = offset_polyline(centerline, -half_width);
  seg.centerline = std::move(centerline);
  seg.speed_limit = limit;
  return seg;
}

inline Polygon box_polygon(double x0, double x1, double y0, double y1)
{
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

/// Single-lane road along +x from -100 m to 500 m in two segments (ids 1, 2),
/// drivable area 3 m either side of the centerline.
inline std::shared_ptr<WorldMap> straight_map(double limit = 15.0)
{
  std::vector<LaneSegment> segs;
  segs.push_back(lane(1, 1, line_x(-100.0, 200.0), limit));
  segs.push_back(lane(2, 2, line_x(200.0, 500.0), limit));
  segs[0].successors = {2};
  return std::make_shared<WorldMap>(segs, std::vector<Polygon>{box_polygon(-101.0, 501.0, -3.0, 3.0)});
}

/// Ego driving at constant speed v along y = 0 from x = x0 at t = 0.
inline std::vector<EgoState> constant_speed_log(double v, double x0 = 0.0, double duration = 15.0)
{
  std::vector<EgoState> log;
  const int n = static_cast<int>(std::lround((duration + 2.0) * 10.0));
  for (int k = 0; k <= n; ++k) {
    const double t = (k - 20) / 10.0;
    log.push_back({{x0 + v * t, 0.0}, 0.0, {v, 0.0}, {0.0, 0.0}, t});
  }
  return log;
}

inline AgentTrack constant_agent(
  int id, Vec2 start, Vec2 velocity, AgentKind kind = AgentKind::vehicle, double duration = 15.0)
{
  AgentTrack tr;
  tr.id = id;
  tr.kind = kind;
  if (kind == AgentKind::pedestrian) {
    tr.length = 0.5;
    tr.width = 0.5;
  }
  const double heading = velocity.norm() > 0.0 ? std::atan2(velocity.y, velocity.x) : 0.0;
  const int n = static_cast<int>(std::lround((duration + 2.0) * 10.0));
  for (int k = 0; k <= n; ++k) {
    const double t = (k - 20) / 10.0;
    tr.states.push_back({t, start + velocity * t, heading, velocity});
  }
  return tr;
}

inline Scenario straight_scenario(double v, std::vector<AgentTrack> agents = {}, double limit = 15.0)
{
  Scenario sc;
  sc.id = "unit_0000";
  sc.map = straight_map(limit);
  sc.agents = std::move(agents);
  sc.ego_log = constant_speed_log(v);
  sc.route = {1, 2};
  return sc;
}

}  // namespace pdm::fixtures
