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

#include "pdm/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pdm/errors.hpp"

namespace pdm {

namespace {

bool finite(const Vec2 & v) { return std::isfinite(v.x) && std::isfinite(v.y); }

bool on_polygon_edge(const Polygon & poly, const Vec2 & p, double tol)
{
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const double u = project_to_segment(poly[j], poly[i], p);
    if (distance(poly[j] + (poly[i] - poly[j]) * u, p) <= tol) {
      return true;
    }
  }
  return false;
}

// Boundary vertices sit on the drivable polygons' edges when the strip is
// tight, so membership is probed a centimetre toward the centerline (and, at
// the ends, a centimetre along the boundary).
void check_strip_in_drivable(const WorldMap & map, const LaneSegment & seg)
{
  auto probe = [&](const Polyline & boundary) {
    for (std::size_t k = 0; k < boundary.size(); ++k) {
      const Vec2 & b = boundary[k];
      double best = std::numeric_limits<double>::infinity();
      Vec2 nearest = b;
      for (std::size_t i = 1; i < seg.centerline.size(); ++i) {
        const Vec2 & a0 = seg.centerline[i - 1];
        const Vec2 & a1 = seg.centerline[i];
        const Vec2 q = a0 + (a1 - a0) * project_to_segment(a0, a1, b);
        const double d = distance(q, b);
        if (d < best) {
          best = d;
          nearest = q;
        }
      }
      Vec2 inward = best > 0.0 ? b + (nearest - b) * (0.01 / best) : b;
      if (k == 0 || k + 1 == boundary.size()) {
        const Vec2 along = boundary[k == 0 ? 1 : k - 1] - b;
        const double n = along.norm();
        if (n > 0.0) {
          inward += along * (0.01 / n);
        }
      }
      if (!map.in_drivable_area(inward)) {
        throw InvariantError(
          "segment " + std::to_string(seg.id) + ": boundary strip not contained in drivable_area");
      }
    }
  };
  probe(seg.left_boundary);
  probe(seg.right_boundary);
}

}  // namespace

WorldMap::WorldMap(std::vector<LaneSegment> segments, std::vector<Polygon> drivable_area)
: segments_(std::move(segments)), drivable_(std::move(drivable_area))
{
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const LaneSegment & seg = segments_[i];
    if (!by_id_.emplace(seg.id, i).second) {
      throw InvariantError("duplicate segment id " + std::to_string(seg.id));
    }
  }
  for (const LaneSegment & seg : segments_) {
    const std::string tag = "segment " + std::to_string(seg.id) + ": ";
    if (seg.centerline.size() < 2) {
      throw InvariantError(tag + "centerline needs at least 2 points");
    }
    for (std::size_t i = 0; i < seg.centerline.size(); ++i) {
      if (!finite(seg.centerline[i])) {
        throw InvariantError(tag + "non-finite centerline point");
      }
      if (i > 0 && seg.centerline[i] == seg.centerline[i - 1]) {
        throw InvariantError(tag + "consecutive centerline points must be distinct");
      }
    }
    if (!std::isfinite(seg.speed_limit) || seg.speed_limit <= 0.0) {
      throw InvariantError(tag + "speed_limit must be finite and positive");
    }
    if (seg.left_boundary.size() < 2 || seg.right_boundary.size() < 2) {
      throw InvariantError(tag + "boundaries need at least 2 points");
    }
    for (int succ : seg.successors) {
      if (!by_id_.contains(succ)) {
        throw InvariantError(tag + "unresolved successor id " + std::to_string(succ));
      }
    }
    for (const auto & nb : {seg.left_neighbor, seg.right_neighbor}) {
      if (nb && !by_id_.contains(*nb)) {
        throw InvariantError(tag + "unresolved neighbor id " + std::to_string(*nb));
      }
    }
    // Centerline inside its own boundary strip.
    Polygon strip = seg.left_boundary;
    strip.insert(strip.end(), seg.right_boundary.rbegin(), seg.right_boundary.rend());
    for (const Vec2 & p : seg.centerline) {
      if (!point_in_polygon(strip, p) && !on_polygon_edge(strip, p, 1e-6)) {
        throw InvariantError(tag + "centerline point outside its boundary strip");
      }
    }
  }
  for (const LaneSegment & seg : segments_) {
    check_strip_in_drivable(*this, seg);
  }
}

const LaneSegment * WorldMap::find(int id) const
{
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &segments_[it->second];
}

const LaneSegment & WorldMap::at(int id) const
{
  const LaneSegment * seg = find(id);
  if (seg == nullptr) {
    throw InvariantError("unknown segment id " + std::to_string(id));
  }
  return *seg;
}

std::vector<const LaneSegment *> WorldMap::roadblock(int roadblock_id) const
{
  std::vector<const LaneSegment *> out;
  for (const LaneSegment & seg : segments_) {
    if (seg.roadblock == roadblock_id) {
      out.push_back(&seg);
    }
  }
  return out;
}

const char * to_string(AgentKind kind)
{
  switch (kind) {
    case AgentKind::vehicle:
      return "vehicle";
    case AgentKind::pedestrian:
      return "pedestrian";
    case AgentKind::static_object:
      return "static";
  }
  return "vehicle";
}

AgentKind agent_kind_from_string(const std::string & name)
{
  if (name == "vehicle") {
    return AgentKind::vehicle;
  }
  if (name == "pedestrian") {
    return AgentKind::pedestrian;
  }
  if (name == "static") {
    return AgentKind::static_object;
  }
  throw ParseError("unknown agent kind '" + name + "'");
}

bool AgentTrack::covers(double t) const
{
  constexpr double eps = 1e-9;
  return !states.empty() && t >= start_time() - eps && t <= end_time() + eps;
}

AgentState agent_state_at(const AgentTrack & track, double t)
{
  if (!track.covers(t)) {
    throw GeometryError(
      "agent " + std::to_string(track.id) + ": time " + std::to_string(t) + " outside track span");
  }
  const auto & s = track.states;
  if (s.size() == 1) {
    return s.front();
  }
  const double step = s[1].t - s[0].t;
  auto i = static_cast<std::size_t>(std::max(0.0, std::floor((t - s.front().t) / step)));
  i = std::min(i, s.size() - 2);
  // Recover from accumulated rounding in the floor.
  while (i > 0 && t < s[i].t) {
    --i;
  }
  while (i + 2 < s.size() && t > s[i + 1].t) {
    ++i;
  }
  const AgentState & a = s[i];
  const AgentState & b = s[i + 1];
  if (t == a.t) {
    return a;
  }
  if (t == b.t) {
    return b;
  }
  const double u = std::clamp((t - a.t) / (b.t - a.t), 0.0, 1.0);
  AgentState out;
  out.t = t;
  out.position = a.position + (b.position - a.position) * u;
  out.velocity = a.velocity + (b.velocity - a.velocity) * u;
  out.heading = angle_lerp(a.heading, b.heading, u);
  return out;
}

TrackedObject tracked_object(const AgentTrack & track, const AgentState & state)
{
  return {track.id, track.kind, state.position, state.heading, state.velocity, track.length, track.width};
}

std::vector<TrackedObject> agents_at(const Scenario & scenario, double t)
{
  std::vector<TrackedObject> out;
  for (const AgentTrack & track : scenario.agents) {
    if (track.covers(t)) {
      out.push_back(tracked_object(track, agent_state_at(track, t)));
    }
  }
  return out;
}

const EgoState & Scenario::ego_at_tick(long k) const
{
  const long idx = k + static_cast<long>(history_ticks());
  if (idx < 0 || idx >= static_cast<long>(ego_log.size())) {
    throw GeometryError("ego log has no sample for tick " + std::to_string(k));
  }
  return ego_log[static_cast<std::size_t>(idx)];
}

bool Scenario::operator==(const Scenario & other) const
{
  const bool maps_equal =
    (map == other.map) || (map != nullptr && other.map != nullptr && *map == *other.map);
  return id == other.id && maps_equal && agents == other.agents && ego_log == other.ego_log &&
         route == other.route && duration == other.duration && frequency == other.frequency;
}

void validate_scenario(const Scenario & sc)
{
  if (!sc.map) {
    throw InvariantError("scenario has no map");
  }
  if (!(sc.duration > 0.0) || !(sc.frequency > 0.0)) {
    throw InvariantError("duration and frequency must be positive");
  }
  const double dt = 1.0 / sc.frequency;
  constexpr double tol = 1e-6;
  std::set<int> agent_ids;
  for (const AgentTrack & track : sc.agents) {
    const std::string tag = "agent " + std::to_string(track.id) + ": ";
    if (!agent_ids.insert(track.id).second) {
      throw InvariantError(tag + "duplicate agent id");
    }
    if (!(track.length > 0.0) || !(track.width > 0.0)) {
      throw InvariantError(tag + "footprint dimensions must be positive");
    }
    if (track.states.empty()) {
      throw InvariantError(tag + "track has no states");
    }
    for (std::size_t i = 1; i < track.states.size(); ++i) {
      if (std::abs(track.states[i].t - track.states[i - 1].t - dt) > tol) {
        throw InvariantError(tag + "timestamps must be strictly increasing at the scenario frequency");
      }
    }
  }
  if (sc.ego_log.empty()) {
    throw InvariantError("ego_log is empty");
  }
  for (std::size_t i = 0; i < sc.ego_log.size(); ++i) {
    const EgoState & e = sc.ego_log[i];
    if (!finite(e.position) || !finite(e.velocity) || !finite(e.acceleration) || !std::isfinite(e.heading)) {
      throw InvariantError("ego_log: non-finite component");
    }
    if (!(e.heading > -std::numbers::pi && e.heading <= std::numbers::pi)) {
      throw InvariantError("ego_log: heading outside (-pi, pi]");
    }
    if (i > 0 && std::abs(e.t - sc.ego_log[i - 1].t - dt) > tol) {
      throw InvariantError("ego_log: timestamps must be uniform at the scenario frequency");
    }
  }
  if (sc.ego_log.front().t > -kHistorySeconds + tol || sc.ego_log.back().t < sc.duration - tol) {
    throw InvariantError("ego_log must cover [-2 s, duration]");
  }
  if (std::abs(sc.ego_log[sc.history_ticks()].t) > tol) {
    throw InvariantError("ego_log must start exactly 2 s before t = 0");
  }
  if (sc.route.empty()) {
    throw InvariantError("route is empty");
  }
  for (int rb : sc.route) {
    if (sc.map->roadblock(rb).empty()) {
      throw InvariantError("unresolved route id " + std::to_string(rb));
    }
  }
  for (std::size_t i = 0; i + 1 < sc.route.size(); ++i) {
    bool linked = false;
    for (const LaneSegment * seg : sc.map->roadblock(sc.route[i])) {
      for (int succ : seg->successors) {
        linked = linked || sc.map->at(succ).roadblock == sc.route[i + 1];
      }
    }
    if (!linked) {
      throw InvariantError(
        "route is not connected between roadblocks " + std::to_string(sc.route[i]) + " and " +
        std::to_string(sc.route[i + 1]));
    }
  }
}

}  // namespace pdm
