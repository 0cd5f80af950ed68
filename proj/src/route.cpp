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

#include "pdm/route.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <tuple>

#include "pdm/errors.hpp"

namespace pdm {

namespace {

std::vector<double> central_headings(const std::vector<Vec2> & pts)
{
  const std::size_t n = pts.size();
  std::vector<double> headings(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 & a = pts[i == 0 ? 0 : i - 1];
    const Vec2 & b = pts[i + 1 < n ? i + 1 : n - 1];
    headings[i] = std::atan2(b.y - a.y, b.x - a.x);
  }
  return headings;
}

}  // namespace

Path Path::with_headings(std::vector<Vec2> points, std::vector<double> headings, std::vector<double> speed_limits)
{
  if (points.size() < 2) {
    throw GeometryError("path needs at least 2 points");
  }
  if (headings.size() != points.size() || speed_limits.size() != points.size()) {
    throw GeometryError("path attribute arrays must match the point count");
  }
  Path path;
  path.points_.resize(points.size());
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (i > 0) {
      const double step = distance(points[i - 1], points[i]);
      if (!(step > 0.0)) {
        throw GeometryError("path points must be distinct");
      }
      s += step;
    }
    path.points_[i] = {points[i], headings[i], s, speed_limits[i]};
  }
  return path;
}

Path Path::from_points(std::vector<Vec2> points, std::vector<double> speed_limits)
{
  if (points.size() < 2) {
    throw GeometryError("path needs at least 2 points");
  }
  std::vector<double> headings = central_headings(points);
  return with_headings(std::move(points), std::move(headings), std::move(speed_limits));
}

Path Path::resampled(std::span<const Vec2> polyline, std::span<const double> speed_limits, double resolution)
{
  if (polyline.size() < 2 || speed_limits.size() != polyline.size()) {
    throw GeometryError("resampling needs >= 2 points with matching speed limits");
  }
  if (!(resolution > 0.0)) {
    throw GeometryError("resolution must be positive");
  }
  std::vector<Vec2> pts;
  std::vector<double> limits;
  const double total = polyline_length(polyline);
  const auto count = static_cast<std::size_t>(std::floor(total / resolution + 1e-9));
  std::size_t seg = 0;
  double seg_start = 0.0;
  for (std::size_t k = 0; k <= count; ++k) {
    const double target = static_cast<double>(k) * resolution;
    double seg_len = distance(polyline[seg], polyline[seg + 1]);
    while (seg + 2 < polyline.size() && seg_start + seg_len < target) {
      seg_start += seg_len;
      ++seg;
      seg_len = distance(polyline[seg], polyline[seg + 1]);
    }
    const double u = seg_len > 0.0 ? std::clamp((target - seg_start) / seg_len, 0.0, 1.0) : 0.0;
    pts.push_back(polyline[seg] + (polyline[seg + 1] - polyline[seg]) * u);
    limits.push_back(speed_limits[seg]);
  }
  if (total - static_cast<double>(count) * resolution > 1e-6) {
    pts.push_back(polyline.back());
    limits.push_back(speed_limits[polyline.size() - 2]);
  }
  return from_points(std::move(pts), std::move(limits));
}

std::size_t Path::index_at(double s) const
{
  const auto it = std::upper_bound(
    points_.begin(), points_.end(), s, [](double v, const PathPoint & p) { return v < p.s; });
  if (it == points_.begin()) {
    return 0;
  }
  return std::min(static_cast<std::size_t>(it - points_.begin()) - 1, points_.size() - 1);
}

Pose2 Path::pose_at(double s) const
{
  if (s <= 0.0) {
    const PathPoint & p = points_.front();
    return {p.position + unit_from_heading(p.heading) * s, p.heading};
  }
  if (s >= length()) {
    const PathPoint & p = points_.back();
    return {p.position + unit_from_heading(p.heading) * (s - p.s), p.heading};
  }
  const std::size_t i = std::min(index_at(s), points_.size() - 2);
  const PathPoint & a = points_[i];
  const PathPoint & b = points_[i + 1];
  const double u = (s - a.s) / (b.s - a.s);
  return {a.position + (b.position - a.position) * u, angle_lerp(a.heading, b.heading, u)};
}

double Path::speed_limit_at(double s) const { return points_[index_at(s)].speed_limit; }

PathProjection Path::project_range(const Pose2 & pose, std::size_t lo, std::size_t hi) const
{
  double best = std::numeric_limits<double>::infinity();
  PathProjection out;
  Vec2 closest;
  hi = std::min(hi, points_.size() - 1);
  lo = std::min(lo, hi == 0 ? 0 : hi - 1);
  for (std::size_t i = lo; i < hi; ++i) {
    const Vec2 & a = points_[i].position;
    const Vec2 & b = points_[i + 1].position;
    const double t = project_to_segment(a, b, pose.position);
    const Vec2 q = a + (b - a) * t;
    const Vec2 diff = pose.position - q;
    const double d2 = dot(diff, diff);
    if (d2 < best) {
      best = d2;
      closest = q;
      out.segment = i;
      out.s = points_[i].s + t * (points_[i + 1].s - points_[i].s);
    }
  }
  const std::size_t i = out.segment;
  const Vec2 tangent = points_[i + 1].position - points_[i].position;
  const double dist = std::sqrt(best);
  const double side = cross(tangent, pose.position - closest);
  out.d = side > 0.0 ? dist : (side < 0.0 ? -dist : 0.0);
  const double u = (out.s - points_[i].s) / (points_[i + 1].s - points_[i].s);
  out.heading_error = wrap_angle(pose.heading - angle_lerp(points_[i].heading, points_[i + 1].heading, u));
  return out;
}

PathProjection Path::project(const Pose2 & pose) const
{
  if (points_.size() < 2) {
    throw GeometryError("cannot project onto an empty path");
  }
  PathProjection out = project_range(pose, 0, points_.size() - 1);
  if (std::abs(out.d) > kMaxProjectionDistance) {
    throw GeometryError("pose too far from path");
  }
  return out;
}

PathProjection Path::project_near(const Pose2 & pose, double s_hint, double window) const
{
  const std::size_t lo = index_at(s_hint - window);
  const std::size_t hi = index_at(s_hint + window) + 2;
  return project_range(pose, lo, hi);
}

Path Path::slice(double s_begin, double s_end) const
{
  s_begin = std::clamp(s_begin, 0.0, length());
  s_end = std::clamp(s_end, s_begin, length());
  std::vector<Vec2> pts;
  std::vector<double> headings;
  std::vector<double> limits;
  auto push = [&](const Pose2 & pose, double limit) {
    if (!pts.empty() && distance(pts.back(), pose.position) < 1e-9) {
      return;
    }
    pts.push_back(pose.position);
    headings.push_back(pose.heading);
    limits.push_back(limit);
  };
  push(pose_at(s_begin), speed_limit_at(s_begin));
  for (const PathPoint & p : points_) {
    if (p.s > s_begin && p.s < s_end) {
      push({p.position, p.heading}, p.speed_limit);
    }
  }
  push(pose_at(s_end), speed_limit_at(s_end));
  if (pts.size() < 2) {
    throw GeometryError("slice is degenerate");
  }
  return with_headings(std::move(pts), std::move(headings), std::move(limits));
}

namespace {

double distance_to_polyline(std::span<const Vec2> line, const Vec2 & p)
{
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < line.size(); ++i) {
    const Vec2 q = line[i - 1] + (line[i] - line[i - 1]) * project_to_segment(line[i - 1], line[i], p);
    best = std::min(best, distance(q, p));
  }
  return best;
}

// Lateral lane hops from `from` to every segment reachable through neighbor links.
std::map<int, int> lane_hops(const WorldMap & map, int from)
{
  std::map<int, int> hops{{from, 0}};
  std::queue<int> frontier;
  frontier.push(from);
  while (!frontier.empty()) {
    const LaneSegment & seg = map.at(frontier.front());
    frontier.pop();
    for (const auto & nb : {seg.left_neighbor, seg.right_neighbor}) {
      if (nb && !hops.contains(*nb)) {
        hops[*nb] = hops[seg.id] + 1;
        frontier.push(*nb);
      }
    }
  }
  return hops;
}

}  // namespace

std::vector<int> search_route(const WorldMap & map, std::span<const int> route, const EgoState & start)
{
  if (route.empty()) {
    throw RouteError("route is empty");
  }
  // Nearest route segment; ties prefer the earlier roadblock, then the lower id.
  std::tuple<double, std::size_t, int> nearest{std::numeric_limits<double>::infinity(), 0, 0};
  for (std::size_t r = 0; r < route.size(); ++r) {
    for (const LaneSegment * seg : map.roadblock(route[r])) {
      const std::tuple<double, std::size_t, int> cand{
        distance_to_polyline(seg->centerline, start.position), r, seg->id};
      nearest = std::min(nearest, cand);
    }
  }
  const auto [start_dist, start_index, start_id] = nearest;
  if (!(start_dist <= kMaxRouteStartDistance)) {
    throw RouteError("start is not within 10 m of any route segment");
  }

  // Dijkstra over (segment, route index); priority (cost, segment id).
  using Node = std::pair<int, std::size_t>;
  struct Label {
    double cost;
    Node parent;
    bool has_parent;
  };
  std::map<Node, Label> labels;
  using Entry = std::tuple<double, int, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  const auto hops = lane_hops(map, start_id);
  for (const LaneSegment * seg : map.roadblock(route[start_index])) {
    const auto it = hops.find(seg->id);
    if (it == hops.end()) {
      continue;
    }
    const double cost = kLaneChangePenalty * it->second + polyline_length(seg->centerline);
    labels[{seg->id, start_index}] = {cost, {}, false};
    open.emplace(cost, seg->id, start_index);
  }

  std::map<Node, bool> closed;
  while (!open.empty()) {
    const auto [cost, id, index] = open.top();
    open.pop();
    const Node node{id, index};
    if (closed[node] || cost > labels[node].cost) {
      continue;
    }
    closed[node] = true;
    for (int succ_id : map.at(id).successors) {
      const LaneSegment & succ = map.at(succ_id);
      std::size_t next_index = index;
      if (succ.roadblock == route[index]) {
        next_index = index;
      } else if (index + 1 < route.size() && succ.roadblock == route[index + 1]) {
        next_index = index + 1;
      } else {
        continue;
      }
      const Node next{succ_id, next_index};
      const double next_cost = cost + polyline_length(succ.centerline);
      auto it = labels.find(next);
      const bool better = it == labels.end() || next_cost < it->second.cost ||
                          (next_cost == it->second.cost && it->second.has_parent && id < it->second.parent.first);
      if (better && !closed[next]) {
        labels[next] = {next_cost, node, true};
        open.emplace(next_cost, succ_id, next_index);
      }
    }
  }

  const std::size_t last = route.size() - 1;
  std::tuple<double, int> goal{std::numeric_limits<double>::infinity(), 0};
  bool found = false;
  for (const auto & [node, label] : labels) {
    if (node.second == last) {
      goal = std::min(goal, {label.cost, node.first});
      found = true;
    }
  }
  if (!found) {
    throw RouteError("no connected lane chain along the route");
  }
  std::vector<int> chain;
  Node node{std::get<1>(goal), last};
  while (true) {
    chain.push_back(node.first);
    const Label & label = labels.at(node);
    if (!label.has_parent) {
      break;
    }
    node = label.parent;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

Path chain_path(const WorldMap & map, std::span<const int> chain, double resolution)
{
  std::vector<Vec2> pts;
  std::vector<double> limits;
  for (int id : chain) {
    const LaneSegment & seg = map.at(id);
    for (const Vec2 & p : seg.centerline) {
      if (!pts.empty() && distance(pts.back(), p) < 1e-6) {
        limits.back() = seg.speed_limit;
        continue;
      }
      pts.push_back(p);
      limits.push_back(seg.speed_limit);
    }
  }
  return Path::resampled(pts, limits, resolution);
}

CenterlineSamples sample_centerline(const Path & path, double s_anchor, double resolution, double length)
{
  if (!(resolution > 0.0) || !(length > 0.0)) {
    throw GeometryError("resolution and length must be positive");
  }
  const auto count = static_cast<std::size_t>(std::ceil(length / resolution - 1e-9));
  CenterlineSamples out;
  out.samples.reserve(count);
  for (std::size_t k = 1; k <= count; ++k) {
    const double s = s_anchor + std::min(static_cast<double>(k) * resolution, length);
    if (s > path.length()) {
      out.truncated = true;
      const PathPoint & last = path.points().back();
      out.samples.push_back({last.position, last.heading});
    } else {
      out.samples.push_back(path.pose_at(s));
    }
  }
  return out;
}

CenterlineSamples extract_centerline(
  const WorldMap & map, std::span<const int> chain, const EgoState & anchor, double resolution, double length)
{
  const Path path = chain_path(map, chain);
  PathProjection proj;
  try {
    proj = path.project({anchor.position, anchor.heading});
  } catch (const GeometryError &) {
    throw GeometryError("anchor does not project onto the lane chain");
  }
  return sample_centerline(path, proj.s, resolution, length);
}

Path offset_path(const Path & path, double d)
{
  const auto & pts = path.points();
  const std::size_t n = pts.size();
  std::vector<Vec2> out;
  std::vector<double> headings;
  std::vector<double> limits;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 < n ? i + 1 : n - 1;
    const double ds = pts[b].s - pts[a].s;
    const double curvature = ds > 0.0 ? wrap_angle(pts[b].heading - pts[a].heading) / ds : 0.0;
    if (std::abs(d * curvature) >= 1.0) {
      throw GeometryError("degenerate offset: |d| reaches the local curvature radius");
    }
    const double h = pts[i].heading;
    out.push_back(pts[i].position + Vec2{-std::sin(h), std::cos(h)} * d);
    headings.push_back(h);
    limits.push_back(pts[i].speed_limit);
  }
  return Path::with_headings(std::move(out), std::move(headings), std::move(limits));
}

}  // namespace pdm
