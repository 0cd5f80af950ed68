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

#include <span>
#include <vector>

#include "pdm/geometry.hpp"
#include "pdm/world.hpp"

namespace pdm {

inline constexpr double kPathResolution = 0.25;
inline constexpr double kLaneChangePenalty = 30.0;
inline constexpr double kMaxRouteStartDistance = 10.0;
inline constexpr double kMaxProjectionDistance = 50.0;

struct PathPoint {
  Vec2 position;
  double heading = 0.0;
  double s = 0.0;
  double speed_limit = 0.0;
};

struct PathProjection {
  double s = 0.0;
  /// Signed lateral offset, left positive.
  double d = 0.0;
  double heading_error = 0.0;
  std::size_t segment = 0;
};

/// Arc-length parameterized polyline with per-point heading and speed limit.
class Path {
public:
  Path() = default;

  /// Uses the points as given; headings from central differences of neighbors.
  static Path from_points(std::vector<Vec2> points, std::vector<double> speed_limits);
  /// Keeps the given headings; arc positions recomputed from the points.
  static Path with_headings(
    std::vector<Vec2> points, std::vector<double> headings, std::vector<double> speed_limits);
  /// Resamples a polyline at uniform arc-length steps.
  static Path resampled(
    std::span<const Vec2> polyline, std::span<const double> speed_limits,
    double resolution = kPathResolution);

  const std::vector<PathPoint> & points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  double length() const { return points_.empty() ? 0.0 : points_.back().s; }

  Pose2 pose_at(double s) const;
  double speed_limit_at(double s) const;
  /// Index of the last point with arc position <= s.
  std::size_t index_at(double s) const;

  /// Nearest-point projection; ties resolve to the smaller arc position.
  /// Throws GeometryError beyond kMaxProjectionDistance.
  PathProjection project(const Pose2 & pose) const;
  /// Projection restricted to points within `window` metres of `s_hint`.
  PathProjection project_near(const Pose2 & pose, double s_hint, double window) const;

  /// Sub-path covering [s_begin, s_end] (clamped), arc positions rebased to 0.
  Path slice(double s_begin, double s_end) const;

private:
  PathProjection project_range(const Pose2 & pose, std::size_t lo, std::size_t hi) const;

  std::vector<PathPoint> points_;
};

/// Lane chain along the route, starting at the roadblock nearest to `start`.
/// Cost is arc length plus kLaneChangePenalty per lateral lane hop at the start;
/// ties go to the lowest segment id. Throws RouteError when no chain exists.
std::vector<int> search_route(const WorldMap & map, std::span<const int> route, const EgoState & start);

/// Concatenated centerline of a segment chain as a fine-resolution Path.
Path chain_path(const WorldMap & map, std::span<const int> chain, double resolution = kPathResolution);

/// Fixed-count centerline samples, padded by repeating the last pose when the
/// chain ends early.
struct CenterlineSamples {
  std::vector<Pose2> samples;
  bool truncated = false;
};

/// ceil(length / resolution) samples at arc offsets resolution, 2*resolution, ...
/// (the last clamped to `length`) beyond the anchor's projection.
CenterlineSamples sample_centerline(const Path & path, double s_anchor, double resolution, double length);

CenterlineSamples extract_centerline(
  const WorldMap & map, std::span<const int> chain, const EgoState & anchor, double resolution,
  double length);

/// Parallel path at signed lateral distance d (left positive).
/// Throws GeometryError when |d| reaches the local curvature radius.
Path offset_path(const Path & path, double d);

}  // namespace pdm
