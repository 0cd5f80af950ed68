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
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace pdm {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(const Vec2 & o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2 & o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
  constexpr Vec2 & operator+=(const Vec2 & o)
  {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2 &) const = default;

  double norm() const { return std::hypot(x, y); }
};

constexpr double dot(const Vec2 & a, const Vec2 & b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(const Vec2 & a, const Vec2 & b) { return a.x * b.y - a.y * b.x; }
inline double distance(const Vec2 & a, const Vec2 & b) { return (a - b).norm(); }
inline Vec2 unit_from_heading(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

/// Interpolates headings along the shorter arc of the unit circle.
double angle_lerp(double from, double to, double t);

struct Pose2 {
  Vec2 position;
  double heading = 0.0;

  bool operator==(const Pose2 &) const = default;
};

/// Expresses a world point in the frame of `frame`.
Vec2 to_local(const Pose2 & frame, const Vec2 & world);
/// Inverse of to_local.
Vec2 to_world(const Pose2 & frame, const Vec2 & local);

using Polyline = std::vector<Vec2>;
using Polygon = std::vector<Vec2>;

double polyline_length(std::span<const Vec2> line);

/// Parallel curve at signed distance (left positive) using per-vertex normals.
Polyline offset_polyline(std::span<const Vec2> line, double offset);

/// Rectangle footprint centered on a pose.
struct OrientedBox {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;

  std::array<Vec2, 4> corners() const;
  bool intersects(const OrientedBox & other) const;
};

/// Crossing-number test; boundary points may land on either side.
bool point_in_polygon(std::span<const Vec2> polygon, const Vec2 & p);

bool segments_intersect(const Vec2 & a0, const Vec2 & a1, const Vec2 & b0, const Vec2 & b1);

/// Closest point on segment [a, b] to p, as the clamped parameter in [0, 1].
double project_to_segment(const Vec2 & a, const Vec2 & b, const Vec2 & p);

/// Uniform-grid accelerated membership test for a union of simple polygons.
///
/// Each cell stores whether its center lies inside the union plus the polygon
/// edges that touch it. A query counts edge crossings on the short segment from
/// the cell center to the point and flips the stored parity per polygon.
class PolygonIndex {
public:
  PolygonIndex() = default;
  explicit PolygonIndex(std::vector<Polygon> polygons, double cell_size = 2.0);

  bool contains(const Vec2 & p) const;
  const std::vector<Polygon> & polygons() const { return polygons_; }
  bool empty() const { return polygons_.empty(); }

private:
  struct EdgeRef {
    std::uint32_t polygon;
    std::uint32_t vertex;
  };
  struct Cell {
    std::vector<EdgeRef> edges;
    // One parity bit per polygon whose bounding box covers the cell center.
    std::vector<std::uint32_t> inside_polygons;
  };

  bool contains_slow(const Vec2 & p) const;
  std::int64_t cell_of(const Vec2 & p, bool & valid) const;

  std::vector<Polygon> polygons_;
  double cell_ = 2.0;
  Vec2 origin_;
  std::int64_t nx_ = 0;
  std::int64_t ny_ = 0;
  std::vector<Cell> cells_;
};

}  // namespace pdm
