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

#include "pdm/geometry.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace pdm {

double wrap_angle(double angle)
{
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a <= -std::numbers::pi) {
    a += two_pi;
  } else if (a > std::numbers::pi) {
    a -= two_pi;
  }
  return a;
}

double angle_lerp(double from, double to, double t)
{
  return wrap_angle(from + t * wrap_angle(to - from));
}

Vec2 to_local(const Pose2 & frame, const Vec2 & world)
{
  const Vec2 d = world - frame.position;
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {c * d.x + s * d.y, -s * d.x + c * d.y};
}

Vec2 to_world(const Pose2 & frame, const Vec2 & local)
{
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {frame.position.x + c * local.x - s * local.y, frame.position.y + s * local.x + c * local.y};
}

double polyline_length(std::span<const Vec2> line)
{
  double len = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    len += distance(line[i - 1], line[i]);
  }
  return len;
}

Polyline offset_polyline(std::span<const Vec2> line, double offset)
{
  Polyline out;
  out.reserve(line.size());
  const std::size_t n = line.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 & prev = line[i == 0 ? 0 : i - 1];
    const Vec2 & next = line[i + 1 < n ? i + 1 : n - 1];
    const Vec2 t = next - prev;
    const double len = t.norm();
    const Vec2 normal = len > 0.0 ? Vec2{-t.y / len, t.x / len} : Vec2{0.0, 1.0};
    out.push_back(line[i] + normal * offset);
  }
  return out;
}

std::array<Vec2, 4> OrientedBox::corners() const
{
  const Vec2 f = unit_from_heading(heading) * (0.5 * length);
  const Vec2 l = Vec2{-std::sin(heading), std::cos(heading)} * (0.5 * width);
  return {center + f + l, center + f - l, center - f - l, center - f + l};
}

namespace {

// Half-extent of a box projected on a unit axis.
double projected_radius(const OrientedBox & b, const Vec2 & axis)
{
  const Vec2 f = unit_from_heading(b.heading);
  const Vec2 l{-f.y, f.x};
  return 0.5 * b.length * std::abs(dot(f, axis)) + 0.5 * b.width * std::abs(dot(l, axis));
}

}  // namespace

bool OrientedBox::intersects(const OrientedBox & other) const
{
  const Vec2 d = other.center - center;
  const double reach = 0.5 * (std::hypot(length, width) + std::hypot(other.length, other.width));
  if (dot(d, d) > reach * reach) {
    return false;
  }
  const Vec2 fa = unit_from_heading(heading);
  const Vec2 fb = unit_from_heading(other.heading);
  const std::array<Vec2, 4> axes{fa, Vec2{-fa.y, fa.x}, fb, Vec2{-fb.y, fb.x}};
  for (const Vec2 & axis : axes) {
    if (std::abs(dot(d, axis)) > projected_radius(*this, axis) + projected_radius(other, axis)) {
      return false;
    }
  }
  return true;
}

bool point_in_polygon(std::span<const Vec2> polygon, const Vec2 & p)
{
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 & a = polygon[i];
    const Vec2 & b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) {
        inside = !inside;
      }
    }
  }
  return inside;
}

bool segments_intersect(const Vec2 & a0, const Vec2 & a1, const Vec2 & b0, const Vec2 & b1)
{
  const double d1 = cross(a1 - a0, b0 - a0);
  const double d2 = cross(a1 - a0, b1 - a0);
  const double d3 = cross(b1 - b0, a0 - b0);
  const double d4 = cross(b1 - b0, a1 - b0);
  return ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0));
}

double project_to_segment(const Vec2 & a, const Vec2 & b, const Vec2 & p)
{
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 <= 0.0) {
    return 0.0;
  }
  return std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
}

PolygonIndex::PolygonIndex(std::vector<Polygon> polygons, double cell_size)
: polygons_(std::move(polygons)), cell_(cell_size)
{
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const auto & poly : polygons_) {
    for (const Vec2 & v : poly) {
      min_x = std::min(min_x, v.x);
      min_y = std::min(min_y, v.y);
      max_x = std::max(max_x, v.x);
      max_y = std::max(max_y, v.y);
    }
  }
  if (polygons_.empty()) {
    return;
  }
  origin_ = {min_x - cell_, min_y - cell_};
  nx_ = static_cast<std::int64_t>(std::ceil((max_x - origin_.x) / cell_)) + 2;
  ny_ = static_cast<std::int64_t>(std::ceil((max_y - origin_.y) / cell_)) + 2;
  cells_.resize(static_cast<std::size_t>(nx_ * ny_));

  for (std::uint32_t k = 0; k < polygons_.size(); ++k) {
    const Polygon & poly = polygons_[k];
    const std::size_t n = poly.size();
    // Scanline fill over cell-center rows.
    std::map<std::int64_t, std::vector<double>> row_crossings;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2 & a = poly[i];
      const Vec2 & b = poly[j];
      const auto r0 = static_cast<std::int64_t>(std::floor((std::min(a.y, b.y) - origin_.y) / cell_));
      const auto r1 = static_cast<std::int64_t>(std::floor((std::max(a.y, b.y) - origin_.y) / cell_));
      for (std::int64_t r = std::max<std::int64_t>(r0, 0); r <= std::min(r1, ny_ - 1); ++r) {
        const double yc = origin_.y + (static_cast<double>(r) + 0.5) * cell_;
        if ((a.y > yc) != (b.y > yc)) {
          row_crossings[r].push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
        }
      }
      // Edge-to-cell registration over the edge bounding box.
      const auto c0 = static_cast<std::int64_t>(std::floor((std::min(a.x, b.x) - origin_.x) / cell_));
      const auto c1 = static_cast<std::int64_t>(std::floor((std::max(a.x, b.x) - origin_.x) / cell_));
      for (std::int64_t r = std::max<std::int64_t>(r0, 0); r <= std::min(r1, ny_ - 1); ++r) {
        for (std::int64_t c = std::max<std::int64_t>(c0, 0); c <= std::min(c1, nx_ - 1); ++c) {
          cells_[static_cast<std::size_t>(r * nx_ + c)].edges.push_back(
            {k, static_cast<std::uint32_t>(i)});
        }
      }
    }
    for (auto & [r, xs] : row_crossings) {
      std::sort(xs.begin(), xs.end());
      for (std::size_t q = 0; q + 1 < xs.size(); q += 2) {
        // Cells whose center x lies in [xs[q], xs[q+1]).
        const auto c0 =
          static_cast<std::int64_t>(std::ceil((xs[q] - origin_.x) / cell_ - 0.5));
        const auto c1 =
          static_cast<std::int64_t>(std::ceil((xs[q + 1] - origin_.x) / cell_ - 0.5)) - 1;
        for (std::int64_t c = std::max<std::int64_t>(c0, 0); c <= std::min(c1, nx_ - 1); ++c) {
          auto & inside = cells_[static_cast<std::size_t>(r * nx_ + c)].inside_polygons;
          if (inside.empty() || inside.back() != k) {
            inside.push_back(k);
          }
        }
      }
    }
  }
}

std::int64_t PolygonIndex::cell_of(const Vec2 & p, bool & valid) const
{
  const auto c = static_cast<std::int64_t>(std::floor((p.x - origin_.x) / cell_));
  const auto r = static_cast<std::int64_t>(std::floor((p.y - origin_.y) / cell_));
  valid = c >= 0 && r >= 0 && c < nx_ && r < ny_;
  return r * nx_ + c;
}

bool PolygonIndex::contains_slow(const Vec2 & p) const
{
  return std::any_of(polygons_.begin(), polygons_.end(), [&](const Polygon & poly) {
    return point_in_polygon(poly, p);
  });
}

bool PolygonIndex::contains(const Vec2 & p) const
{
  if (polygons_.empty()) {
    return false;
  }
  bool valid = false;
  const std::int64_t idx = cell_of(p, valid);
  if (!valid) {
    return false;
  }
  const Cell & cell = cells_[static_cast<std::size_t>(idx)];
  if (cell.edges.empty()) {
    return !cell.inside_polygons.empty();
  }
  const auto r = idx / nx_;
  const auto c = idx % nx_;
  const Vec2 center{
    origin_.x + (static_cast<double>(c) + 0.5) * cell_, origin_.y + (static_cast<double>(r) + 0.5) * cell_};

  // Parity per polygon touching this cell, seeded from the center state.
  std::vector<std::pair<std::uint32_t, bool>> parity;
  parity.reserve(cell.inside_polygons.size() + 4);
  for (std::uint32_t k : cell.inside_polygons) {
    parity.emplace_back(k, true);
  }
  auto flip = [&parity](std::uint32_t k) {
    for (auto & [poly, inside] : parity) {
      if (poly == k) {
        inside = !inside;
        return;
      }
    }
    parity.emplace_back(k, true);
  };
  for (const EdgeRef & e : cell.edges) {
    const Polygon & poly = polygons_[e.polygon];
    const Vec2 & a = poly[e.vertex];
    const Vec2 & b = poly[e.vertex == 0 ? poly.size() - 1 : e.vertex - 1];
    const double d1 = cross(b - a, center - a);
    const double d2 = cross(b - a, p - a);
    const double d3 = cross(p - center, a - center);
    const double d4 = cross(p - center, b - center);
    if (d1 == 0.0 || d2 == 0.0 || d3 == 0.0 || d4 == 0.0) {
      // Degenerate touch; fall back to the exact test.
      return contains_slow(p);
    }
    if (((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0))) {
      flip(e.polygon);
    }
  }
  return std::any_of(parity.begin(), parity.end(), [](const auto & kv) { return kv.second; });
}

}  // namespace pdm
