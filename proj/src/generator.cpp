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

#include "pdm/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

#include "pdm/errors.hpp"
#include "pdm/idm.hpp"
#include "pdm/route.hpp"

namespace pdm {

std::uint64_t SplitMix::next()
{
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix::uniform(double lo, double hi)
{
  const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

const std::vector<std::string> & scenario_templates()
{
  static const std::vector<std::string> names{
    "straight", "curve", "lane_fork", "lead_vehicle_brake", "crossing_pedestrian", "stop_and_go"};
  return names;
}

namespace {

constexpr double kLaneHalfWidth = 1.8;
constexpr double kShoulder = 1.2;
constexpr double kRoadStart = -80.0;
constexpr double kChunkLength = 130.0;
constexpr double kMaxExpertSpeed = 15.0;
constexpr double kExpertLateralAccel = 2.0;
constexpr double kCurveBrake = 1.5;
constexpr int kSamples = 171;  // -2 s .. 15 s at 10 Hz

double sample_time(int k) { return static_cast<double>(k - 20) / 10.0; }

Polyline straight(const Vec2 & from, double heading, double length)
{
  const int n = std::max(1, static_cast<int>(std::ceil(length)));
  Polyline out;
  const Vec2 dir = unit_from_heading(heading);
  for (int i = 0; i <= n; ++i) {
    out.push_back(from + dir * (length * i / n));
  }
  return out;
}

// Signed angle: positive turns left.
Polyline arc(const Pose2 & start, double radius, double angle)
{
  const double side = angle >= 0.0 ? 1.0 : -1.0;
  const Vec2 center = start.position + unit_from_heading(start.heading + side * std::numbers::pi / 2) * radius;
  const int n = std::max(2, static_cast<int>(std::ceil(std::abs(angle) * radius)));
  Polyline out;
  for (int i = 0; i <= n; ++i) {
    const double h = start.heading + angle * i / n;
    out.push_back(center + unit_from_heading(h - side * std::numbers::pi / 2) * radius);
  }
  return out;
}

Pose2 end_pose(const Polyline & line)
{
  const Vec2 & a = line[line.size() - 2];
  const Vec2 & b = line.back();
  return {b, std::atan2(b.y - a.y, b.x - a.x)};
}

void append(Polyline & to, const Polyline & more)
{
  to.insert(to.end(), more.begin() + (to.empty() ? 0 : 1), more.end());
}

// Cuts a polyline into pieces of roughly kChunkLength sharing end points.
std::vector<Polyline> chunk(const Polyline & line, double max_length = kChunkLength)
{
  std::vector<Polyline> out;
  Polyline cur{line.front()};
  double acc = 0.0;
  for (std::size_t i = 1; i < line.size(); ++i) {
    acc += distance(line[i - 1], line[i]);
    cur.push_back(line[i]);
    if (acc >= max_length && line.size() - i > 20) {
      out.push_back(cur);
      cur = {line[i]};
      acc = 0.0;
    }
  }
  if (cur.size() >= 2) {
    out.push_back(cur);
  }
  return out;
}

Polygon strip(const Polyline & line, double left, double right)
{
  Polygon poly = offset_polyline(line, left);
  const Polyline r = offset_polyline(line, -right);
  poly.insert(poly.end(), r.rbegin(), r.rend());
  return poly;
}

struct MapBuilder {
  std::vector<LaneSegment> segments;
  std::vector<Polygon> drivable;

  LaneSegment & add(int id, int roadblock, Polyline centerline, double speed_limit)
  {
    LaneSegment seg;
    seg.id = id;
    seg.roadblock = roadblock;
    seg.left_boundary = offset_polyline(centerline, kLaneHalfWidth);
    seg.right_boundary = offset_polyline(centerline, -kLaneHalfWidth);
    seg.centerline = std::move(centerline);
    seg.speed_limit = speed_limit;
    segments.push_back(std::move(seg));
    return segments.back();
  }

  // Consecutive single-lane chunks; returns the ids.
  std::vector<int> add_chain(int first_id, int first_roadblock, const std::vector<Polyline> & pieces, const std::vector<double> & limits)
  {
    std::vector<int> ids;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      const int id = first_id + static_cast<int>(i);
      add(id, first_roadblock + static_cast<int>(i), pieces[i], limits[i]);
      if (i > 0) {
        find(id - 1).successors.push_back(id);
      }
      ids.push_back(id);
    }
    return ids;
  }

  LaneSegment & find(int id)
  {
    for (auto & s : segments) {
      if (s.id == id) {
        return s;
      }
    }
    throw ConfigError("generator: missing lane " + std::to_string(id));
  }
};

double curve_speed_limit(double radius, double limit)
{
  return std::min(limit, std::floor(std::sqrt(2.5 * radius)));
}

// Speed cap along a path from speed limits and curvature, with braking lookahead.
std::vector<double> speed_caps(const Path & path, double cruise)
{
  const auto & pts = path.points();
  const std::size_t n = pts.size();
  std::vector<double> cap(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = std::min(n - 1, i + 1);
    const double ds = pts[b].s - pts[a].s;
    const double kappa = ds > 0.0 ? std::abs(wrap_angle(pts[b].heading - pts[a].heading)) / ds : 0.0;
    cap[i] = std::min({cruise, pts[i].speed_limit, std::sqrt(kExpertLateralAccel / std::max(kappa, 1e-6))});
  }
  // Smooth the curvature spikes at polyline joints before the braking pass.
  std::vector<double> smooth(cap);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= 8 ? i - 8 : 0;
    const std::size_t hi = std::min(n - 1, i + 8);
    double best = 0.0;
    for (std::size_t j = lo; j <= hi; ++j) {
      best = std::max(best, cap[j]);
    }
    smooth[i] = std::min(best, std::min(cruise, pts[i].speed_limit));
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    const double ds = pts[i + 1].s - pts[i].s;
    smooth[i] = std::min(smooth[i], std::sqrt(smooth[i + 1] * smooth[i + 1] + 2.0 * kCurveBrake * ds));
  }
  return smooth;
}

struct Motion {
  std::vector<double> s;
  std::vector<double> v;
};

using AgentsAt = std::function<std::vector<TrackedObject>(double t)>;

// Car-following drive along a path that reacts to where agents will be over
// the next few seconds.
Motion drive(
  const Path & path, double s0, double v0, double cruise, const AgentsAt & agents, double headway,
  double lookahead = 2.5)
{
  IdmParams p;
  p.accel = 1.2;
  p.comfortable_decel = 2.0;
  p.jam_distance = 2.0;
  p.time_headway = headway;
  const std::vector<double> caps = speed_caps(path, cruise);
  const VehicleParameters ego;
  Motion m;
  double s = s0;
  double v = v0;
  double acc = 0.0;
  constexpr double dt = 0.1;
  for (int k = 0; k < kSamples; ++k) {
    m.s.push_back(s);
    m.v.push_back(v);
    const double t = sample_time(k);
    p.target_speed = std::max(0.5, caps[path.index_at(s)]);
    double want = idm_acceleration({s, v}, std::numeric_limits<double>::infinity(), 0.0, p);
    if (agents) {
      for (double tau = 0.0; tau <= lookahead + 1e-9; tau += 0.5) {
        const std::vector<TrackedObject> future = agents(t + tau);
        if (future.empty()) {
          continue;
        }
        const double s_pred = s + v * tau;
        if (s_pred >= path.length() - 1.0) {
          continue;
        }
        const LeadInfo lead = leading_gap(path, s_pred, v, ego, future);
        if (!std::isfinite(lead.gap)) {
          continue;
        }
        const double cand =
          lead.gap > 0.5 ? idm_acceleration({s, v}, lead.gap, lead.closing_speed, p) : -kMaxBraking;
        want = std::min(want, cand);
      }
    }
    want = std::clamp(want, -kMaxBraking, 1.5);
    acc = std::clamp(want, acc - 1.0, acc + 0.5);
    const double v_next = std::clamp(v + acc * dt, 0.0, kMaxExpertSpeed);
    s += 0.5 * (v + v_next) * dt;
    v = v_next;
  }
  return m;
}

// Piecewise speed profile integrated from s0.
Motion integrate(double s0, const std::vector<double> & v)
{
  Motion m{{}, v};
  double s = s0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    m.s.push_back(s);
    if (k + 1 < v.size()) {
      s += 0.5 * (v[k] + v[k + 1]) * 0.1;
    }
  }
  return m;
}

AgentTrack vehicle_on_path(int id, const Path & path, const Motion & m, double length = 4.6, double width = 1.9)
{
  AgentTrack track;
  track.id = id;
  track.kind = AgentKind::vehicle;
  track.length = length;
  track.width = width;
  for (int k = 0; k < kSamples; ++k) {
    const Pose2 pose = path.pose_at(m.s[k]);
    track.states.push_back(
      {sample_time(k), pose.position, wrap_angle(pose.heading), unit_from_heading(pose.heading) * m.v[k]});
  }
  return track;
}

struct Sway {
  double amplitude = 0.0;
  double wavelength = 100.0;
  double phase = 0.0;
  double d(double s) const { return amplitude * std::sin(2.0 * std::numbers::pi * s / wavelength + phase); }
  double slope(double s) const
  {
    return amplitude * 2.0 * std::numbers::pi / wavelength * std::cos(2.0 * std::numbers::pi * s / wavelength + phase);
  }
};

std::vector<EgoState> ego_states(const Path & path, const Motion & m, const Sway & sway)
{
  std::vector<EgoState> out(kSamples);
  for (int k = 0; k < kSamples; ++k) {
    const Pose2 base = path.pose_at(m.s[k]);
    const double heading = wrap_angle(base.heading + std::atan(sway.slope(m.s[k])));
    out[k].t = sample_time(k);
    out[k].position = base.position + unit_from_heading(base.heading + std::numbers::pi / 2) * sway.d(m.s[k]);
    out[k].heading = heading;
    out[k].velocity = unit_from_heading(heading) * m.v[k];
  }
  for (int k = 0; k < kSamples; ++k) {
    const int a = std::max(0, k - 1);
    const int b = std::min(kSamples - 1, k + 1);
    out[k].acceleration = (out[b].velocity - out[a].velocity) * (1.0 / (0.1 * (b - a)));
  }
  return out;
}

std::vector<int> roadblocks_of(const WorldMap & map, const std::vector<int> & lanes)
{
  std::vector<int> out;
  for (int id : lanes) {
    out.push_back(map.at(id).roadblock);
  }
  return out;
}

bool expert_is_clean(const Scenario & sc)
{
  const VehicleParameters ego;
  for (const EgoState & e : sc.ego_log) {
    const OrientedBox box{e.position, e.heading, ego.length, ego.width};
    for (const Vec2 & c : box.corners()) {
      if (!sc.map->in_drivable_area(c)) {
        return false;
      }
    }
    if (e.t < 0.0) {
      continue;
    }
    for (const TrackedObject & a : agents_at(sc, e.t)) {
      OrientedBox grown = a.box();
      grown.length += 0.4;
      grown.width += 0.4;
      if (box.intersects(grown)) {
        return false;
      }
    }
  }
  return true;
}

struct Built {
  std::shared_ptr<WorldMap> map;
  std::vector<int> lanes;  // ego route chain
  std::vector<AgentTrack> agents;
  Path path;
  double s0 = 0.0;
  double v0 = 0.0;
  double cruise = 0.0;
  double headway = 1.2;
  Sway sway;
};

AgentsAt agent_source(const std::vector<AgentTrack> & tracks)
{
  return [&tracks](double t) {
    std::vector<TrackedObject> out;
    for (const AgentTrack & tr : tracks) {
      if (tr.covers(t)) {
        out.push_back(tracked_object(tr, agent_state_at(tr, t)));
      }
    }
    return out;
  };
}

Sway random_sway(SplitMix & rng)
{
  return {rng.uniform(0.0, 0.25), rng.uniform(60.0, 120.0), rng.uniform(0.0, 2.0 * std::numbers::pi)};
}

double speed_limit(SplitMix & rng, double lo, double hi) { return std::round(rng.uniform(lo, hi) * 2.0) / 2.0; }

// Ego starts near x = 0 at t = 0: s(0) is about -kRoadStart along the route.
void ego_start(Built & b, SplitMix & rng, double limit)
{
  b.cruise = rng.uniform(0.6, 0.85) * limit;
  // Half of the drives pull away from low speed.
  const bool launch = rng.uniform(0.0, 1.0) < 0.5;
  b.v0 = launch ? rng.uniform(1.0, 3.0) : b.cruise * rng.uniform(0.8, 1.0);
  b.s0 = -kRoadStart - 2.0 * b.v0;
}

Built build_straight(SplitMix & rng)
{
  Built b;
  const double limit = speed_limit(rng, 12.0, 15.0);
  const Polyline road = straight({kRoadStart, 0.0}, 0.0, 520.0);
  const auto pieces = chunk(road);
  MapBuilder mb;
  std::vector<Polyline> left_pieces;
  for (const auto & p : pieces) {
    left_pieces.push_back(offset_polyline(p, 2.0 * kLaneHalfWidth));
  }
  const auto ego_ids = mb.add_chain(10, 100, pieces, std::vector<double>(pieces.size(), limit));
  const auto left_ids = mb.add_chain(30, 100, left_pieces, std::vector<double>(pieces.size(), limit));
  for (std::size_t i = 0; i < ego_ids.size(); ++i) {
    mb.find(ego_ids[i]).left_neighbor = left_ids[i];
    mb.find(left_ids[i]).right_neighbor = ego_ids[i];
  }
  mb.drivable.push_back(strip(road, 3.0 * kLaneHalfWidth + kShoulder, kLaneHalfWidth + kShoulder));
  b.map = std::make_shared<WorldMap>(mb.segments, mb.drivable);
  b.lanes = ego_ids;
  ego_start(b, rng, limit);
  b.sway = random_sway(rng);

  const Path left = chain_path(*b.map, left_ids);
  const double left_speed = rng.uniform(0.7, 1.0) * limit;
  const int n_left = rng.bernoulli(0.5) ? 2 : 1;
  double x = rng.uniform(40.0, 100.0);
  for (int i = 0; i < n_left; ++i) {
    b.agents.push_back(vehicle_on_path(
      1 + i, left, integrate(x - 2.0 * left_speed, std::vector<double>(kSamples, left_speed))));
    x += rng.uniform(25.0, 45.0);
  }
  if (rng.bernoulli(0.5)) {
    const Path own = chain_path(*b.map, ego_ids);
    const double v = rng.uniform(0.9, 1.0) * limit;
    const double s = -kRoadStart + rng.uniform(40.0, 70.0);
    b.agents.push_back(vehicle_on_path(10, own, integrate(s - 2.0 * v, std::vector<double>(kSamples, v))));
  }
  return b;
}

Built build_curve(SplitMix & rng)
{
  Built b;
  const double limit = speed_limit(rng, 12.0, 15.0);
  const double lead_in = -kRoadStart + rng.uniform(10.0, 40.0);
  const double radius = rng.uniform(40.0, 90.0);
  const double angle = rng.uniform(50.0, 110.0) * std::numbers::pi / 180.0 * (rng.bernoulli(0.5) ? 1.0 : -1.0);
  const Polyline first = straight({kRoadStart, 0.0}, 0.0, lead_in);
  const Polyline bend = arc(end_pose(first), radius, angle);
  const Polyline exit = straight(end_pose(bend).position, end_pose(bend).heading, 360.0);
  std::vector<Polyline> pieces{first, bend};
  std::vector<double> limits{limit, curve_speed_limit(radius, limit)};
  for (const auto & p : chunk(exit)) {
    pieces.push_back(p);
    limits.push_back(limit);
  }
  Polyline road;
  for (const auto & p : pieces) {
    append(road, p);
  }
  MapBuilder mb;
  const auto ego_ids = mb.add_chain(10, 100, pieces, limits);
  // Oncoming lane on the left, its own roadblocks.
  std::vector<Polyline> oncoming;
  for (auto it = pieces.rbegin(); it != pieces.rend(); ++it) {
    Polyline o = offset_polyline(*it, 2.0 * kLaneHalfWidth);
    std::reverse(o.begin(), o.end());
    oncoming.push_back(o);
  }
  std::vector<double> on_limits(limits.rbegin(), limits.rend());
  const auto on_ids = mb.add_chain(50, 200, oncoming, on_limits);
  mb.drivable.push_back(strip(road, 3.0 * kLaneHalfWidth + kShoulder, kLaneHalfWidth + kShoulder));
  b.map = std::make_shared<WorldMap>(mb.segments, mb.drivable);
  b.lanes = ego_ids;
  ego_start(b, rng, limit);
  b.sway = random_sway(rng);

  if (rng.bernoulli(0.6)) {
    const Path on = chain_path(*b.map, on_ids);
    const double v = rng.uniform(0.6, 0.9) * limit;
    const double s_meet = on.length() - (-kRoadStart) - rng.uniform(60.0, 140.0);
    b.agents.push_back(vehicle_on_path(1, on, drive(on, s_meet, v, v, nullptr, 1.2)));
  }
  if (rng.bernoulli(0.4)) {
    const Path own = chain_path(*b.map, ego_ids);
    const double v = rng.uniform(0.95, 1.1) * b.cruise;
    b.agents.push_back(vehicle_on_path(2, own, drive(own, -kRoadStart + rng.uniform(35.0, 60.0) - 2.0 * v, v, v, nullptr, 1.2)));
  }
  return b;
}

Built build_fork(SplitMix & rng)
{
  Built b;
  const double limit = speed_limit(rng, 12.0, 15.0);
  const Polyline main = straight({kRoadStart, 0.0}, 0.0, -kRoadStart + rng.uniform(20.0, 50.0));
  const Pose2 fork = end_pose(main);
  const Polyline branch_a = straight(fork.position, fork.heading, 380.0);
  const double radius = rng.uniform(50.0, 80.0);
  const double angle = rng.uniform(25.0, 40.0) * std::numbers::pi / 180.0 * (rng.bernoulli(0.5) ? 1.0 : -1.0);
  const Polyline bend = arc(fork, radius, angle);
  const Polyline b_exit = straight(end_pose(bend).position, end_pose(bend).heading, 330.0);

  MapBuilder mb;
  const auto main_ids = mb.add_chain(10, 100, {main}, {limit});
  const auto a_pieces = chunk(branch_a);
  const auto a_ids = mb.add_chain(20, 200, a_pieces, std::vector<double>(a_pieces.size(), limit));
  std::vector<Polyline> b_pieces{bend};
  std::vector<double> b_limits{curve_speed_limit(radius, limit)};
  for (const auto & p : chunk(b_exit)) {
    b_pieces.push_back(p);
    b_limits.push_back(limit);
  }
  const auto b_ids = mb.add_chain(40, 300, b_pieces, b_limits);
  mb.find(main_ids.back()).successors = {a_ids.front(), b_ids.front()};

  Polyline road_a = main;
  append(road_a, branch_a);
  Polyline road_b = straight(fork.position - unit_from_heading(fork.heading) * 10.0, fork.heading, 10.0);
  for (const auto & p : b_pieces) {
    append(road_b, p);
  }
  mb.drivable.push_back(strip(road_a, kLaneHalfWidth + kShoulder, kLaneHalfWidth + kShoulder));
  mb.drivable.push_back(strip(road_b, kLaneHalfWidth + kShoulder, kLaneHalfWidth + kShoulder));
  b.map = std::make_shared<WorldMap>(mb.segments, mb.drivable);

  const bool take_b = rng.bernoulli(0.5);
  std::vector<int> chain = main_ids;
  const auto & branch_ids = take_b ? b_ids : a_ids;
  chain.insert(chain.end(), branch_ids.begin(), branch_ids.end());
  b.lanes = chain;
  ego_start(b, rng, limit);
  b.sway = random_sway(rng);
  b.sway.amplitude *= 0.5;

  if (rng.bernoulli(0.6)) {
    std::vector<int> other = main_ids;
    const auto & other_ids = take_b ? a_ids : b_ids;
    other.insert(other.end(), other_ids.begin(), other_ids.end());
    const Path op = chain_path(*b.map, other);
    const double v = std::min(limit, rng.uniform(1.05, 1.2) * b.cruise);
    b.agents.push_back(vehicle_on_path(1, op, drive(op, -kRoadStart + rng.uniform(25.0, 45.0) - 2.0 * v, v, v, nullptr, 1.2)));
  }
  return b;
}

Built single_lane_straight(double limit)
{
  Built b;
  const Polyline road = straight({kRoadStart, 0.0}, 0.0, 520.0);
  const auto pieces = chunk(road);
  MapBuilder mb;
  b.lanes = mb.add_chain(10, 100, pieces, std::vector<double>(pieces.size(), limit));
  mb.drivable.push_back(strip(road, kLaneHalfWidth + kShoulder, kLaneHalfWidth + kShoulder));
  b.map = std::make_shared<WorldMap>(mb.segments, mb.drivable);
  b.path = chain_path(*b.map, b.lanes);
  return b;
}

Built build_lead_brake(SplitMix & rng)
{
  const double limit = speed_limit(rng, 12.0, 15.0);
  Built b = single_lane_straight(limit);
  b.cruise = rng.uniform(0.85, 1.0) * limit;
  b.v0 = b.cruise;
  b.s0 = -kRoadStart - 2.0 * b.v0;
  b.headway = 0.9;
  b.sway = random_sway(rng);
  b.sway.amplitude *= 0.5;

  const double headway = rng.uniform(1.7, 1.95);
  const double brake_time = rng.uniform(1.0, 3.0);
  const double decel = rng.uniform(6.0, 8.0);
  const double hold = rng.uniform(1.5, 3.0);
  const double v_lead = b.cruise;
  std::vector<double> v(kSamples);
  double cur = v_lead;
  double stopped_at = -1.0;
  for (int k = 0; k < kSamples; ++k) {
    const double t = sample_time(k);
    v[k] = cur;
    if (t >= brake_time && stopped_at < 0.0) {
      cur = std::max(0.0, cur - decel * 0.1);
      if (cur == 0.0) {
        stopped_at = t;
      }
    } else if (stopped_at >= 0.0 && t >= stopped_at + hold) {
      cur = std::min(v_lead, cur + 1.5 * 0.1);
    }
  }
  const double s_lead0 = -kRoadStart + 4.6 + headway * v_lead;
  b.agents.push_back(vehicle_on_path(1, b.path, integrate(s_lead0 - 2.0 * v_lead, v)));
  return b;
}

Built build_crossing(SplitMix & rng)
{
  const double limit = speed_limit(rng, 11.0, 14.0);
  Built b = single_lane_straight(limit);
  b.cruise = rng.uniform(0.9, 1.0) * limit;
  b.v0 = b.cruise;
  b.s0 = -kRoadStart - 2.0 * b.v0;
  b.sway = random_sway(rng);
  b.sway.amplitude *= 0.5;

  const double t_go = rng.uniform(2.0, 4.0);
  const double gap = rng.uniform(24.0, 30.0);
  const double x_cross = b.cruise * t_go + 2.3 + gap;
  const double y_start = -(kLaneHalfWidth + kShoulder + rng.uniform(0.5, 1.5));
  const double speed = rng.uniform(1.3, 1.8);
  const double y_end = kLaneHalfWidth + kShoulder + 2.0;
  AgentTrack ped;
  ped.id = 1;
  ped.kind = AgentKind::pedestrian;
  ped.length = 0.5;
  ped.width = 0.5;
  double y = y_start;
  for (int k = 0; k < kSamples; ++k) {
    const double t = sample_time(k);
    const bool walking = t >= t_go && y < y_end;
    ped.states.push_back({t, {x_cross, y}, std::numbers::pi / 2, {0.0, walking ? speed : 0.0}});
    if (walking) {
      y = std::min(y_end, y + speed * 0.1);
    }
  }
  b.agents.push_back(ped);
  return b;
}

Built build_stop_and_go(SplitMix & rng)
{
  const double limit = speed_limit(rng, 11.0, 14.0);
  Built b = single_lane_straight(limit);
  const double v_cruise = rng.uniform(6.0, 9.0);
  std::vector<double> v(kSamples);
  enum class Phase { cruise, brake, hold, accel } phase = Phase::cruise;
  double timer = rng.uniform(1.0, 3.0);
  double cur = v_cruise;
  double floor_speed = rng.uniform(0.0, 2.0);
  for (int k = 0; k < kSamples; ++k) {
    v[k] = cur;
    timer -= 0.1;
    switch (phase) {
      case Phase::cruise:
        if (timer <= 0.0) {
          phase = Phase::brake;
        }
        break;
      case Phase::brake:
        cur = std::max(floor_speed, cur - 2.5 * 0.1);
        if (cur <= floor_speed) {
          phase = Phase::hold;
          timer = rng.uniform(1.0, 2.5);
        }
        break;
      case Phase::hold:
        if (timer <= 0.0) {
          phase = Phase::accel;
        }
        break;
      case Phase::accel:
        cur = std::min(v_cruise, cur + 1.5 * 0.1);
        if (cur >= v_cruise) {
          phase = Phase::cruise;
          timer = rng.uniform(1.0, 3.0);
          floor_speed = rng.uniform(0.0, 2.0);
        }
        break;
    }
  }
  b.cruise = rng.uniform(0.7, 0.9) * limit;
  b.v0 = v_cruise * rng.uniform(0.8, 1.0);
  b.s0 = -kRoadStart - 2.0 * b.v0;
  b.sway = random_sway(rng);
  b.sway.amplitude *= 0.5;
  const double gap = rng.uniform(12.0, 20.0);
  const double s_lead0 = -kRoadStart + 4.6 + gap;
  b.agents.push_back(vehicle_on_path(1, b.path, integrate(s_lead0 - 2.0 * v_cruise, v)));
  return b;
}

}  // namespace

Scenario generate_scenario(const GeneratorSpec & spec, std::uint64_t seed)
{
  const auto & names = scenario_templates();
  const auto it = std::find(names.begin(), names.end(), spec.template_name);
  if (it == names.end()) {
    throw ConfigError("unknown template '" + spec.template_name + "'");
  }
  const auto index = static_cast<std::uint64_t>(it - names.begin());
  for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
    SplitMix rng(seed * 0x2545F4914F6CDD1DULL + index * 0x9E3779B97F4A7C15ULL + attempt * 0xD1B54A32D192ED03ULL);
    Built b;
    switch (index) {
      case 0: b = build_straight(rng); break;
      case 1: b = build_curve(rng); break;
      case 2: b = build_fork(rng); break;
      case 3: b = build_lead_brake(rng); break;
      case 4: b = build_crossing(rng); break;
      default: b = build_stop_and_go(rng); break;
    }
    if (b.path.empty()) {
      b.path = chain_path(*b.map, b.lanes);
    }
    const Motion m = drive(b.path, b.s0, b.v0, b.cruise, agent_source(b.agents), b.headway);

    Scenario sc;
    char id[64];
    std::snprintf(id, sizeof(id), "%s_%04llu", spec.template_name.c_str(), static_cast<unsigned long long>(seed));
    sc.id = id;
    sc.map = b.map;
    sc.agents = std::move(b.agents);
    sc.ego_log = ego_states(b.path, m, b.sway);
    sc.route = roadblocks_of(*b.map, b.lanes);
    if (expert_is_clean(sc)) {
      validate_scenario(sc);
      return sc;
    }
  }
  throw InvariantError("generator could not produce a collision-free expert for seed " + std::to_string(seed));
}

}  // namespace pdm
