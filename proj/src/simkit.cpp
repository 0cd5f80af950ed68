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

#include "pdm/simkit.hpp"

#include <algorithm>
#include <cmath>

#include "pdm/errors.hpp"

namespace pdm {

TrajectoryPoint Trajectory::at(double t) const
{
  if (t <= points.front().t) {
    return points.front();
  }
  if (t >= points.back().t) {
    return points.back();
  }
  const double step = points[1].t - points[0].t;
  auto i = static_cast<std::size_t>((t - points.front().t) / step);
  i = std::min(i, points.size() - 2);
  while (i > 0 && points[i].t > t) {
    --i;
  }
  while (i + 2 < points.size() && points[i + 1].t < t) {
    ++i;
  }
  const TrajectoryPoint & a = points[i];
  const TrajectoryPoint & b = points[i + 1];
  const double u = (t - a.t) / (b.t - a.t);
  return {t, a.position + (b.position - a.position) * u, angle_lerp(a.heading, b.heading, u), a.v + (b.v - a.v) * u};
}

namespace {

struct Derivative {
  double dx;
  double dy;
  double dheading;
  double dv;
  double dsteering;
};

Derivative bicycle_rates(const KinematicState & s, const ControlCommand & cmd, double wheelbase)
{
  return {
    s.v * std::cos(s.heading), s.v * std::sin(s.heading), s.v * std::tan(s.steering) / wheelbase, cmd.accel,
    cmd.steering_rate};
}

KinematicState advance(const KinematicState & s, const Derivative & d, double dt)
{
  KinematicState out = s;
  out.x += d.dx * dt;
  out.y += d.dy * dt;
  out.heading += d.dheading * dt;
  out.v += d.dv * dt;
  out.steering += d.dsteering * dt;
  return out;
}

}  // namespace

KinematicState bicycle_step(const KinematicState & s, const ControlCommand & command, double dt, double wheelbase)
{
  const ControlCommand cmd{
    std::clamp(command.accel, -kMaxAcceleration, kMaxAcceleration),
    std::clamp(command.steering_rate, -kMaxSteeringRate, kMaxSteeringRate)};
  KinematicState mid = advance(s, bicycle_rates(s, cmd, wheelbase), 0.5 * dt);
  mid.v = std::max(0.0, mid.v);
  KinematicState out = advance(s, bicycle_rates(mid, cmd, wheelbase), dt);
  out.heading = wrap_angle(out.heading);
  out.v = std::max(0.0, out.v);
  out.steering = std::clamp(out.steering, -kMaxSteeringAngle, kMaxSteeringAngle);
  out.accel = cmd.accel;
  return out;
}

// Solved offline from the discrete algebraic Riccati equation; the unit tests
// re-derive every entry.
const std::array<std::array<double, 2>, 20> LqrGains::lateral{{
  {0.34475373788480301, 1.5411630200782462},
  {0.33617448881443629, 1.5199698696055886},
  {0.3278114397116022, 1.4991169421440969},
  {0.319660389519139, 1.4786006709973254},
  {0.31171714331909156, 1.4584174448546607},
  {0.30397751582736593, 1.4385636094336698},
  {0.29643733484516133, 1.4190354692607983},
  {0.28909244465621092, 1.3998292895860962},
  {0.28193870935896376, 1.3809412984249472},
  {0.27497201612328326, 1.3623676887192235},
  {0.2681882783619039, 1.3441046206100324},
  {0.26158343880738094, 1.3261482238129905},
  {0.25515347248602943, 1.3084946000869624},
  {0.24889438958092075, 1.2911398257862801},
  {0.24280223817685262, 1.2740799544863206},
  {0.23687310688089516, 1.2573110196718884},
  {0.23110312731296143, 1.2408290374777753},
  {0.22548847646158893, 1.2246300094705289},
  {0.22002537890098806, 1.208709925460683},
  {0.21471010886617381, 1.1930647663345555},
}};

std::array<double, 2> LqrGains::lateral_at(double speed)
{
  const double v = std::clamp(speed, 1.0, 20.0);
  const auto i = std::min(static_cast<std::size_t>(v) - 1, lateral.size() - 2);
  const double u = v - static_cast<double>(i + 1);
  return {
    lateral[i][0] + u * (lateral[i + 1][0] - lateral[i][0]),
    lateral[i][1] + u * (lateral[i + 1][1] - lateral[i][1])};
}

ControlCommand track(const Trajectory & trajectory, const KinematicState & state, double t_now, const TrackerParams & params)
{
  constexpr double eps = 1e-9;
  const auto & pts = trajectory.points;
  const double t_end = t_now + params.lookahead;

  // Window of waypoints with t <= t_end; never reads past the first waypoint at t_end.
  std::size_t n = 0;
  bool covered = false;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].t > t_end + eps) {
      break;
    }
    n = i + 1;
    if (pts[i].t >= t_end - eps) {
      covered = true;
      break;
    }
  }
  if (!covered || n < 2) {
    throw GeometryError("trajectory shorter than the controller lookahead");
  }
  const std::span<const TrajectoryPoint> window(pts.data(), n);

  std::vector<double> station(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    station[i] = station[i - 1] + distance(window[i - 1].position, window[i].position);
  }

  // Nearest point on the window polyline.
  const Vec2 p = state.position();
  double best = std::numeric_limits<double>::infinity();
  std::size_t seg = 0;
  double seg_u = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double u = project_to_segment(window[i].position, window[i + 1].position, p);
    const Vec2 q = window[i].position + (window[i + 1].position - window[i].position) * u;
    const Vec2 diff = p - q;
    const double d2 = dot(diff, diff);
    if (d2 < best) {
      best = d2;
      seg = i;
      seg_u = u;
    }
  }
  const TrajectoryPoint & a = window[seg];
  const TrajectoryPoint & b = window[seg + 1];
  const Vec2 q = a.position + (b.position - a.position) * seg_u;
  const double ref_heading = angle_lerp(a.heading, b.heading, seg_u);
  const double s_ego = station[seg] + seg_u * (station[seg + 1] - station[seg]);
  const double lateral_error = -std::sin(ref_heading) * (p.x - q.x) + std::cos(ref_heading) * (p.y - q.y);
  const double heading_error = wrap_angle(state.heading - ref_heading);

  // Longitudinal reference at t_now + reference_lead.
  const double t_ref = std::clamp(t_now + params.reference_lead, window.front().t, window.back().t);
  std::size_t j = 0;
  while (j + 2 < n && window[j + 1].t < t_ref) {
    ++j;
  }
  const double span = window[j + 1].t - window[j].t;
  const double w = span > 0.0 ? std::clamp((t_ref - window[j].t) / span, 0.0, 1.0) : 0.0;
  const double s_ref = station[j] + w * (station[j + 1] - station[j]);
  const double v_ref = window[j].v + w * (window[j + 1].v - window[j].v);

  const double station_error = s_ego + state.v * params.reference_lead - s_ref;
  const double speed_error = state.v - v_ref;
  const auto & k_lon = LqrGains::longitudinal;
  const double accel = -(k_lon[0] * station_error + k_lon[1] * speed_error);

  const double seg_len = station[seg + 1] - station[seg];
  const double curvature = seg_len > 1e-3 ? wrap_angle(b.heading - a.heading) / seg_len : 0.0;
  const auto k_lat = LqrGains::lateral_at(state.v);
  const double steering_target = std::clamp(
    std::atan(params.wheelbase * curvature) - (k_lat[0] * lateral_error + k_lat[1] * heading_error),
    -kMaxSteeringAngle, kMaxSteeringAngle);

  return {
    std::clamp(accel, -kMaxAcceleration, kMaxAcceleration),
    std::clamp((steering_target - state.steering) / params.dt, -kMaxSteeringRate, kMaxSteeringRate)};
}

std::vector<KinematicState> simulate_tracking(
  const Trajectory & trajectory, const KinematicState & initial, std::size_t steps, const TrackerParams & params)
{
  std::vector<KinematicState> states;
  states.reserve(steps + 1);
  states.push_back(initial);
  KinematicState s = initial;
  const double t0 = trajectory.start_time();
  for (std::size_t k = 0; k < steps; ++k) {
    const ControlCommand cmd = track(trajectory, s, t0 + static_cast<double>(k) * params.dt, params);
    s = bicycle_step(s, cmd, params.dt, params.wheelbase);
    states.push_back(s);
  }
  return states;
}

KinematicState kinematic_from_ego(const EgoState & ego, const EgoState * next, double wheelbase)
{
  const Vec2 forward = unit_from_heading(ego.heading);
  KinematicState s;
  s.x = ego.position.x;
  s.y = ego.position.y;
  s.heading = ego.heading;
  s.v = std::max(0.0, dot(ego.velocity, forward));
  s.accel = dot(ego.acceleration, forward);
  if (next != nullptr && s.v > 0.5) {
    const double dt = next->t - ego.t;
    const double yaw_rate = dt > 0.0 ? wrap_angle(next->heading - ego.heading) / dt : 0.0;
    s.steering = std::clamp(std::atan(wheelbase * yaw_rate / s.v), -kMaxSteeringAngle, kMaxSteeringAngle);
  }
  return s;
}

}  // namespace pdm
