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

#include "pdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pdm/errors.hpp"

namespace pdm {

bool at_fault_collision(const OrientedBox & ego, double ego_speed, const TrackedObject & agent)
{
  if (ego_speed < kStationarySpeed) {
    return false;
  }
  const OrientedBox other = agent.box();
  if (!ego.intersects(other)) {
    return false;
  }
  const Pose2 frame{ego.center, ego.heading};
  double front = -std::numeric_limits<double>::infinity();
  for (const Vec2 & c : other.corners()) {
    front = std::max(front, to_local(frame, c).x);
  }
  return front >= -kRearStrikeMargin;
}

bool footprint_drivable(const WorldMap & map, const OrientedBox & ego)
{
  for (const Vec2 & c : ego.corners()) {
    if (!map.in_drivable_area(c)) {
      return false;
    }
  }
  return true;
}

double comfort_fraction(std::span<const KinematicState> states, double dt, double wheelbase, const ComfortBounds & b)
{
  if (states.empty()) {
    return 1.0;
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const KinematicState & s = states[i];
    const double yaw_rate = s.v * std::tan(s.steering) / wheelbase;
    const double lat = s.v * yaw_rate;
    const double jerk = i == 0 ? 0.0 : (s.accel - states[i - 1].accel) / dt;
    if (s.accel <= b.max_lon_accel && s.accel >= b.min_lon_accel && std::abs(lat) <= b.max_lat_accel &&
        std::abs(jerk) <= b.max_jerk && std::abs(yaw_rate) <= b.max_yaw_rate)
    {
      ++ok;
    }
  }
  return static_cast<double>(ok) / static_cast<double>(states.size());
}

double speed_compliance(std::span<const double> speeds, std::span<const double> limits, double dt)
{
  if (speeds.empty()) {
    return 1.0;
  }
  double over = 0.0;
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    over += std::max(0.0, speeds[i] - limits[i]) * dt;
  }
  const double duration = static_cast<double>(speeds.size()) * dt;
  return std::max(0.0, 1.0 - over / (kMaxOverspeed * duration));
}

bool drives_against_path(std::span<const double> heading_errors, double dt)
{
  const auto needed = static_cast<std::size_t>(std::llround(kWrongWayDuration / dt));
  std::size_t run = 0;
  for (double e : heading_errors) {
    run = std::abs(e) > std::numbers::pi / 2 ? run + 1 : 0;
    if (run >= needed) {
      return true;
    }
  }
  return false;
}

double combine_score(bool multipliers_ok, double ttc, double progress, double speed, double comfort, const ScoreWeights & w)
{
  if (!multipliers_ok) {
    return 0.0;
  }
  const double total = w.ttc + w.progress + w.speed_compliance + w.comfort;
  return (w.ttc * ttc + w.progress * progress + w.speed_compliance * speed + w.comfort * comfort) / total;
}

TickOls score_prediction(const Trajectory & prediction, const Scenario & sc, const OlsConfig & cfg)
{
  TickOls out;
  const double t0 = prediction.start_time();
  const auto k0 = static_cast<long>(std::llround(t0 * sc.frequency));
  const auto steps_needed = static_cast<std::size_t>(std::llround(cfg.horizons.back() * sc.frequency));
  if (prediction.points.size() < steps_needed + 1) {
    throw ConfigError("prediction shorter than the longest OLS horizon");
  }
  for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
    const auto n = static_cast<std::size_t>(std::llround(cfg.horizons[h] * sc.frequency));
    double sum_d = 0.0;
    double sum_h = 0.0;
    double max_d = 0.0;
    OlsHorizon r;
    for (std::size_t j = 1; j <= n; ++j) {
      const EgoState & truth = sc.ego_at_tick(k0 + static_cast<long>(j));
      const TrajectoryPoint & p = prediction.points[j];
      const double d = distance(p.position, truth.position);
      const double e = std::abs(wrap_angle(p.heading - truth.heading));
      sum_d += d;
      sum_h += e;
      max_d = std::max(max_d, d);
      if (j == n) {
        r.fde = d;
        r.fhe = e;
      }
    }
    r.ade = sum_d / static_cast<double>(n);
    r.ahe = sum_h / static_cast<double>(n);
    r.miss = max_d > cfg.displacement_thresholds[h];
    out.horizons[h] = r;
    out.miss = out.miss || r.miss;
    const double dth = cfg.displacement_thresholds[h];
    const double hth = cfg.heading_thresholds[h];
    out.subscores[0] += std::max(0.0, 1.0 - r.ade / dth);
    out.subscores[1] += std::max(0.0, 1.0 - r.fde / dth);
    out.subscores[2] += std::max(0.0, 1.0 - r.ahe / hth);
    out.subscores[3] += std::max(0.0, 1.0 - r.fhe / hth);
  }
  for (double & s : out.subscores) {
    s /= static_cast<double>(cfg.horizons.size());
  }
  return out;
}

OlsReport score_open_loop(const OpenLoopLog & log, const Scenario & sc, const OlsConfig & cfg)
{
  OlsReport rep;
  if (log.aborted) {
    return rep;
  }
  const double last_t = sc.duration - cfg.horizons.back();
  std::size_t misses = 0;
  std::array<double, 4> sums{};
  for (const Trajectory & pred : log.predictions) {
    if (pred.start_time() > last_t + 1e-9) {
      continue;
    }
    const TickOls tick = score_prediction(pred, sc, cfg);
    for (std::size_t h = 0; h < 3; ++h) {
      rep.horizons[h].ade += tick.horizons[h].ade;
      rep.horizons[h].fde += tick.horizons[h].fde;
      rep.horizons[h].ahe += tick.horizons[h].ahe;
      rep.horizons[h].fhe += tick.horizons[h].fhe;
      rep.horizons[h].miss = rep.horizons[h].miss || tick.horizons[h].miss;
    }
    for (std::size_t i = 0; i < 4; ++i) {
      sums[i] += tick.subscores[i];
    }
    misses += tick.miss ? 1 : 0;
    ++rep.ticks;
  }
  if (rep.ticks == 0) {
    return rep;
  }
  const auto n = static_cast<double>(rep.ticks);
  for (auto & h : rep.horizons) {
    h.ade /= n;
    h.fde /= n;
    h.ahe /= n;
    h.fhe /= n;
  }
  rep.ade_score = sums[0] / n;
  rep.fde_score = sums[1] / n;
  rep.ahe_score = sums[2] / n;
  rep.fhe_score = sums[3] / n;
  rep.miss_rate = static_cast<double>(misses) / n;
  const double mean = (rep.ade_score + rep.fde_score + rep.ahe_score + rep.fhe_score) / 4.0;
  rep.ols = rep.miss_rate > cfg.max_miss_rate ? 0.0 : 100.0 * mean;
  return rep;
}

double time_to_collision(const OrientedBox & ego, const Vec2 & ego_velocity, const TrackedObject & agent)
{
  if (ego_velocity.norm() < kStationarySpeed) {
    return std::numeric_limits<double>::infinity();
  }
  const Pose2 frame{ego.center, ego.heading};
  double front = -std::numeric_limits<double>::infinity();
  for (const Vec2 & c : agent.box().corners()) {
    front = std::max(front, to_local(frame, c).x);
  }
  if (front < -kRearStrikeMargin) {
    return std::numeric_limits<double>::infinity();
  }
  // Quick reject: closest approach bound.
  const Vec2 rel_p = agent.position - ego.center;
  const Vec2 rel_v = agent.velocity - ego_velocity;
  const double reach = 0.5 * (std::hypot(ego.length, ego.width) + std::hypot(agent.length, agent.width));
  const double vv = dot(rel_v, rel_v);
  const double t_star = vv > 0.0 ? std::clamp(-dot(rel_p, rel_v) / vv, 0.0, kTtcLookahead) : 0.0;
  if ((rel_p + rel_v * t_star).norm() > reach) {
    return std::numeric_limits<double>::infinity();
  }
  const auto steps = static_cast<int>(std::llround(kTtcLookahead * 10.0));
  for (int j = 1; j <= steps; ++j) {
    const double tau = j / 10.0;
    OrientedBox e = ego;
    e.center = ego.center + ego_velocity * tau;
    TrackedObject a = agent;
    a.position = agent.position + agent.velocity * tau;
    if (e.intersects(a.box())) {
      return tau;
    }
  }
  return std::numeric_limits<double>::infinity();
}

ClsReport score_closed_loop(const RolloutLog & rollout, const Scenario & sc, const ScoreWeights & w, const ComfortBounds & comfort)
{
  ClsReport rep;
  const VehicleParameters vp;
  const std::size_t n = rollout.states.size();
  rep.incomplete = rollout.aborted || n < sc.num_ticks() + 1;
  rep.min_ttc = std::numeric_limits<double>::infinity();
  if (n == 0) {
    rep.makes_progress = false;
    return rep;
  }

  Path path;
  try {
    path = chain_path(*sc.map, search_route(*sc.map, sc.route, sc.ego_at_tick(0)));
  } catch (const RouteError &) {
  }

  std::vector<double> speeds;
  std::vector<double> limits;
  std::vector<double> heading_errors;
  double s_hint = 0.0;
  double s_first = 0.0;
  double s_last = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const KinematicState & st = rollout.states[k];
    const OrientedBox box{st.position(), st.heading, vp.length, vp.width};
    const Vec2 vel = unit_from_heading(st.heading) * st.v;
    for (const TrackedObject & a : rollout.agents[k]) {
      if (at_fault_collision(box, st.v, a)) {
        rep.no_at_fault_collision = false;
      }
      rep.min_ttc = std::min(rep.min_ttc, time_to_collision(box, vel, a));
    }
    if (!footprint_drivable(*sc.map, box)) {
      rep.drivable_area = false;
    }
    speeds.push_back(st.v);
    if (!path.empty()) {
      const PathProjection pr =
        k == 0 ? path.project(st.pose()) : path.project_near(st.pose(), s_hint, st.v * 0.1 + 10.0);
      s_hint = pr.s;
      if (k == 0) {
        s_first = pr.s;
      }
      s_last = pr.s;
      heading_errors.push_back(pr.heading_error);
      limits.push_back(path.speed_limit_at(pr.s));
    } else {
      limits.push_back(std::numeric_limits<double>::infinity());
    }
  }
  if (!path.empty()) {
    rep.ego_progress = s_last - s_first;
    const EgoState & e0 = sc.ego_at_tick(0);
    const double expert_start = path.project({e0.position, e0.heading}).s;
    const EgoState & expert_end = sc.ego_at_tick(static_cast<long>(sc.num_ticks()));
    rep.expert_progress = path.project({expert_end.position, expert_end.heading}).s - expert_start;
  } else {
    rep.ego_progress = distance(rollout.states.front().position(), rollout.states.back().position());
    rep.expert_progress =
      distance(sc.ego_at_tick(0).position, sc.ego_at_tick(static_cast<long>(sc.num_ticks())).position);
  }
  rep.driving_direction = !drives_against_path(heading_errors, kTickSeconds);
  rep.makes_progress = rep.ego_progress >= kMinProgress || rep.expert_progress < kMinProgress;
  rep.ttc = rep.min_ttc >= kTtcThreshold ? 1.0 : 0.0;
  rep.progress = rep.expert_progress < kMinProgress ? 1.0 : std::clamp(rep.ego_progress / rep.expert_progress, 0.0, 1.0);
  rep.speed_compliance = speed_compliance(speeds, limits, kTickSeconds);
  rep.comfort = comfort_fraction(rollout.states, kTickSeconds, vp.wheelbase, comfort);
  const bool ok = rep.no_at_fault_collision && rep.drivable_area && rep.driving_direction && rep.makes_progress &&
                  !rollout.aborted;
  rep.cls = 100.0 * combine_score(ok, rep.ttc, rep.progress, rep.speed_compliance, rep.comfort, w);
  return rep;
}

BenchmarkRow aggregate(std::span<const ScenarioScores> scores)
{
  BenchmarkRow row;
  row.scenarios = scores.size();
  if (scores.empty()) {
    return row;
  }
  for (const ScenarioScores & s : scores) {
    row.cls_r += s.cls_r;
    row.cls_nr += s.cls_nr;
    row.ols += s.ols;
    row.runtime_ms += s.runtime_ms;
  }
  const auto n = static_cast<double>(scores.size());
  row.cls_r /= n;
  row.cls_nr /= n;
  row.ols /= n;
  row.runtime_ms /= n;
  row.overall = (row.cls_r + row.cls_nr + row.ols) / 3.0;
  return row;
}

}  // namespace pdm
