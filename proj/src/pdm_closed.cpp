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

#include "pdm/pdm_closed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pdm/errors.hpp"

namespace pdm {

void PdmClosedConfig::validate() const
{
  if (speed_fractions.empty() || lateral_offsets.empty()) {
    throw ConfigError("pdm_closed needs at least one speed fraction and one lateral offset");
  }
  if (!(proposal_horizon > 0.0) || forecast_horizon < proposal_horizon || brake_check_horizon > proposal_horizon) {
    throw ConfigError("pdm_closed horizons must satisfy 0 < brake check <= H <= F");
  }
  idm.validate();
}

std::vector<Proposal> generate_proposals(
  const ProposalContext & ctx, const KinematicState & ego, double t0, const Forecast & forecast,
  const PdmClosedConfig & cfg)
{
  std::vector<Proposal> out;
  out.reserve(cfg.speed_fractions.size() * cfg.lateral_offsets.size());
  const double limit = std::max(0.1, ctx.centerline.speed_limit_at(ctx.s_ego));
  const double half_width = 0.5 * cfg.vehicle.width + kCorridorMargin;
  for (double offset : cfg.lateral_offsets) {
    Path path;
    bool fallback = false;
    if (offset == 0.0) {
      path = ctx.centerline;
    } else {
      try {
        path = offset_path(ctx.centerline, offset);
      } catch (const GeometryError &) {
        path = ctx.centerline;
        fallback = true;
      }
    }
    const CorridorOccupancy occupancy(path, forecast.states, half_width);
    const double s0 = path.project_near(ego.pose(), ctx.s_ego, 10.0).s;
    for (double fraction : cfg.speed_fractions) {
      Proposal p;
      p.speed_fraction = fraction;
      p.lateral_offset = offset;
      p.fallback = fallback;
      p.target_speed = fraction * limit;
      IdmParams idm = cfg.idm;
      idm.target_speed = p.target_speed;
      const auto profile =
        rollout_idm({s0, ego.v}, idm, occupancy, cfg.forecast_horizon, kTickSeconds, 0.5 * cfg.vehicle.length);
      p.reference = trajectory_from_profile(path, profile, t0);
      out.push_back(std::move(p));
    }
  }
  return out;
}

void simulate_proposals(std::vector<Proposal> & proposals, const KinematicState & ego, const PdmClosedConfig & cfg)
{
  const auto steps = static_cast<std::size_t>(std::llround(cfg.proposal_horizon / kTickSeconds));
  for (Proposal & p : proposals) {
    p.rollout = simulate_tracking(p.reference, ego, steps, cfg.tracker);
  }
}

namespace {

// Forecast entry for step k, clamped to the horizon.
const std::vector<TrackedObject> & forecast_at(const Forecast & f, std::size_t k)
{
  return f.states[std::min(k, f.states.size() - 1)];
}

bool ttc_violation(
  const KinematicState & s, std::size_t k, const Forecast & forecast, const PdmClosedConfig & cfg)
{
  if (s.v < kStationarySpeed) {
    return false;
  }
  const Vec2 dir = unit_from_heading(s.heading);
  const OrientedBox now{s.position(), s.heading, cfg.vehicle.length, cfg.vehicle.width};
  const double reach = s.v * cfg.ttc_threshold + 0.5 * std::hypot(cfg.vehicle.length, cfg.vehicle.width);
  const auto max_j = static_cast<std::size_t>(std::floor(cfg.ttc_threshold / kTickSeconds + 1e-9));
  const auto & agents_now = forecast_at(forecast, k);
  for (std::size_t i = 0; i < agents_now.size(); ++i) {
    const TrackedObject & a0 = agents_now[i];
    const double a_reach = a0.velocity.norm() * cfg.ttc_threshold + 0.5 * std::hypot(a0.length, a0.width);
    if (distance(a0.position, s.position()) > reach + a_reach) {
      continue;
    }
    for (std::size_t j = 1; j <= max_j; j += 2) {
      const auto & future = forecast_at(forecast, k + j);
      if (i >= future.size()) {
        break;
      }
      OrientedBox moved = now;
      moved.center = now.center + dir * (s.v * static_cast<double>(j) * kTickSeconds);
      if (at_fault_collision(moved, s.v, future[i])) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace

ProposalScore score_proposal(
  const Proposal & p, const Forecast & forecast, const WorldMap & map, const ProposalContext & ctx,
  double best_progress, const PdmClosedConfig & cfg)
{
  ProposalScore sc;
  const auto & roll = p.rollout;
  std::vector<double> heading_errors;
  std::vector<double> speeds;
  std::vector<double> limits;
  heading_errors.reserve(roll.size());
  double s_hint = ctx.s_ego;
  double s_first = 0.0;
  double s_last = 0.0;
  bool ttc_hit = false;
  for (std::size_t k = 0; k < roll.size(); ++k) {
    const KinematicState & s = roll[k];
    const PathProjection pr = ctx.centerline.project_near(s.pose(), s_hint, s.v * kTickSeconds + 5.0);
    s_hint = pr.s;
    if (k == 0) {
      s_first = pr.s;
    }
    s_last = pr.s;
    heading_errors.push_back(pr.heading_error);
    speeds.push_back(s.v);
    limits.push_back(ctx.centerline.speed_limit_at(pr.s));
    if (k == 0) {
      continue;
    }
    const OrientedBox box{s.position(), s.heading, cfg.vehicle.length, cfg.vehicle.width};
    if (sc.no_collision) {
      for (const TrackedObject & a : forecast_at(forecast, k)) {
        if (at_fault_collision(box, s.v, a)) {
          sc.no_collision = false;
          break;
        }
      }
    }
    if (sc.drivable_area && !footprint_drivable(map, box)) {
      sc.drivable_area = false;
    }
    if (!ttc_hit) {
      ttc_hit = ttc_violation(s, k, forecast, cfg);
    }
  }
  sc.driving_direction = !drives_against_path(heading_errors, kTickSeconds);
  sc.ttc = ttc_hit ? 0.0 : 1.0;
  sc.raw_progress = s_last - s_first;
  sc.progress = best_progress > 1e-6 ? std::clamp(sc.raw_progress / best_progress, 0.0, 1.0) : 1.0;
  sc.speed_compliance = speed_compliance(speeds, limits, kTickSeconds);
  sc.comfort = comfort_fraction(roll, kTickSeconds, cfg.vehicle.wheelbase, cfg.comfort);
  sc.total = combine_score(
    sc.no_collision && sc.drivable_area && sc.driving_direction, sc.ttc, sc.progress, sc.speed_compliance,
    sc.comfort, cfg.weights);
  return sc;
}

void score_proposals(
  std::vector<Proposal> & proposals, const Forecast & forecast, const WorldMap & map, const ProposalContext & ctx,
  const PdmClosedConfig & cfg)
{
  double best = 0.0;
  for (Proposal & p : proposals) {
    p.score = score_proposal(p, forecast, map, ctx, 0.0, cfg);
    if (p.score.no_collision && p.score.drivable_area && p.score.driving_direction) {
      best = std::max(best, p.score.raw_progress);
    }
  }
  for (Proposal & p : proposals) {
    ProposalScore & sc = p.score;
    sc.progress = best > 1e-6 ? std::clamp(sc.raw_progress / best, 0.0, 1.0) : 1.0;
    sc.total = combine_score(
      sc.no_collision && sc.drivable_area && sc.driving_direction, sc.ttc, sc.progress, sc.speed_compliance,
      sc.comfort, cfg.weights);
  }
}

std::size_t select_proposal(const std::vector<Proposal> & proposals)
{
  auto offset_rank = [](double offset) { return offset == 0.0 ? 2 : (offset > 0.0 ? 1 : 0); };
  std::size_t best = 0;
  for (std::size_t i = 1; i < proposals.size(); ++i) {
    const Proposal & a = proposals[i];
    const Proposal & b = proposals[best];
    if (a.score.total != b.score.total) {
      if (a.score.total > b.score.total) {
        best = i;
      }
      continue;
    }
    if (a.speed_fraction != b.speed_fraction) {
      if (a.speed_fraction > b.speed_fraction) {
        best = i;
      }
      continue;
    }
    if (offset_rank(a.lateral_offset) > offset_rank(b.lateral_offset)) {
      best = i;
    }
  }
  return best;
}

bool rollout_collides(
  const std::vector<KinematicState> & rollout, const Forecast & forecast, std::size_t steps,
  const VehicleParameters & vehicle)
{
  for (std::size_t k = 1; k <= steps && k < rollout.size(); ++k) {
    const KinematicState & s = rollout[k];
    const OrientedBox box{s.position(), s.heading, vehicle.length, vehicle.width};
    for (const TrackedObject & a : forecast_at(forecast, k)) {
      if (at_fault_collision(box, s.v, a)) {
        return true;
      }
    }
  }
  return false;
}

PdmClosedPlanner::PdmClosedPlanner(PdmClosedConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

Trajectory PdmClosedPlanner::plan(const Observation & obs)
{
  diag_ = {};
  KinematicState ego = kinematic_from_ego(obs.ego, nullptr, cfg_.vehicle.wheelbase);
  if (ego.v > 0.5) {
    const Vec2 dir = unit_from_heading(obs.ego.heading);
    const double lateral = dot(obs.ego.acceleration, {-dir.y, dir.x});
    ego.steering = std::clamp(
      std::atan(lateral * cfg_.vehicle.wheelbase / (ego.v * ego.v)), -kMaxSteeringAngle, kMaxSteeringAngle);
  }

  try {
    const Path & full = route_.path_for(*obs.map, obs.route, obs.ego);
    const double s_full = full.project({obs.ego.position, obs.ego.heading}).s;
    ctx_.centerline = full.slice(s_full - 10.0, s_full + 200.0);
    ctx_.s_ego = std::min(s_full, 10.0);
  } catch (const Error &) {
    diag_.route_failure = true;
    diag_.emergency_brake = true;
    return braking_trajectory(obs.ego, obs.t, cfg_.brake_decel);
  }

  std::vector<TrackedObject> agents = obs.agents;
  if (!cfg_.forecasting) {
    for (TrackedObject & a : agents) {
      a.velocity = {};
    }
  }
  const Forecast forecast = forecast_agents(agents, cfg_.forecast_horizon);

  std::vector<Proposal> proposals = generate_proposals(ctx_, ego, obs.t, forecast, cfg_);
  simulate_proposals(proposals, ego, cfg_);
  score_proposals(proposals, forecast, *obs.map, ctx_, cfg_);
  diag_.winner = select_proposal(proposals);
  const auto check_steps = static_cast<std::size_t>(std::llround(cfg_.brake_check_horizon / kTickSeconds));
  diag_.emergency_brake = rollout_collides(proposals[diag_.winner].rollout, forecast, check_steps, cfg_.vehicle);
  Trajectory out = diag_.emergency_brake ? braking_trajectory(obs.ego, obs.t, cfg_.brake_decel)
                                         : proposals[diag_.winner].reference;
  diag_.proposals = std::move(proposals);
  return out;
}

}  // namespace pdm
