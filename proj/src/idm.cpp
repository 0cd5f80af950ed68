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

#include "pdm/idm.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "pdm/errors.hpp"

namespace pdm {

void IdmParams::validate() const
{
  if (!(accel > 0.0) || !(target_speed > 0.0) || !(exponent > 0.0) || !(comfortable_decel > 0.0) ||
      !(jam_distance >= 0.0) || !(time_headway >= 0.0) || !(max_decel > 0.0))
  {
    throw ConfigError("IDM parameters violate a>0, v0>0, delta>0, b>0, s0>=0, T>=0, max_decel>0");
  }
}

double idm_desired_gap(double v, double closing_speed, const IdmParams & p)
{
  const double dynamic =
    v * p.time_headway + v * closing_speed / (2.0 * std::sqrt(p.accel * p.comfortable_decel));
  return p.jam_distance + std::max(0.0, dynamic);
}

double idm_acceleration(const LongitudinalState & st, double gap, double closing_speed, const IdmParams & p)
{
  if (!(gap > 0.0)) {
    throw OverlapError("gap to the leading entity is not positive");
  }
  const double v = std::max(0.0, st.v);
  const double free_term = std::pow(v / p.target_speed, p.exponent);
  double interaction = 0.0;
  if (std::isfinite(gap)) {
    const double ratio = idm_desired_gap(v, closing_speed, p) / gap;
    interaction = ratio * ratio;
  }
  const double acc = p.accel * (1.0 - free_term - interaction);
  return std::clamp(acc, -p.max_decel, p.accel);
}

namespace {

struct AgentOnPath {
  bool in_corridor = false;
  CorridorOccupancy::Span span{};
  double s_hint = 0.0;
};

AgentOnPath locate(const Path & path, const TrackedObject & agent, double half_width, const double * s_hint)
{
  AgentOnPath out;
  const Pose2 pose{agent.position, agent.heading};
  const double reach = 0.5 * std::hypot(agent.length, agent.width);
  const PathProjection center = s_hint != nullptr
                                  ? path.project_near(pose, *s_hint, agent.velocity.norm() * 0.2 + reach + 5.0)
                                  : path.project_near(pose, 0.5 * path.length(), path.length() + 1.0);
  out.s_hint = center.s;
  if (std::abs(center.d) > half_width + reach) {
    return out;
  }
  // Agents past either end of the path are not on it.
  if (center.s <= 0.0 || center.s >= path.length()) {
    return out;
  }
  double s_min = center.s;
  double s_max = center.s;
  double d_min = center.d;
  double d_max = center.d;
  for (const Vec2 & corner : agent.box().corners()) {
    const PathProjection pc = path.project_near({corner, agent.heading}, center.s, reach + 2.0);
    s_min = std::min(s_min, pc.s);
    s_max = std::max(s_max, pc.s);
    d_min = std::min(d_min, pc.d);
    d_max = std::max(d_max, pc.d);
  }
  if (d_max < -half_width || d_min > half_width) {
    return out;
  }
  const Pose2 tangent = path.pose_at(center.s);
  out.in_corridor = true;
  out.span = {s_min, s_max, center.s, dot(agent.velocity, unit_from_heading(tangent.heading)), agent.id};
  return out;
}

LeadInfo nearest_ahead(
  std::span<const CorridorOccupancy::Span> spans, double ego_s, double ego_speed, double ego_half_length)
{
  LeadInfo lead;
  for (const auto & span : spans) {
    if (span.s_center <= ego_s) {
      continue;
    }
    const double gap = span.s_min - (ego_s + ego_half_length);
    if (gap < lead.gap) {
      lead.gap = gap;
      lead.closing_speed = ego_speed - span.speed_along;
      lead.agent_id = span.agent_id;
    }
  }
  return lead;
}

}  // namespace

LeadInfo leading_gap(
  const Path & path, double ego_s, double ego_speed, const VehicleParameters & ego,
  std::span<const TrackedObject> agents)
{
  std::vector<CorridorOccupancy::Span> spans;
  const double half_width = 0.5 * ego.width + kCorridorMargin;
  for (const TrackedObject & agent : agents) {
    const AgentOnPath located = locate(path, agent, half_width, nullptr);
    if (located.in_corridor) {
      spans.push_back(located.span);
    }
  }
  return nearest_ahead(spans, ego_s, ego_speed, 0.5 * ego.length);
}

CorridorOccupancy::CorridorOccupancy(
  const Path & path, std::span<const std::vector<TrackedObject>> steps, double half_width)
{
  spans_.resize(steps.size());
  std::unordered_map<int, double> hints;
  for (std::size_t k = 0; k < steps.size(); ++k) {
    for (const TrackedObject & agent : steps[k]) {
      const auto it = hints.find(agent.id);
      const AgentOnPath located = locate(path, agent, half_width, it == hints.end() ? nullptr : &it->second);
      hints[agent.id] = located.s_hint;
      if (located.in_corridor) {
        spans_[k].push_back(located.span);
      }
    }
  }
}

LeadInfo CorridorOccupancy::lead_at(std::size_t step, double ego_s, double ego_speed, double ego_half_length) const
{
  if (spans_.empty()) {
    return {};
  }
  return nearest_ahead(spans_[std::min(step, spans_.size() - 1)], ego_s, ego_speed, ego_half_length);
}

std::vector<LongitudinalState> rollout_idm(
  const LongitudinalState & init, const IdmParams & p, const CorridorOccupancy & occupancy, double horizon,
  double dt, double ego_half_length)
{
  p.validate();
  if (!(dt > 0.0) || !(horizon >= 0.0)) {
    throw ConfigError("rollout needs dt > 0 and horizon >= 0");
  }
  const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
  std::vector<LongitudinalState> out;
  out.reserve(steps + 1);
  LongitudinalState st{init.x, std::max(0.0, init.v)};
  out.push_back(st);
  for (std::size_t k = 0; k < steps; ++k) {
    const LeadInfo lead = occupancy.lead_at(k, st.x, st.v, ego_half_length);
    const double acc =
      lead.gap > 0.0 ? idm_acceleration(st, lead.gap, lead.closing_speed, p) : -p.max_decel;
    const double v_next = std::max(0.0, st.v + acc * dt);
    st.x += 0.5 * (st.v + v_next) * dt;
    st.v = v_next;
    out.push_back(st);
  }
  return out;
}

std::vector<LongitudinalState> rollout_idm(
  const Path & path, const LongitudinalState & init, const IdmParams & p,
  std::span<const std::vector<TrackedObject>> agent_steps, double horizon, double dt,
  const VehicleParameters & ego)
{
  const CorridorOccupancy occupancy(path, agent_steps, 0.5 * ego.width + kCorridorMargin);
  return rollout_idm(init, p, occupancy, horizon, dt, 0.5 * ego.length);
}

}  // namespace pdm
