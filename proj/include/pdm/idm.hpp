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

#include <limits>
#include <span>
#include <vector>

#include "pdm/route.hpp"
#include "pdm/world.hpp"

namespace pdm {

/// Hard braking bound applied to every IDM acceleration [m/s^2].
inline constexpr double kMaxBraking = 4.0;
/// Extra lateral clearance added to half the ego width when scanning for leads.
inline constexpr double kCorridorMargin = 0.5;

struct IdmParams {
  double accel = 1.0;              ///< a, maximum acceleration
  double target_speed = 15.0;      ///< v0
  double jam_distance = 1.0;       ///< s0
  double time_headway = 1.5;       ///< T
  double exponent = 4.0;           ///< delta
  double comfortable_decel = 1.5;  ///< b
  double max_decel = kMaxBraking;  ///< lower clamp on the output

  void validate() const;
};

struct LongitudinalState {
  double x = 0.0;
  double v = 0.0;

  bool operator==(const LongitudinalState &) const = default;
};

/// s* = s0 + max(0, v*T + v*dv / (2*sqrt(a*b))).
double idm_desired_gap(double v, double closing_speed, const IdmParams & p);

/// a * (1 - (v/v0)^delta - (s*/s)^2) clamped to [-max_decel, a].
/// `gap` may be +infinity for a free road; throws OverlapError when gap <= 0.
double idm_acceleration(const LongitudinalState & st, double gap, double closing_speed, const IdmParams & p);

struct LeadInfo {
  double gap = std::numeric_limits<double>::infinity();
  double closing_speed = 0.0;
  int agent_id = -1;
};

/// Nearest agent ahead of ego_s whose footprint enters the corridor of half
/// width (ego width / 2 + margin) around the path. The gap is bumper to bumper
/// along the path; the closing speed is ego speed minus the lead's speed
/// projected on the path tangent.
LeadInfo leading_gap(
  const Path & path, double ego_s, double ego_speed, const VehicleParameters & ego,
  std::span<const TrackedObject> agents);

/// Agent footprints pre-projected onto one path for every step of a horizon.
class CorridorOccupancy {
public:
  struct Span {
    double s_min;
    double s_max;
    double s_center;
    double speed_along;
    int agent_id;
  };

  CorridorOccupancy(
    const Path & path, std::span<const std::vector<TrackedObject>> steps, double half_width);

  /// Lead query at a step index (clamped to the last available step).
  LeadInfo lead_at(std::size_t step, double ego_s, double ego_speed, double ego_half_length) const;
  std::size_t num_steps() const { return spans_.size(); }

private:
  std::vector<std::vector<Span>> spans_;
};

/// Forward integration of the IDM policy along a path. Speed is integrated
/// with explicit Euler and clamped at zero; position uses the mean of the
/// step's start and end speeds. An overlapping lead forces full braking.
std::vector<LongitudinalState> rollout_idm(
  const LongitudinalState & init, const IdmParams & p, const CorridorOccupancy & occupancy,
  double horizon, double dt, double ego_half_length);

/// Convenience overload that builds the occupancy from per-step agent states
/// (index k holds the agents at time k * dt).
std::vector<LongitudinalState> rollout_idm(
  const Path & path, const LongitudinalState & init, const IdmParams & p,
  std::span<const std::vector<TrackedObject>> agent_steps, double horizon, double dt,
  const VehicleParameters & ego = {});

}  // namespace pdm
