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

#include <string>
#include <vector>

#include "pdm/idm.hpp"
#include "pdm/metrics.hpp"
#include "pdm/planner.hpp"
#include "pdm/route.hpp"
#include "pdm/simkit.hpp"

namespace pdm {

struct PdmClosedConfig {
  std::vector<double> speed_fractions{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> lateral_offsets{-1.0, 0.0, 1.0};
  /// Constant-velocity forecasting; when off, agents are frozen in place.
  bool forecasting = true;
  /// Proposal IDM; braking beyond max_decel is left to the emergency brake.
  IdmParams idm{.max_decel = 2.5};
  double forecast_horizon = 8.0;    // F [s]
  double proposal_horizon = 4.0;    // H [s]
  double brake_check_horizon = 2.0;
  double brake_decel = kMaxBraking;
  ScoreWeights weights;
  ComfortBounds comfort;
  double ttc_threshold = kTtcThreshold;
  TrackerParams tracker;
  VehicleParameters vehicle;

  /// Throws ConfigError for empty option sets or non-positive horizons.
  void validate() const;
};

struct ProposalScore {
  bool no_collision = true;
  bool drivable_area = true;
  bool driving_direction = true;
  double ttc = 1.0;
  double progress = 1.0;
  double speed_compliance = 1.0;
  double comfort = 1.0;
  double raw_progress = 0.0;
  double total = 0.0;
};

struct Proposal {
  double speed_fraction = 0.0;
  double lateral_offset = 0.0;
  /// Offset path degenerated and the centerline was used instead.
  bool fallback = false;
  double target_speed = 0.0;
  /// IDM reference over the forecast horizon.
  Trajectory reference;
  /// Closed-loop simulation of the reference over the proposal horizon.
  std::vector<KinematicState> rollout;
  ProposalScore score;
};

/// Proposal geometry for one plan call.
struct ProposalContext {
  Path centerline;
  double s_ego = 0.0;
};

/// Builds the unsimulated proposals (fractions x offsets, offsets outer).
std::vector<Proposal> generate_proposals(
  const ProposalContext & ctx, const KinematicState & ego, double t0, const Forecast & forecast,
  const PdmClosedConfig & cfg);

void simulate_proposals(std::vector<Proposal> & proposals, const KinematicState & ego, const PdmClosedConfig & cfg);

/// Scores one simulated proposal; progress is left unnormalized in
/// raw_progress and normalized by `best_progress`.
ProposalScore score_proposal(
  const Proposal & p, const Forecast & forecast, const WorldMap & map, const ProposalContext & ctx,
  double best_progress, const PdmClosedConfig & cfg);

/// Scores all proposals (normalizing progress by the best one).
void score_proposals(
  std::vector<Proposal> & proposals, const Forecast & forecast, const WorldMap & map, const ProposalContext & ctx,
  const PdmClosedConfig & cfg);

/// Index of the argmax; ties prefer higher speed, then zero, then left offset.
std::size_t select_proposal(const std::vector<Proposal> & proposals);

/// First rollout step (within `steps`) whose footprint overlaps the forecast.
bool rollout_collides(
  const std::vector<KinematicState> & rollout, const Forecast & forecast, std::size_t steps,
  const VehicleParameters & vehicle);

struct PlanDiagnostics {
  bool emergency_brake = false;
  bool route_failure = false;
  std::size_t winner = 0;
  std::vector<Proposal> proposals;
};

class PdmClosedPlanner : public Planner {
public:
  explicit PdmClosedPlanner(PdmClosedConfig cfg = {});
  std::string name() const override { return "pdm_closed"; }
  Trajectory plan(const Observation & obs) override;
  /// Details of the most recent plan() call.
  const PlanDiagnostics & diagnostics() const { return diag_; }
  const PdmClosedConfig & config() const { return cfg_; }
  /// Centerline sliced around the ego at the most recent plan() call.
  const ProposalContext & context() const { return ctx_; }

private:
  PdmClosedConfig cfg_;
  RouteCache route_;
  ProposalContext ctx_;
  PlanDiagnostics diag_;
};

}  // namespace pdm
