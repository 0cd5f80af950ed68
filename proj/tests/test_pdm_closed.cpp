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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "pdm/engine.hpp"
#include "pdm/errors.hpp"
#include "pdm/generator.hpp"
#include "pdm/pdm_closed.hpp"
#include "test_util.hpp"

using namespace pdm;
using namespace pdm::fixtures;

namespace {

Proposal scored(double total, double fraction, double offset)
{
  Proposal p;
  p.speed_fraction = fraction;
  p.lateral_offset = offset;
  p.score.total = total;
  return p;
}

// Exhaustive re-scoring of the planner's proposals, independent of select_proposal.
std::size_t oracle_argmax(const std::vector<Proposal> & props)
{
  double best = -std::numeric_limits<double>::infinity();
  for (const auto & p : props) {
    best = std::max(best, p.score.total);
  }
  std::size_t pick = props.size();
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i].score.total != best) {
      continue;
    }
    if (pick == props.size()) {
      pick = i;
      continue;
    }
    const auto rank = [](double o) { return o == 0.0 ? 2 : (o > 0.0 ? 1 : 0); };
    const auto key = [&](const Proposal & p) { return std::pair{p.speed_fraction, rank(p.lateral_offset)}; };
    if (key(props[i]) > key(props[pick])) {
      pick = i;
    }
  }
  return pick;
}

}  // namespace

TEST(PdmClosedConfig, Validation)
{
  PdmClosedConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.speed_fractions.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.proposal_horizon = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(PdmClosed, FifteenProposalsOffsetsOuter)
{
  const Scenario sc = straight_scenario(8.0);
  PdmClosedPlanner planner;
  planner.plan(logged_observation(sc, 0));
  const auto & props = planner.diagnostics().proposals;
  ASSERT_EQ(props.size(), 15u);
  EXPECT_EQ(props[0].lateral_offset, -1.0);
  EXPECT_EQ(props[0].speed_fraction, 0.2);
  EXPECT_EQ(props[4].speed_fraction, 1.0);
  EXPECT_EQ(props[5].lateral_offset, 0.0);
  EXPECT_EQ(props[14].lateral_offset, 1.0);
  for (const auto & p : props) {
    EXPECT_EQ(p.reference.points.size(), kPlanPoints);
    EXPECT_EQ(p.rollout.size(), 41u);
    EXPECT_NEAR(p.target_speed, p.speed_fraction * 15.0, 1e-12);
  }
}

TEST(PdmClosed, EmptyRoadFollowsCenterlineAtLimit)
{
  const Scenario sc = straight_scenario(12.0, {}, 12.0);
  PdmClosedPlanner planner;
  const Trajectory t = planner.plan(logged_observation(sc, 0));
  const auto & diag = planner.diagnostics();
  EXPECT_FALSE(diag.emergency_brake);
  EXPECT_EQ(diag.proposals[diag.winner].speed_fraction, 1.0);
  EXPECT_EQ(diag.proposals[diag.winner].lateral_offset, 0.0);
  EXPECT_NEAR(diag.proposals[diag.winner].score.total, 1.0, 1e-12);
  ASSERT_EQ(t.points.size(), kPlanPoints);
  EXPECT_NEAR(t.end_time() - t.start_time(), 8.0, 1e-9);
  for (const auto & p : t.points) {
    EXPECT_NEAR(p.position.y, 0.0, 1e-9);
    EXPECT_NEAR(p.v, 12.0, 1e-6);
  }
}

TEST(PdmClosed, StationaryLeadTriggersEmergencyBrake)
{
  // Lead rear bumper 5 m ahead of the ego front bumper.
  const Scenario sc = straight_scenario(10.0, {constant_agent(1, {4.6 + 5.0, 0.0}, {})});
  PdmClosedPlanner planner;
  const Trajectory t = planner.plan(logged_observation(sc, 0));
  EXPECT_TRUE(planner.diagnostics().emergency_brake);
  const Trajectory expected = braking_trajectory(sc.ego_at_tick(0), 0.0, kMaxBraking);
  EXPECT_EQ(t, expected);
  EXPECT_NEAR((t.points[0].v - t.points[10].v) / 1.0, kMaxBraking, 1e-9);
}

TEST(PdmClosed, ParkedCarIsPassedOnTheLeft)
{
  // Parked car covers y in [-2.45, -0.55]: the centerline and right offset are blocked.
  AgentTrack parked = constant_agent(1, {25.0, -1.5}, {}, AgentKind::static_object);
  const Scenario sc = straight_scenario(8.0, {parked});
  PdmClosedPlanner planner;
  planner.plan(logged_observation(sc, 0));
  const auto & diag = planner.diagnostics();
  EXPECT_FALSE(diag.emergency_brake);
  const Proposal & win = diag.proposals[diag.winner];
  EXPECT_EQ(win.lateral_offset, 1.0);

  // Oracle: rescore every proposal and take the argmax with the documented tie order.
  const Observation obs = logged_observation(sc, 0);
  const Forecast forecast = forecast_agents(obs.agents, 8.0);
  std::vector<Proposal> rescored = diag.proposals;
  score_proposals(rescored, forecast, *sc.map, planner.context(), planner.config());
  EXPECT_EQ(oracle_argmax(rescored), diag.winner);
  for (const auto & p : rescored) {
    if (p.lateral_offset == 1.0 && p.speed_fraction == 1.0) {
      EXPECT_TRUE(p.score.no_collision);
    }
    if (p.lateral_offset == 0.0) {
      EXPECT_LT(p.score.total, win.score.total);
    }
  }
}

TEST(PdmClosed, SelectionTieBreaks)
{
  EXPECT_EQ(select_proposal({scored(0.5, 1.0, 0.0), scored(0.7, 0.2, -1.0)}), 1u);
  EXPECT_EQ(select_proposal({scored(0.7, 0.6, 0.0), scored(0.7, 0.8, -1.0)}), 1u);
  EXPECT_EQ(select_proposal({scored(0.7, 0.8, -1.0), scored(0.7, 0.8, 1.0), scored(0.7, 0.8, 0.0)}), 2u);
  EXPECT_EQ(select_proposal({scored(0.7, 0.8, -1.0), scored(0.7, 0.8, 1.0)}), 1u);
}

TEST(PdmClosed, RouteFailureBrakesAndFlags)
{
  Scenario sc = straight_scenario(10.0);
  Observation obs = logged_observation(sc, 0);
  obs.ego.position.y = 30.0;
  PdmClosedPlanner planner;
  const Trajectory t = planner.plan(obs);
  EXPECT_TRUE(planner.diagnostics().route_failure);
  EXPECT_TRUE(planner.diagnostics().emergency_brake);
  EXPECT_EQ(t.points.back().v, 0.0);
}

TEST(PdmClosed, ForecastingOffFreezesAgents)
{
  // A vehicle crossing from the side reaches the lane in ~2 s.
  AgentTrack crossing = constant_agent(1, {30.0, -12.0}, {0.0, 5.0});
  const Scenario sc = straight_scenario(10.0, {crossing});
  PdmClosedConfig off;
  off.forecasting = false;
  PdmClosedPlanner with;
  PdmClosedPlanner without(off);
  with.plan(logged_observation(sc, 0));
  without.plan(logged_observation(sc, 0));
  const auto & wd = with.diagnostics();
  const auto & nd = without.diagnostics();
  EXPECT_LT(wd.proposals[wd.winner].speed_fraction, nd.proposals[nd.winner].speed_fraction + 1e-12);
  EXPECT_TRUE(nd.proposals[nd.winner].score.no_collision);
}

TEST(PdmClosed, RolloutCollisionCheckWindow)
{
  const VehicleParameters vehicle;
  std::vector<KinematicState> roll;
  for (int k = 0; k <= 40; ++k) {
    roll.push_back({1.0 * k, 0.0, 0.0, 10.0, 0.0, 0.0});
  }
  const std::vector<TrackedObject> agents{{1, AgentKind::vehicle, {30.0, 0.0}, 0.0, {}, 4.6, 1.9}};
  const Forecast f = forecast_agents(agents, 8.0);
  EXPECT_FALSE(rollout_collides(roll, f, 20, vehicle));
  EXPECT_TRUE(rollout_collides(roll, f, 30, vehicle));
}

TEST(PdmClosed, DeterministicPlans)
{
  const Scenario sc = generate_scenario({"crossing_pedestrian"}, 3);
  PdmClosedPlanner a;
  PdmClosedPlanner b;
  for (long k = 0; k < 100; k += 7) {
    EXPECT_EQ(a.plan(logged_observation(sc, k)), b.plan(logged_observation(sc, k)));
  }
}
