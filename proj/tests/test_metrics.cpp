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
#include <vector>

#include "pdm/engine.hpp"
#include "pdm/errors.hpp"
#include "pdm/generator.hpp"
#include "pdm/metrics.hpp"
#include "pdm/planner.hpp"
#include "test_util.hpp"

using namespace pdm;
using namespace pdm::fixtures;

namespace {

class StandStillPlanner : public Planner {
public:
  std::string name() const override { return "stand_still"; }
  Trajectory plan(const Observation & obs) override { return braking_trajectory(obs.ego, obs.t, kMaxBraking); }
};

// Straight line at a fixed world heading from the current position.
class HeadingPlanner : public Planner {
public:
  explicit HeadingPlanner(double heading) : heading_(heading) {}
  std::string name() const override { return "heading"; }
  Trajectory plan(const Observation & obs) override
  {
    Trajectory t;
    const double v = obs.ego.speed();
    for (std::size_t k = 0; k < kPlanPoints; ++k) {
      const double tau = 0.1 * static_cast<double>(k);
      const Vec2 d{std::cos(heading_), std::sin(heading_)};
      t.points.push_back({obs.t + tau, obs.ego.position + d * (v * tau), heading_, v});
    }
    return t;
  }

private:
  double heading_;
};

OpenLoopLog shifted(const OpenLoopLog & log, double dy)
{
  OpenLoopLog out = log;
  for (auto & pred : out.predictions) {
    for (auto & p : pred.points) {
      p.position.y += dy;
    }
  }
  return out;
}

TrackedObject vehicle_at(Vec2 p, Vec2 v = {}, double heading = 0.0)
{
  return {1, AgentKind::vehicle, p, heading, v, 4.6, 1.9};
}

}  // namespace

TEST(AtFault, FrontalOverlapWhileMoving)
{
  const OrientedBox ego{{0.0, 0.0}, 0.0, 4.6, 1.9};
  EXPECT_TRUE(at_fault_collision(ego, 5.0, vehicle_at({4.0, 0.0})));
  EXPECT_FALSE(at_fault_collision(ego, 0.0, vehicle_at({4.0, 0.0})));
  EXPECT_FALSE(at_fault_collision(ego, 5.0, vehicle_at({20.0, 0.0})));
}

TEST(AtFault, RearStrikeNotBlamed)
{
  const OrientedBox ego{{0.0, 0.0}, 0.0, 4.6, 1.9};
  // Agent front bumper at x = -0.6, behind the rear-strike line.
  EXPECT_FALSE(at_fault_collision(ego, 5.0, vehicle_at({-2.9, 0.0})));
  EXPECT_TRUE(at_fault_collision(ego, 5.0, vehicle_at({-2.0, 0.0})));
}

TEST(Ttc, StationaryLeadAhead)
{
  const OrientedBox ego{{0.0, 0.0}, 0.0, 4.6, 1.9};
  // 15.4 m bumper gap closed at 10 m/s: first overlapping 0.1 s sample is 1.6 s.
  EXPECT_NEAR(time_to_collision(ego, {10.0, 0.0}, vehicle_at({20.0, 0.0})), 1.6, 1e-9);
  EXPECT_TRUE(std::isinf(time_to_collision(ego, {0.0, 0.0}, vehicle_at({5.0, 0.0}))));
  EXPECT_TRUE(std::isinf(time_to_collision(ego, {10.0, 0.0}, vehicle_at({-10.0, 0.0}, {15.0, 0.0}))));
  EXPECT_TRUE(std::isinf(time_to_collision(ego, {10.0, 0.0}, vehicle_at({45.0, 0.0}))));
  EXPECT_TRUE(std::isinf(time_to_collision(ego, {10.0, 0.0}, vehicle_at({20.0, 5.0}))));
}

TEST(Subscores, SpeedComplianceIntegratesOverspeed)
{
  const std::vector<double> limits(11, 10.0);
  std::vector<double> speeds(11, 10.0);
  EXPECT_DOUBLE_EQ(speed_compliance(speeds, limits, 0.1), 1.0);
  speeds.assign(11, 10.0 + kMaxOverspeed);
  EXPECT_NEAR(speed_compliance(speeds, limits, 0.1), 0.0, 1e-12);
  speeds.assign(11, 10.0 + 0.5 * kMaxOverspeed);
  EXPECT_NEAR(speed_compliance(speeds, limits, 0.1), 0.5, 1e-9);
  speeds.assign(11, 40.0);
  EXPECT_EQ(speed_compliance(speeds, limits, 0.1), 0.0);
}

TEST(Subscores, ComfortFraction)
{
  std::vector<KinematicState> calm(20, {0.0, 0.0, 0.0, 10.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(comfort_fraction(calm, 0.1, 3.1), 1.0);
  std::vector<KinematicState> harsh(20, {0.0, 0.0, 0.0, 10.0, 0.0, -6.0});
  EXPECT_DOUBLE_EQ(comfort_fraction(harsh, 0.1, 3.1), 0.0);
}

TEST(Subscores, WrongWayNeedsOneSecond)
{
  std::vector<double> err(30, 0.0);
  for (int k = 5; k < 14; ++k) {
    err[k] = 3.0;
  }
  EXPECT_FALSE(drives_against_path(err, 0.1));
  err[14] = 3.0;
  err[15] = 3.0;
  EXPECT_TRUE(drives_against_path(err, 0.1));
}

TEST(Subscores, CombineIsWeightedMeanTimesMultipliers)
{
  EXPECT_DOUBLE_EQ(combine_score(true, 1.0, 1.0, 1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(combine_score(false, 1.0, 1.0, 1.0, 1.0), 0.0);
  EXPECT_NEAR(combine_score(true, 0.0, 1.0, 1.0, 1.0), 11.0 / 16.0, 1e-12);
  EXPECT_NEAR(combine_score(true, 1.0, 0.5, 0.0, 1.0), 9.5 / 16.0, 1e-12);
}

TEST(ClosedLoopScore, CollisionZeroesScenario)
{
  const Scenario sc = straight_scenario(10.0, {constant_agent(1, {40.0, 0.0}, {})});
  ConstantVelocityPlanner planner;
  const RolloutLog log = run_closed_loop(sc, planner, SimMode::non_reactive);
  const ClsReport rep = score_closed_loop(log, sc);
  EXPECT_FALSE(rep.no_at_fault_collision);
  EXPECT_EQ(rep.cls, 0.0);
}

TEST(ClosedLoopScore, LeavingDrivableAreaZeroesScenario)
{
  const Scenario sc = straight_scenario(10.0);
  HeadingPlanner planner(0.3);
  const RolloutLog log = run_closed_loop(sc, planner, SimMode::non_reactive);
  const ClsReport rep = score_closed_loop(log, sc);
  EXPECT_FALSE(rep.drivable_area);
  EXPECT_TRUE(rep.driving_direction);
  EXPECT_EQ(rep.cls, 0.0);
}

TEST(ClosedLoopScore, NoProgressZeroesScenario)
{
  const Scenario sc = straight_scenario(1.0);
  StandStillPlanner planner;
  const RolloutLog log = run_closed_loop(sc, planner, SimMode::non_reactive);
  const ClsReport rep = score_closed_loop(log, sc);
  EXPECT_NEAR(rep.expert_progress, 15.0, 1e-6);
  EXPECT_LT(rep.ego_progress, kMinProgress);
  EXPECT_FALSE(rep.makes_progress);
  EXPECT_EQ(rep.cls, 0.0);
}

TEST(ClosedLoopScore, ProgressRatioCapsAtOne)
{
  // The expert crawls 15 m; the IDM ego covers far more.
  const Scenario sc = straight_scenario(1.0, {}, 10.0);
  IdmPlanner planner;
  const RolloutLog log = run_closed_loop(sc, planner, SimMode::non_reactive);
  const ClsReport rep = score_closed_loop(log, sc);
  EXPECT_GT(rep.ego_progress, 2.0 * rep.expert_progress);
  EXPECT_DOUBLE_EQ(rep.progress, 1.0);
  EXPECT_GT(rep.cls, 0.0);
  EXPECT_LE(rep.cls, 100.0);
}

TEST(ClosedLoopScore, ExpertReplayScoresHigh)
{
  const Scenario sc = straight_scenario(10.0);
  LogReplayPlanner planner;
  const RolloutLog log = run_closed_loop(sc, planner, SimMode::non_reactive);
  const ClsReport rep = score_closed_loop(log, sc);
  EXPECT_TRUE(rep.no_at_fault_collision);
  EXPECT_GT(rep.progress, 0.95);
  EXPECT_GT(rep.cls, 95.0);
}

TEST(OpenLoopScore, LogReplayIsPerfect)
{
  const Scenario sc = generate_scenario({"curve"}, 5);
  LogReplayPlanner planner;
  const OpenLoopLog log = run_open_loop(sc, planner);
  const OlsReport rep = score_open_loop(log, sc);
  EXPECT_EQ(rep.ticks, 71u);
  EXPECT_DOUBLE_EQ(rep.miss_rate, 0.0);
  EXPECT_DOUBLE_EQ(rep.ols, 100.0);
}

TEST(OpenLoopScore, FarOffsetScoresZero)
{
  const Scenario sc = straight_scenario(10.0);
  LogReplayPlanner planner;
  const OpenLoopLog log = run_open_loop(sc, planner);
  const OlsReport rep = score_open_loop(shifted(log, 100.0), sc);
  EXPECT_DOUBLE_EQ(rep.miss_rate, 1.0);
  EXPECT_EQ(rep.ols, 0.0);
}

TEST(OpenLoopScore, MonotoneInDisplacement)
{
  const Scenario sc = straight_scenario(10.0);
  LogReplayPlanner planner;
  const OpenLoopLog log = run_open_loop(sc, planner);
  double prev = std::numeric_limits<double>::infinity();
  for (double d = 0.0; d <= 10.0; d += 0.25) {
    const OlsReport rep = score_open_loop(shifted(log, d), sc);
    EXPECT_LE(rep.ols, prev + 1e-12) << "d=" << d;
    EXPECT_NEAR(rep.horizons[0].ade, d, 1e-9);
    EXPECT_NEAR(rep.horizons[2].fde, d, 1e-9);
    prev = rep.ols;
  }
  EXPECT_LT(score_open_loop(shifted(log, 1.0), sc).ols, 100.0);
}

TEST(OpenLoopScore, ShortPredictionRejected)
{
  const Scenario sc = straight_scenario(10.0);
  LogReplayPlanner planner;
  OpenLoopLog log = run_open_loop(sc, planner);
  log.predictions[3].points.resize(40);
  EXPECT_THROW(score_open_loop(log, sc), ConfigError);
}

TEST(Aggregate, OverallIsMeanOfThree)
{
  const std::vector<ScenarioScores> s{{"a", 80.0, 70.0, 60.0, 2.0}, {"b", 100.0, 90.0, 40.0, 4.0}};
  const BenchmarkRow row = aggregate(s);
  EXPECT_DOUBLE_EQ(row.cls_r, 90.0);
  EXPECT_DOUBLE_EQ(row.cls_nr, 80.0);
  EXPECT_DOUBLE_EQ(row.ols, 50.0);
  EXPECT_DOUBLE_EQ(row.runtime_ms, 3.0);
  EXPECT_DOUBLE_EQ(row.overall, (90.0 + 80.0 + 50.0) / 3.0);
  EXPECT_EQ(row.scenarios, 2u);
}
