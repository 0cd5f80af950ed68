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
#include <random>

#include "pdm/errors.hpp"
#include "pdm/idm.hpp"
#include "pdm/route.hpp"
#include "test_util.hpp"

using namespace pdm;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Path straight_path(double length = 2000.0)
{
  Polyline pts = fixtures::line_x(0.0, length, 0.0, 1.0);
  return Path::resampled(pts, std::vector<double>(pts.size(), 30.0), 0.5);
}

TrackedObject car(int id, double x, double v)
{
  return {id, AgentKind::vehicle, {x, 0.0}, 0.0, {v, 0.0}, 4.6, 1.9};
}

// Eq. 1 integrated with a 1 ms step, free road.
double fine_free_road_speed(double v0, double a, double delta, double horizon)
{
  double v = 0.0;
  const double dt = 1e-3;
  const auto n = static_cast<long>(std::llround(horizon / dt));
  for (long k = 0; k < n; ++k) {
    v += a * (1.0 - std::pow(v / v0, delta)) * dt;
  }
  return v;
}

IdmParams random_params(std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> u(0.0, 1.0);
  IdmParams p;
  p.accel = 0.1 + 2.9 * u(rng);
  p.target_speed = 1.0 + 29.0 * u(rng);
  p.jam_distance = 4.0 * u(rng);
  p.time_headway = 3.0 * u(rng);
  p.exponent = 1.0 + 5.0 * u(rng);
  p.comfortable_decel = 0.5 + 3.0 * u(rng);
  return p;
}

}  // namespace

TEST(IdmAcceleration, FreeRoadFromStandstillIsA)
{
  IdmParams p;
  EXPECT_EQ(idm_acceleration({0.0, 0.0}, kInf, 0.0, p), p.accel);
}

TEST(IdmAcceleration, FreeRoadAtTargetSpeedIsZero)
{
  IdmParams p;
  p.target_speed = 13.7;
  EXPECT_EQ(idm_acceleration({0.0, 13.7}, kInf, 0.0, p), 0.0);
}

TEST(IdmAcceleration, StandstillAtJamDistanceIsZero)
{
  IdmParams p;
  EXPECT_DOUBLE_EQ(idm_acceleration({0.0, 0.0}, p.jam_distance, 0.0, p), 0.0);
}

TEST(IdmAcceleration, ClampedToBrakingBound)
{
  IdmParams p;
  EXPECT_EQ(idm_acceleration({0.0, 15.0}, 0.1, 15.0, p), -kMaxBraking);
  p.max_decel = 2.5;
  EXPECT_EQ(idm_acceleration({0.0, 15.0}, 0.1, 15.0, p), -2.5);
}

TEST(IdmAcceleration, NonPositiveGapThrows)
{
  IdmParams p;
  EXPECT_THROW(idm_acceleration({0.0, 5.0}, 0.0, 0.0, p), OverlapError);
  EXPECT_THROW(idm_acceleration({0.0, 5.0}, -1.0, 0.0, p), OverlapError);
}

TEST(IdmAcceleration, InvalidParamsRejected)
{
  IdmParams p;
  p.accel = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.time_headway = -0.1;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(IdmAcceleration, DesiredGapFormula)
{
  IdmParams p;
  const double v = 10.0;
  const double dv = 2.0;
  const double expected = p.jam_distance + v * p.time_headway + v * dv / (2.0 * std::sqrt(p.accel * p.comfortable_decel));
  EXPECT_DOUBLE_EQ(idm_desired_gap(v, dv, p), expected);
  EXPECT_DOUBLE_EQ(idm_desired_gap(0.0, -5.0, p), p.jam_distance);
}

TEST(IdmProperties, FixedPointsOverRandomParams)
{
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const IdmParams p = random_params(rng);
    EXPECT_EQ(idm_acceleration({0.0, 0.0}, kInf, 0.0, p), p.accel);
    EXPECT_EQ(idm_acceleration({0.0, p.target_speed}, kInf, 0.0, p), 0.0);
  }
}

TEST(IdmProperties, MonotoneInGap)
{
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const IdmParams p = random_params(rng);
    const double v = 30.0 * u(rng);
    const double dv = -10.0 + 20.0 * u(rng);
    double prev = -kInf;
    for (double s = 0.05; s < 300.0; s *= 1.3) {
      const double acc = idm_acceleration({0.0, v}, s, dv, p);
      EXPECT_GE(acc, prev) << "s=" << s;
      prev = acc;
    }
    EXPECT_GE(idm_acceleration({0.0, v}, kInf, dv, p), prev);
  }
}

TEST(IdmRollout, FreeRoadMatchesFineStepIntegration)
{
  IdmParams p;
  p.target_speed = 15.0;
  const Path path = straight_path();
  const auto roll = rollout_idm(path, {0.0, 0.0}, p, {}, 30.0, 0.1);
  ASSERT_EQ(roll.size(), 301u);
  const double oracle = fine_free_road_speed(15.0, 1.0, 4.0, 30.0);
  EXPECT_GE(roll.back().v, 14.85);
  EXPECT_GE(oracle, 14.85);
  EXPECT_NEAR(roll.back().v, oracle, 0.02);
}

TEST(IdmRollout, AtTargetSpeedAdvancesUniformly)
{
  IdmParams p;
  p.target_speed = 12.0;
  const auto roll = rollout_idm(straight_path(), {5.0, 12.0}, p, {}, 4.0, 0.1);
  for (std::size_t k = 0; k < roll.size(); ++k) {
    EXPECT_DOUBLE_EQ(roll[k].v, 12.0);
    EXPECT_NEAR(roll[k].x, 5.0 + 1.2 * static_cast<double>(k), 1e-9);
  }
}

TEST(IdmRollout, StopsBehindStationaryLead)
{
  IdmParams p;
  p.target_speed = 15.0;
  const Path path = straight_path();
  VehicleParameters ego;
  // Lead center 100 m + half lengths ahead: bumper gap 100 m.
  const std::vector<std::vector<TrackedObject>> steps{{car(1, 100.0 + ego.length, 0.0)}};
  const auto roll = rollout_idm(path, {0.0, 10.0}, p, steps, 120.0, 0.1, ego);
  for (const auto & st : roll) {
    EXPECT_LT(st.x, 100.0) << "overlap";
    EXPECT_GE(st.v, 0.0);
  }
  EXPECT_GE(100.0 - roll.back().x, p.jam_distance - 1e-6);
  EXPECT_NEAR(roll.back().v, 0.0, 1e-3);
}

TEST(IdmRollout, PositionsNonDecreasingSpeedsNonNegative)
{
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Path path = straight_path();
  for (int i = 0; i < 200; ++i) {
    IdmParams p = random_params(rng);
    const double v = 20.0 * u(rng);
    const std::vector<std::vector<TrackedObject>> steps{{car(1, 10.0 + 50.0 * u(rng), 0.0)}};
    const auto roll = rollout_idm(path, {0.0, v}, p, steps, 10.0, 0.1);
    for (std::size_t k = 1; k < roll.size(); ++k) {
      EXPECT_GE(roll[k].x, roll[k - 1].x);
      EXPECT_GE(roll[k].v, 0.0);
    }
  }
}

TEST(LeadingGap, NoAgentsIsInfinite)
{
  const LeadInfo lead = leading_gap(straight_path(), 0.0, 10.0, {}, {});
  EXPECT_TRUE(std::isinf(lead.gap));
  EXPECT_EQ(lead.closing_speed, 0.0);
}

TEST(LeadingGap, BumperToBumper)
{
  const std::vector<TrackedObject> agents{car(7, 20.0, 0.0)};
  const LeadInfo lead = leading_gap(straight_path(), 0.0, 8.0, {}, agents);
  EXPECT_NEAR(lead.gap, 15.4, 1e-9);
  EXPECT_NEAR(lead.closing_speed, 8.0, 1e-9);
  EXPECT_EQ(lead.agent_id, 7);
}

TEST(LeadingGap, NearestSelected)
{
  const std::vector<TrackedObject> agents{car(2, 30.0, 0.0), car(1, 15.0, 3.0)};
  const LeadInfo lead = leading_gap(straight_path(), 0.0, 5.0, {}, agents);
  EXPECT_EQ(lead.agent_id, 1);
  EXPECT_NEAR(lead.gap, 10.4, 1e-9);
  EXPECT_NEAR(lead.closing_speed, 2.0, 1e-9);
}

TEST(LeadingGap, IgnoresAgentsOutsideCorridorAndBehind)
{
  TrackedObject side = car(1, 20.0, 0.0);
  side.position.y = 4.0;
  const std::vector<TrackedObject> agents{side, car(2, 100.0, 0.0)};
  const LeadInfo lead = leading_gap(straight_path(), 200.0, 5.0, {}, agents);
  EXPECT_TRUE(std::isinf(lead.gap));
}
