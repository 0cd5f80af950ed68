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

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "pdm/errors.hpp"
#include "pdm/simkit.hpp"

using namespace pdm;

namespace {

// Gain of the discrete infinite-horizon LQR by Riccati iteration.
Eigen::RowVector2d dare_gain(const Eigen::Matrix2d & A, const Eigen::Vector2d & B, const Eigen::Matrix2d & Q, double R)
{
  Eigen::Matrix2d P = Q;
  for (int i = 0; i < 200000; ++i) {
    const double s = R + B.dot(P * B);
    const Eigen::RowVector2d K = (B.transpose() * P * A) / s;
    const Eigen::Matrix2d next = Q + A.transpose() * P * (A - B * K);
    const double change = (next - P).cwiseAbs().maxCoeff();
    P = next;
    if (change < 1e-15) {
      break;
    }
  }
  return (B.transpose() * P * A) / (R + B.dot(P * B));
}

Trajectory straight_reference(double v, double t0 = 0.0, double y = 0.0, std::size_t n = 81)
{
  Trajectory tr;
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = 0.1 * static_cast<double>(k);
    tr.points.push_back({t0 + tau, {v * tau, y}, 0.0, v});
  }
  return tr;
}

}  // namespace

TEST(Bicycle, StraightStepAdvancesAlongHeading)
{
  const KinematicState s{0.0, 0.0, 0.0, 10.0, 0.0, 0.0};
  const KinematicState n = bicycle_step(s, {0.0, 0.0}, 0.1, 3.1);
  EXPECT_NEAR(n.x, 1.0, 1e-12);
  EXPECT_NEAR(n.y, 0.0, 1e-12);
  EXPECT_EQ(n.heading, 0.0);
  EXPECT_EQ(n.v, 10.0);
}

TEST(Bicycle, StandstillKeepsPose)
{
  const KinematicState s{3.0, 4.0, 0.7, 0.0, 0.3, 0.0};
  const KinematicState n = bicycle_step(s, {0.0, 0.0}, 0.1, 3.1);
  EXPECT_EQ(n.x, 3.0);
  EXPECT_EQ(n.y, 4.0);
  EXPECT_EQ(n.heading, 0.7);
}

TEST(Bicycle, ConstantSteeringTracesAnalyticCircle)
{
  const double L = 3.1;
  const double phi = 0.1;
  const double v = 5.0;
  const double radius = L / std::tan(phi);
  KinematicState s{0.0, 0.0, 0.0, v, phi, 0.0};
  for (int k = 1; k <= 100; ++k) {
    s = bicycle_step(s, {0.0, 0.0}, 0.1, L);
    const double theta = v * 0.1 * k / radius;
    EXPECT_NEAR(s.x, radius * std::sin(theta), 1e-2);
    EXPECT_NEAR(s.y, radius * (1.0 - std::cos(theta)), 1e-2);
  }
  EXPECT_NEAR(radius, 30.8966, 1e-4);
}

TEST(Bicycle, CommandsAndStatesClamped)
{
  const KinematicState s{0.0, 0.0, 0.0, 0.1, 0.54, 0.0};
  const KinematicState n = bicycle_step(s, {-10.0, 10.0}, 0.1, 3.1);
  EXPECT_GE(n.v, 0.0);
  EXPECT_LE(n.steering, kMaxSteeringAngle);
  EXPECT_GE(n.accel, -kMaxAcceleration);
}

TEST(Bicycle, ZeroCommandsKeepSpeedAndLine)
{
  KinematicState s{1.0, 2.0, 0.4, 7.0, 0.0, 0.0};
  for (int k = 0; k < 50; ++k) {
    s = bicycle_step(s, {0.0, 0.0}, 0.1, 3.1);
  }
  EXPECT_DOUBLE_EQ(s.v, 7.0);
  EXPECT_DOUBLE_EQ(s.heading, 0.4);
  EXPECT_NEAR(s.x, 1.0 + 35.0 * std::cos(0.4), 1e-9);
  EXPECT_NEAR(s.y, 2.0 + 35.0 * std::sin(0.4), 1e-9);
}

TEST(LqrGains, LongitudinalMatchesRiccati)
{
  const double dt = 0.1;
  Eigen::Matrix2d A;
  A << 1.0, dt, 0.0, 1.0;
  const Eigen::Vector2d B(0.5 * dt * dt, dt);
  const Eigen::Matrix2d Q = Eigen::Vector2d(1.0, 0.1).asDiagonal();
  const Eigen::RowVector2d K = dare_gain(A, B, Q, 1.0);
  EXPECT_NEAR(LqrGains::longitudinal[0], K(0), 1e-9);
  EXPECT_NEAR(LqrGains::longitudinal[1], K(1), 1e-9);
}

TEST(LqrGains, LateralTableMatchesRiccati)
{
  const double dt = 0.1;
  const double L = 3.1;
  const Eigen::Matrix2d Q = Eigen::Vector2d(1.0, 2.0).asDiagonal();
  for (int v = 1; v <= 20; ++v) {
    Eigen::Matrix2d A;
    A << 1.0, v * dt, 0.0, 1.0;
    const Eigen::Vector2d B(0.5 * v * v * dt * dt / L, v * dt / L);
    const Eigen::RowVector2d K = dare_gain(A, B, Q, 8.0);
    EXPECT_NEAR(LqrGains::lateral[v - 1][0], K(0), 1e-9) << "v=" << v;
    EXPECT_NEAR(LqrGains::lateral[v - 1][1], K(1), 1e-9) << "v=" << v;
  }
  const auto mid = LqrGains::lateral_at(4.5);
  EXPECT_NEAR(mid[0], 0.5 * (LqrGains::lateral[3][0] + LqrGains::lateral[4][0]), 1e-12);
  EXPECT_EQ(LqrGains::lateral_at(50.0), LqrGains::lateral[19]);
}

TEST(Tracker, ZeroErrorFixedPoint)
{
  const Trajectory ref = straight_reference(10.0);
  const KinematicState s{0.0, 0.0, 0.0, 10.0, 0.0, 0.0};
  const ControlCommand c = track(ref, s);
  EXPECT_LT(std::abs(c.accel), 1e-6);
  EXPECT_LT(std::abs(c.steering_rate), 1e-6);
}

TEST(Tracker, LeftOffsetSteersRight)
{
  const Trajectory ref = straight_reference(10.0);
  const KinematicState s{0.0, 1.0, 0.0, 10.0, 0.0, 0.0};
  EXPECT_LT(track(ref, s).steering_rate, 0.0);
}

TEST(Tracker, SlowerThanReferenceAccelerates)
{
  const Trajectory ref = straight_reference(10.0);
  const KinematicState s{0.0, 0.0, 0.0, 8.0, 0.0, 0.0};
  EXPECT_GT(track(ref, s).accel, 0.0);
}

TEST(Tracker, IgnoresWaypointsBeyondTwoSeconds)
{
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  const Trajectory ref = straight_reference(10.0, 3.0);
  const KinematicState s{0.3, 0.4, 0.05, 9.0, 0.02, 0.0};
  const ControlCommand base = track(ref, s);
  for (int i = 0; i < 1000; ++i) {
    Trajectory fuzzed = ref;
    for (auto & p : fuzzed.points) {
      if (p.t > 3.0 + 2.0 + 1e-9) {
        p.position = {u(rng), u(rng)};
        p.heading = u(rng);
        p.v = u(rng);
      }
    }
    EXPECT_EQ(track(fuzzed, s), base);
  }
}

TEST(Tracker, ShortTrajectoryRejected)
{
  const Trajectory ref = straight_reference(10.0, 0.0, 0.0, 15);
  EXPECT_THROW(track(ref, {}), GeometryError);
}

TEST(Tracker, ConvergesOntoOffsetReference)
{
  Trajectory ref;
  for (int k = 0; k <= 200; ++k) {
    ref.points.push_back({0.1 * k, {10.0 * 0.1 * k, 0.5}, 0.0, 10.0});
  }
  const auto states = simulate_tracking(ref, {0.0, 0.0, 0.0, 10.0, 0.0, 0.0}, 100);
  ASSERT_EQ(states.size(), 101u);
  EXPECT_NEAR(states.back().y, 0.5, 0.05);
  EXPECT_NEAR(states.back().v, 10.0, 0.05);
}

TEST(Tracker, KinematicFromEgoUsesYawRate)
{
  const EgoState a{{0.0, 0.0}, 0.0, {10.0, 0.0}, {}, 0.0};
  const EgoState b{{1.0, 0.0}, 0.1, {10.0, 0.0}, {}, 0.1};
  const KinematicState k = kinematic_from_ego(a, &b, 3.1);
  EXPECT_NEAR(k.v, 10.0, 1e-12);
  EXPECT_NEAR(k.steering, std::atan(3.1 * 1.0 / 10.0), 1e-9);
  EXPECT_EQ(kinematic_from_ego(a, nullptr, 3.1).steering, 0.0);
}
