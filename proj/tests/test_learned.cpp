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
#include <filesystem>
#include <random>

#include "pdm/engine.hpp"
#include "pdm/errors.hpp"
#include "pdm/generator.hpp"
#include "pdm/learned.hpp"
#include "test_util.hpp"

using namespace pdm;
using namespace pdm::fixtures;

namespace {

using MlpD = MlpT<double>;

std::vector<MlpD::Mat> random_inputs(const MlpShape & shape, int batch, std::mt19937_64 & rng)
{
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<MlpD::Mat> in;
  for (int rows : shape.inputs) {
    MlpD::Mat m(rows, batch);
    for (int i = 0; i < m.size(); ++i) {
      m.data()[i] = n(rng);
    }
    in.push_back(m);
  }
  return in;
}

EgoState transformed(const EgoState & e, const Pose2 & g)
{
  const Pose2 rot{{0.0, 0.0}, g.heading};
  return {to_world(g, e.position), wrap_angle(e.heading + g.heading), to_world(rot, e.velocity),
          to_world(rot, e.acceleration), e.t};
}

std::filesystem::path temp_file(const std::string & name)
{
  return std::filesystem::temp_directory_path() / ("pdm_test_" + name);
}

WaypointSet random_waypoints(std::mt19937_64 & rng, double scale)
{
  std::uniform_real_distribution<double> u(-scale, scale);
  WaypointSet w;
  for (auto & p : w.points) {
    p = {u(rng), u(rng), u(rng) * 0.1};
  }
  return w;
}

}  // namespace

TEST(Mlp, BackwardMatchesFiniteDifferences)
{
  const MlpShape shape{{3, 2}, 4, 5, 3};
  MlpD net(shape, 11);
  std::mt19937_64 rng(5);
  const auto inputs = random_inputs(shape, 4, rng);
  MlpD::Mat weight = MlpD::Mat::Random(3, 4);
  const auto loss = [&](const MlpD & m) { return (m.forward(inputs).array() * weight.array()).sum(); };

  MlpD::Cache cache;
  net.forward(inputs, cache);
  MlpD grads = net;
  grads.set_zero();
  net.backward(cache, weight, grads);

  std::vector<double> flat;
  std::vector<double> gflat;
  net.copy_to(flat);
  grads.copy_to(gflat);
  ASSERT_EQ(flat.size(), net.parameter_count());
  const double h = 1e-6;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    MlpD plus = net;
    MlpD minus = net;
    std::vector<double> p = flat;
    p[i] += h;
    plus.copy_from(p);
    p[i] -= 2.0 * h;
    minus.copy_from(p);
    const double fd = (loss(plus) - loss(minus)) / (2.0 * h);
    EXPECT_NEAR(gflat[i], fd, 1e-6 * std::max(1.0, std::abs(fd))) << "parameter " << i;
  }
}

TEST(Mlp, L1LossAndGradient)
{
  MlpD::Mat out(2, 2);
  out << 1.0, -2.0, 0.5, 3.0;
  MlpD::Mat target = MlpD::Mat::Zero(2, 2);
  MlpD::Mat grad;
  EXPECT_DOUBLE_EQ(MlpD::l1_loss(out, target, &grad), 6.5 / 4.0);
  EXPECT_DOUBLE_EQ(grad(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(grad(0, 1), -0.25);
}

TEST(Mlp, SeededInitializationIsReproducible)
{
  const MlpShape shape{{6}, 8, 8, 4};
  std::vector<float> a;
  std::vector<float> b;
  Mlp(shape, 3).copy_to(a);
  Mlp(shape, 3).copy_to(b);
  EXPECT_EQ(a, b);
  Mlp(shape, 4).copy_to(b);
  EXPECT_NE(a, b);
  for (float w : a) {
    EXPECT_LE(std::abs(w), 1.0f / std::sqrt(6.0f) + 1e-6f);
  }
}

TEST(Features, InvariantUnderRigidTransform)
{
  const Scenario sc = generate_scenario({"curve"}, 2);
  const Observation obs = logged_observation(sc, 30);
  const auto chain = search_route(*sc.map, sc.route, obs.ego);
  const Path path = chain_path(*sc.map, chain);
  const Features base = featurize(obs, path);

  const Pose2 g{{123.0, -45.0}, 1.1};
  Observation moved = obs;
  moved.ego = transformed(obs.ego, g);
  for (auto & h : moved.history) {
    h = transformed(h, g);
  }
  std::vector<Vec2> pts;
  std::vector<double> limits;
  for (const auto & p : path.points()) {
    pts.push_back(to_world(g, p.position));
    limits.push_back(p.speed_limit);
  }
  const Path moved_path = Path::resampled(pts, limits, kPathResolution);
  const Features f = featurize(moved, moved_path);
  for (std::size_t i = 0; i < base.centerline.size(); ++i) {
    EXPECT_NEAR(f.centerline[i], base.centerline[i], 1e-3) << i;
  }
  for (std::size_t i = 0; i < base.history.size(); ++i) {
    EXPECT_NEAR(f.history[i], base.history[i], 1e-3) << i;
  }
}

TEST(Features, EgoFrameHistoryEndsAtOrigin)
{
  const Scenario sc = straight_scenario(10.0);
  const Observation obs = logged_observation(sc, 20);
  const Path path = chain_path(*sc.map, std::vector<int>{1, 2});
  const Features f = featurize(obs, path);
  const std::size_t last = 6 * (kHistoryStates - 1);
  EXPECT_NEAR(f.history[last + 0], 0.0, 1e-6);
  EXPECT_NEAR(f.history[last + 1], 0.0, 1e-6);
  EXPECT_NEAR(f.history[last + 2], 10.0, 1e-5);
  EXPECT_NEAR(f.history[0], -18.0, 1e-5);
  EXPECT_NEAR(f.centerline[0], 1.0, 1e-5);
  EXPECT_NEAR(f.centerline[2 * kCenterlineSamples - 2], 120.0, 1e-4);

  Observation short_hist = obs;
  short_hist.history.resize(5);
  EXPECT_THROW(featurize(short_hist, path), InvariantError);
}

TEST(Features, SelectionShapesInputs)
{
  Features f;
  EXPECT_EQ(select_inputs(f, {}).size(), 2u);
  EXPECT_EQ(select_inputs(f, {}).at(0).size(), 2 * kCenterlineSamples);
  EXPECT_EQ(select_inputs(f, {CenterlineInput::none, true}).size(), 1u);
  EXPECT_EQ(select_inputs(f, {CenterlineInput::shorter, true}).at(0).size(), 60u);
  EXPECT_EQ(select_inputs(f, {CenterlineInput::coarser, true}).at(0).size(), 24u);
  WaypointSet w;
  EXPECT_EQ(select_inputs(f, {}, &w).size(), 3u);
  EXPECT_EQ(centerline_input_from_string("coarser"), CenterlineInput::coarser);
  EXPECT_THROW(centerline_input_from_string("longer"), ConfigError);
}

TEST(Waypoints, EncodeDecodeRoundTrip)
{
  std::mt19937_64 rng(1);
  const WaypointSet w = random_waypoints(rng, 40.0);
  const auto enc = encode_waypoints(w);
  ASSERT_EQ(enc.size(), 3 * kWaypoints);
  const WaypointSet back = decode_waypoints(enc);
  for (std::size_t i = 0; i < kWaypoints; ++i) {
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(back.points[i][c], w.points[i][c], 1e-5);
    }
  }
}

TEST(Waypoints, FromLogMatchesExpertInEgoFrame)
{
  const Scenario sc = straight_scenario(10.0);
  const WaypointSet w = waypoints_from_log(sc, 20);
  for (std::size_t i = 0; i < kWaypoints; ++i) {
    EXPECT_NEAR(w.points[i][0], 5.0 * static_cast<double>(i + 1), 1e-9);
    EXPECT_NEAR(w.points[i][1], 0.0, 1e-9);
  }
}

TEST(Hybrid, FuseKeepsPrefixUpToCorrectionHorizon)
{
  std::mt19937_64 rng(9);
  for (double c : {0.0, 0.5, 1.0, 2.0, 3.0, 8.0}) {
    const WaypointSet closed = random_waypoints(rng, 50.0);
    const WaypointSet off = random_waypoints(rng, 2.0);
    const WaypointSet fused = fuse_hybrid(closed, off, c);
    for (std::size_t i = 0; i < kWaypoints; ++i) {
      const double t = 0.5 * static_cast<double>(i + 1);
      if (t <= c) {
        EXPECT_EQ(fused.points[i], closed.points[i]);
      } else {
        EXPECT_NEAR(fused.points[i][0], closed.points[i][0] + off.points[i][0], 1e-12);
        EXPECT_NEAR(fused.points[i][1], closed.points[i][1] + off.points[i][1], 1e-12);
      }
    }
  }
}

TEST(Hybrid, FuseTrajectoryPrefixIsBitIdentical)
{
  const Scenario sc = generate_scenario({"curve"}, 0);
  PdmClosedPlanner planner;
  const Observation obs = logged_observation(sc, 40);
  const Trajectory closed = planner.plan(obs);
  std::mt19937_64 rng(3);
  const WaypointSet off = random_waypoints(rng, 3.0);
  const Pose2 frame{obs.ego.position, obs.ego.heading};
  for (double c : {0.0, 2.0, 4.0}) {
    const Trajectory fused = fuse_trajectory(closed, off, c, frame);
    ASSERT_EQ(fused.points.size(), closed.points.size());
    for (std::size_t k = 0; k < closed.points.size(); ++k) {
      if (static_cast<double>(k) * 0.1 <= c + 1e-9) {
        EXPECT_EQ(fused.points[k], closed.points[k]) << "c=" << c << " k=" << k;
      }
    }
  }
  WaypointSet zero;
  EXPECT_EQ(fuse_trajectory(closed, zero, 2.0, frame), closed);
}

TEST(Upsample, PassesThroughWaypoints)
{
  std::mt19937_64 rng(4);
  WaypointSet w;
  for (std::size_t i = 0; i < kWaypoints; ++i) {
    const double t = 0.5 * static_cast<double>(i + 1);
    w.points[i] = {8.0 * t, 0.2 * t * t, 0.05 * t};
  }
  const Pose2 frame{{10.0, 20.0}, 0.7};
  const Trajectory tr = upsample_waypoints(w, frame, 3.0);
  ASSERT_EQ(tr.points.size(), kPlanPoints);
  EXPECT_DOUBLE_EQ(tr.start_time(), 3.0);
  EXPECT_NEAR(distance(tr.points[0].position, frame.position), 0.0, 1e-9);
  for (std::size_t i = 0; i < kWaypoints; ++i) {
    const TrajectoryPoint & p = tr.points[5 * (i + 1)];
    const Vec2 expect = to_world(frame, {w.points[i][0], w.points[i][1]});
    EXPECT_NEAR(p.position.x, expect.x, 1e-9);
    EXPECT_NEAR(p.position.y, expect.y, 1e-9);
  }
}

TEST(Dataset, OneRowPerEligibleTick)
{
  const std::vector<Scenario> scs{generate_scenario({"straight"}, 0), generate_scenario({"lane_fork"}, 1)};
  std::size_t expected = 0;
  for (const auto & sc : scs) {
    // Ticks from the end of the history to duration - 8 s, every 0.1 s.
    const long last = static_cast<long>(sc.num_ticks()) - 80;
    EXPECT_EQ(dataset_ticks(sc), static_cast<std::size_t>(last + 1));
    EXPECT_EQ(dataset_ticks(sc), 71u);
    expected += dataset_ticks(sc);
  }
  const Dataset d = build_dataset(scs, false);
  EXPECT_EQ(d.size(), expected);
  EXPECT_EQ(d.targets.size(), expected);
  EXPECT_EQ(d.scenario_ids.front(), scs[0].id);
  EXPECT_EQ(d.scenario_ids.back(), scs[1].id);
}

TEST(Dataset, SaveLoadRoundTrip)
{
  const Dataset d = build_dataset({generate_scenario({"curve"}, 3)}, true);
  ASSERT_EQ(d.closed.size(), d.size());
  const auto path = temp_file("dataset.bin");
  save_dataset(d, path.string());
  const Dataset back = load_dataset(path.string());
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.scenario_ids, d.scenario_ids);
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 0; j < kWaypoints; ++j) {
      for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(back.targets[i].points[j][c], d.targets[i].points[j][c], 1e-4);
        EXPECT_NEAR(back.closed[i].points[j][c], d.closed[i].points[j][c], 1e-4);
      }
    }
  }
  std::filesystem::remove(path);
  EXPECT_THROW(load_dataset(path.string()), ParseError);
}

TEST(Training, FixedSeedIsBitIdenticalAndLearns)
{
  const Dataset d = build_dataset({generate_scenario({"straight"}, 2)}, false);
  TrainConfig cfg;
  cfg.hidden = 32;
  cfg.epochs = 5;
  cfg.batch = 16;
  cfg.adam.learning_rate = 1e-3;
  cfg.seed = 17;
  TrainReport ra;
  const LearnedModel a = train_model(d, cfg, &ra);
  const LearnedModel b = train_model(d, cfg);
  std::vector<float> pa;
  std::vector<float> pb;
  a.net.copy_to(pa);
  b.net.copy_to(pb);
  EXPECT_EQ(pa, pb);
  ASSERT_EQ(ra.epoch_loss.size(), 5u);
  EXPECT_LT(ra.epoch_loss.back(), ra.epoch_loss.front());
  EXPECT_FALSE(ra.diverged);
  EXPECT_THROW(train_model(Dataset{}, cfg), ConfigError);
}

TEST(Training, CheckpointRoundTrip)
{
  const Dataset d = build_dataset({generate_scenario({"straight"}, 2)}, true);
  TrainConfig cfg;
  cfg.kind = ModelKind::offset;
  cfg.hidden = 16;
  cfg.epochs = 1;
  const LearnedModel m = train_model(d, cfg);
  const auto path = temp_file("ckpt.json");
  save_checkpoint(m, path.string());
  const LearnedModel back = load_checkpoint(path.string());
  EXPECT_EQ(back.kind, ModelKind::offset);
  EXPECT_EQ(back.features, m.features);
  EXPECT_EQ(back.net.shape(), m.net.shape());
  EXPECT_EQ(forward_offset(back, d.closed[3], d.features[3]), forward_offset(m, d.closed[3], d.features[3]));
  EXPECT_EQ(evaluate_l1(back, d), evaluate_l1(m, d));
  std::filesystem::remove(path);
}

TEST(Planners, OpenAndHybridProduceFullTrajectories)
{
  const Scenario sc = generate_scenario({"lane_fork"}, 0);
  const Dataset d = build_dataset({sc}, true);
  TrainConfig cfg;
  cfg.hidden = 16;
  cfg.epochs = 1;
  auto open = std::make_shared<const LearnedModel>(train_model(d, cfg));
  cfg.kind = ModelKind::offset;
  LearnedModel zeroed = train_model(d, cfg);
  zeroed.net.zero_output_head();
  auto offset = std::make_shared<const LearnedModel>(zeroed);
  PdmOpenPlanner op(open);
  PdmHybridPlanner hp(offset, 2.0);
  PdmClosedPlanner cp;
  const Observation obs = logged_observation(sc, 25);
  const Trajectory to = op.plan(obs);
  EXPECT_EQ(to.points.size(), kPlanPoints);
  // A zero offset head reproduces PDM-Closed exactly.
  EXPECT_EQ(hp.plan(obs), cp.plan(obs));
}
