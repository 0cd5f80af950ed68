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

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pdm/mlp.hpp"
#include "pdm/pdm_closed.hpp"
#include "pdm/planner.hpp"
#include "pdm/route.hpp"

namespace pdm {

inline constexpr std::size_t kCenterlineSamples = 120;  // at 1 m
inline constexpr std::size_t kHistoryStates = 10;       // 5 Hz over 2 s
inline constexpr std::size_t kWaypoints = 16;           // 0.5 s over 8 s
inline constexpr double kWaypointSpacing = 0.5;
inline constexpr float kPositionScale = 0.1f;           // metres to network units

/// Full-resolution features: 120 centerline points (x, y) and 10 history
/// states (x, y, vx, vy, ax, ay), all in the current ego frame.
struct Features {
  std::array<float, 2 * kCenterlineSamples> centerline{};
  std::array<float, 6 * kHistoryStates> history{};

  bool operator==(const Features &) const = default;
};

/// Ego-frame waypoints (x, y, heading) at 0.5 s, 1.0 s, ..., 8.0 s.
struct WaypointSet {
  std::array<std::array<double, 3>, kWaypoints> points{};

  bool operator==(const WaypointSet &) const = default;
};

/// Which slice of the full features a model consumes.
enum class CenterlineInput { full, shorter, coarser, none };

struct FeatureSelection {
  CenterlineInput centerline = CenterlineInput::full;
  bool history = true;

  bool operator==(const FeatureSelection &) const = default;
};

const char * to_string(CenterlineInput c);
CenterlineInput centerline_input_from_string(const std::string & name);

/// Throws InvariantError when the history does not span 2 s at 10 Hz.
Features featurize(const Observation & obs, const Path & path);
/// Anchor-free variant for callers that already projected the ego.
Features featurize(const Observation & obs, const Path & path, double s_anchor);

/// Network input blocks (scaled) for one sample in the model's input order.
std::vector<std::vector<float>> select_inputs(
  const Features & f, const FeatureSelection & sel, const WaypointSet * closed = nullptr);

std::vector<float> encode_waypoints(const WaypointSet & w);
WaypointSet decode_waypoints(std::span<const float> values);

/// Expert or planned future at the waypoint times, in the frame of `frame`.
WaypointSet waypoints_from_trajectory(const Trajectory & traj, const Pose2 & frame);
WaypointSet waypoints_from_log(const Scenario & sc, long tick);

enum class ModelKind { open, offset };
const char * to_string(ModelKind kind);

struct LearnedModel {
  ModelKind kind = ModelKind::open;
  FeatureSelection features;
  Mlp net;
};

/// Architecture for a kind and feature selection.
MlpShape model_shape(ModelKind kind, const FeatureSelection & sel, int hidden = 512);

WaypointSet forward_open(const LearnedModel & m, const Features & f);
WaypointSet forward_offset(const LearnedModel & m, const WaypointSet & w_closed, const Features & f);

/// Waypoints at t <= C copied from w_closed, later ones offset.
WaypointSet fuse_hybrid(const WaypointSet & w_closed, const WaypointSet & offsets, double correction_horizon);

/// Natural cubic spline through the current pose (t = 0) and the waypoints,
/// sampled at 0.1 s and mapped to the world frame.
Trajectory upsample_waypoints(const WaypointSet & w, const Pose2 & frame, double t0);

/// Training tuples; one row per (scenario, tick).
struct Dataset {
  std::vector<Features> features;
  std::vector<WaypointSet> targets;
  std::vector<WaypointSet> closed;
  std::vector<std::string> scenario_ids;
  std::size_t size() const { return features.size(); }
};

/// Ticks with full history and 8 s of logged future; PDM-Closed waypoints are
/// produced in open loop when `with_closed`.
Dataset build_dataset(const std::vector<Scenario> & scenarios, bool with_closed, const PdmClosedConfig & closed_cfg = {});
/// Ticks per scenario that build_dataset emits.
std::size_t dataset_ticks(const Scenario & sc);

void save_dataset(const Dataset & d, const std::string & path);
Dataset load_dataset(const std::string & path);

struct TrainConfig {
  ModelKind kind = ModelKind::open;
  FeatureSelection features;
  int hidden = 512;
  int epochs = 100;
  int batch = 64;
  AdamParams adam;
  std::uint64_t seed = 0;
  /// Zero the output head before training.
  bool zero_head = false;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  bool diverged = false;
  double seconds = 0.0;
};

/// Mean-L1 regression with Adam. Fixed seed gives bit-identical parameters.
/// Throws ConfigError for an empty dataset and InvariantError on divergence.
LearnedModel train_model(
  const Dataset & data, const TrainConfig & cfg, TrainReport * report = nullptr,
  const std::function<void(int, double)> & on_epoch = {});

/// Mean L1 (scaled units) of a model over a dataset.
double evaluate_l1(const LearnedModel & m, const Dataset & data);

inline constexpr int kCheckpointSchemaVersion = 1;
void save_checkpoint(const LearnedModel & m, const std::string & path);
LearnedModel load_checkpoint(const std::string & path);

class PdmOpenPlanner : public Planner {
public:
  explicit PdmOpenPlanner(std::shared_ptr<const LearnedModel> model);
  std::string name() const override { return "pdm_open"; }
  Trajectory plan(const Observation & obs) override;

private:
  std::shared_ptr<const LearnedModel> model_;
  RouteCache route_;
};

class PdmHybridPlanner : public Planner {
public:
  PdmHybridPlanner(
    std::shared_ptr<const LearnedModel> offset_model, double correction_horizon = 2.0, PdmClosedConfig cfg = {});
  std::string name() const override { return "pdm_hybrid"; }
  Trajectory plan(const Observation & obs) override;
  const PdmClosedPlanner & closed() const { return closed_; }
  double correction_horizon() const { return correction_; }

private:
  std::shared_ptr<const LearnedModel> model_;
  double correction_;
  PdmClosedPlanner closed_;
  RouteCache route_;
};

/// Hybrid output at 0.1 s: closed waypoints verbatim up to C, then the closed
/// trajectory plus offsets interpolated linearly between waypoint times.
Trajectory fuse_trajectory(
  const Trajectory & closed, const WaypointSet & offsets, double correction_horizon, const Pose2 & frame);

}  // namespace pdm
