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

#include "pdm/learned.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "pdm/engine.hpp"
#include "pdm/errors.hpp"
#include "pdm/generator.hpp"
#include "pdm/scenario_io.hpp"

namespace pdm {

const char * to_string(CenterlineInput c)
{
  switch (c) {
    case CenterlineInput::full: return "full";
    case CenterlineInput::shorter: return "shorter";
    case CenterlineInput::coarser: return "coarser";
    case CenterlineInput::none: return "none";
  }
  return "full";
}

CenterlineInput centerline_input_from_string(const std::string & name)
{
  for (CenterlineInput c : {CenterlineInput::full, CenterlineInput::shorter, CenterlineInput::coarser, CenterlineInput::none}) {
    if (name == to_string(c)) {
      return c;
    }
  }
  throw ConfigError("unknown centerline input '" + name + "'");
}

const char * to_string(ModelKind kind) { return kind == ModelKind::offset ? "offset" : "open"; }

namespace {

ModelKind model_kind_from_string(const std::string & name)
{
  if (name == "open") {
    return ModelKind::open;
  }
  if (name == "offset") {
    return ModelKind::offset;
  }
  throw ConfigError("unknown model kind '" + name + "'");
}

Vec2 rotate_into(const Pose2 & frame, const Vec2 & v)
{
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {c * v.x + s * v.y, -s * v.x + c * v.y};
}

Vec2 rotate_out(const Pose2 & frame, const Vec2 & v)
{
  const double c = std::cos(frame.heading);
  const double s = std::sin(frame.heading);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

std::size_t centerline_values(CenterlineInput c)
{
  switch (c) {
    case CenterlineInput::full: return 2 * kCenterlineSamples;
    case CenterlineInput::shorter: return 2 * 30;
    case CenterlineInput::coarser: return 2 * 12;
    case CenterlineInput::none: return 0;
  }
  return 0;
}

}  // namespace

Features featurize(const Observation & obs, const Path & path)
{
  return featurize(obs, path, path.project({obs.ego.position, obs.ego.heading}).s);
}

Features featurize(const Observation & obs, const Path & path, double s_anchor)
{
  constexpr std::size_t needed = 21;
  if (obs.history.size() < needed ||
      std::abs(obs.history.back().t - obs.history[obs.history.size() - needed].t - kHistorySeconds) > 1e-6)
  {
    throw InvariantError("featurize needs 2 s of ego history at 10 Hz");
  }
  Features f;
  const Pose2 frame{obs.ego.position, obs.ego.heading};
  const CenterlineSamples c = sample_centerline(path, s_anchor, 1.0, static_cast<double>(kCenterlineSamples));
  for (std::size_t i = 0; i < kCenterlineSamples; ++i) {
    const Vec2 p = to_local(frame, c.samples[i].position);
    f.centerline[2 * i] = static_cast<float>(p.x);
    f.centerline[2 * i + 1] = static_cast<float>(p.y);
  }
  const std::size_t first = obs.history.size() - needed;
  for (std::size_t i = 0; i < kHistoryStates; ++i) {
    const EgoState & e = obs.history[first + 2 + 2 * i];
    const Vec2 p = to_local(frame, e.position);
    const Vec2 v = rotate_into(frame, e.velocity);
    const Vec2 a = rotate_into(frame, e.acceleration);
    const std::array<double, 6> vals{p.x, p.y, v.x, v.y, a.x, a.y};
    for (std::size_t j = 0; j < 6; ++j) {
      f.history[6 * i + j] = static_cast<float>(vals[j]);
    }
  }
  return f;
}

std::vector<float> encode_waypoints(const WaypointSet & w)
{
  std::vector<float> out(3 * kWaypoints);
  for (std::size_t i = 0; i < kWaypoints; ++i) {
    out[3 * i] = static_cast<float>(w.points[i][0]) * kPositionScale;
    out[3 * i + 1] = static_cast<float>(w.points[i][1]) * kPositionScale;
    out[3 * i + 2] = static_cast<float>(w.points[i][2]);
  }
  return out;
}

WaypointSet decode_waypoints(std::span<const float> values)
{
  WaypointSet w;
  for (std::size_t i = 0; i < kWaypoints; ++i) {
    w.points[i][0] = static_cast<double>(values[3 * i] / kPositionScale);
    w.points[i][1] = static_cast<double>(values[3 * i + 1] / kPositionScale);
    w.points[i][2] = static_cast<double>(values[3 * i + 2]);
  }
  return w;
}

std::vector<std::vector<float>> select_inputs(const Features & f, const FeatureSelection & sel, const WaypointSet * closed)
{
  std::vector<std::vector<float>> blocks;
  if (sel.centerline != CenterlineInput::none) {
    std::vector<float> c;
    c.reserve(centerline_values(sel.centerline));
    for (std::size_t i = 0; i < kCenterlineSamples; ++i) {
      const bool keep = sel.centerline == CenterlineInput::full || (sel.centerline == CenterlineInput::shorter && i < 30) ||
                        (sel.centerline == CenterlineInput::coarser && i % 10 == 9);
      if (keep) {
        c.push_back(f.centerline[2 * i] * kPositionScale);
        c.push_back(f.centerline[2 * i + 1] * kPositionScale);
      }
    }
    blocks.push_back(std::move(c));
  }
  if (sel.history) {
    std::vector<float> h(f.history.begin(), f.history.end());
    for (float & v : h) {
      v *= kPositionScale;
    }
    blocks.push_back(std::move(h));
  }
  if (closed != nullptr) {
    blocks.push_back(encode_waypoints(*closed));
  }
  return blocks;
}

WaypointSet waypoints_from_trajectory(const Trajectory & traj, const Pose2 & frame)
{
  WaypointSet w;
  const double t0 = traj.start_time();
  for (std::size_t i = 0; i < kWaypoints; ++i) {
    const auto k = static_cast<std::size_t>(5 * (i + 1));
    const TrajectoryPoint p =
      k < traj.points.size() ? traj.points[k] : traj.at(t0 + kWaypointSpacing * static_cast<double>(i + 1));
    const Vec2 local = to_local(frame, p.position);
    w.points[i] = {local.x, local.y, wrap_angle(p.heading - frame.heading)};
  }
  return w;
}

WaypointSet waypoints_from_log(const Scenario & sc, long tick)
{
  const EgoState & now = sc.ego_at_tick(tick);
  const Pose2 frame{now.position, now.heading};
  WaypointSet w;
  for (std::size_t i = 0; i < kWaypoints; ++i) {
    const EgoState & e = sc.ego_at_tick(tick + 5 * static_cast<long>(i + 1));
    const Vec2 local = to_local(frame, e.position);
    w.points[i] = {local.x, local.y, wrap_angle(e.heading - frame.heading)};
  }
  return w;
}

MlpShape model_shape(ModelKind kind, const FeatureSelection & sel, int hidden)
{
  MlpShape shape;
  if (sel.centerline != CenterlineInput::none) {
    shape.inputs.push_back(static_cast<int>(centerline_values(sel.centerline)));
  }
  if (sel.history) {
    shape.inputs.push_back(static_cast<int>(6 * kHistoryStates));
  }
  if (kind == ModelKind::offset) {
    shape.inputs.push_back(static_cast<int>(3 * kWaypoints));
  }
  if (shape.inputs.empty()) {
    throw ConfigError("model needs at least one input");
  }
  shape.hidden = hidden;
  shape.outputs = static_cast<int>(3 * kWaypoints);
  return shape;
}

namespace {

std::vector<Mlp::Mat> as_columns(const std::vector<std::vector<float>> & blocks)
{
  std::vector<Mlp::Mat> out;
  for (const auto & b : blocks) {
    out.push_back(Eigen::Map<const Mlp::Mat>(b.data(), static_cast<Eigen::Index>(b.size()), 1));
  }
  return out;
}

WaypointSet run_model(const LearnedModel & m, const Features & f, const WaypointSet * closed)
{
  if (!m.net.all_finite()) {
    throw InvariantError("model has non-finite parameters");
  }
  const Mlp::Mat out = m.net.forward(as_columns(select_inputs(f, m.features, closed)));
  return decode_waypoints(std::span<const float>(out.data(), static_cast<std::size_t>(out.size())));
}

}  // namespace

WaypointSet forward_open(const LearnedModel & m, const Features & f)
{
  if (m.kind != ModelKind::open) {
    throw ConfigError("forward_open needs an open model");
  }
  return run_model(m, f, nullptr);
}

WaypointSet forward_offset(const LearnedModel & m, const WaypointSet & w_closed, const Features & f)
{
  if (m.kind != ModelKind::offset) {
    throw ConfigError("forward_offset needs an offset model");
  }
  return run_model(m, f, &w_closed);
}

WaypointSet fuse_hybrid(const WaypointSet & w_closed, const WaypointSet & offsets, double correction_horizon)
{
  WaypointSet out = w_closed;
  for (std::size_t i = 0; i < kWaypoints; ++i) {
    const double t = kWaypointSpacing * static_cast<double>(i + 1);
    if (t > correction_horizon) {
      out.points[i][0] = w_closed.points[i][0] + offsets.points[i][0];
      out.points[i][1] = w_closed.points[i][1] + offsets.points[i][1];
      out.points[i][2] = wrap_angle(w_closed.points[i][2] + offsets.points[i][2]);
    }
  }
  return out;
}

namespace {

// Second derivatives of a natural cubic spline through uniformly spaced knots.
std::vector<double> spline_moments(const std::vector<double> & y, double h)
{
  const std::size_t n = y.size();
  std::vector<double> m(n, 0.0);
  if (n < 3) {
    return m;
  }
  const std::size_t k = n - 2;
  std::vector<double> c(k, 0.0);
  std::vector<double> d(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    const double rhs = 6.0 * (y[i + 2] - 2.0 * y[i + 1] + y[i]) / (h * h);
    const double denom = 4.0 - (i > 0 ? c[i - 1] : 0.0);
    c[i] = 1.0 / denom;
    d[i] = (rhs - (i > 0 ? d[i - 1] : 0.0)) / denom;
  }
  for (std::size_t i = k; i-- > 0;) {
    m[i + 1] = d[i] - (i + 1 < k ? c[i] * m[i + 2] : 0.0);
  }
  return m;
}

struct SplineSample {
  double value;
  double slope;
};

SplineSample spline_at(const std::vector<double> & y, const std::vector<double> & m, double h, double t)
{
  const auto n = y.size();
  auto i = static_cast<std::size_t>(std::floor(t / h));
  i = std::min(i, n - 2);
  const double a = (static_cast<double>(i + 1) * h - t) / h;
  const double b = (t - static_cast<double>(i) * h) / h;
  const double value = a * y[i] + b * y[i + 1] + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
  const double slope = (y[i + 1] - y[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * m[i] + (3.0 * b * b - 1.0) / 6.0 * h * m[i + 1];
  return {value, slope};
}

}  // namespace

Trajectory upsample_waypoints(const WaypointSet & w, const Pose2 & frame, double t0)
{
  std::vector<double> xs{0.0};
  std::vector<double> ys{0.0};
  std::vector<double> hs{0.0};
  for (const auto & p : w.points) {
    xs.push_back(p[0]);
    ys.push_back(p[1]);
    hs.push_back(p[2]);
  }
  const double h = kWaypointSpacing;
  const auto mx = spline_moments(xs, h);
  const auto my = spline_moments(ys, h);
  Trajectory traj;
  for (std::size_t k = 0; k < kPlanPoints; ++k) {
    const double t = static_cast<double>(k) * kTickSeconds;
    const SplineSample sx = spline_at(xs, mx, h, t);
    const SplineSample sy = spline_at(ys, my, h, t);
    const double speed = std::hypot(sx.slope, sy.slope);
    double heading;
    if (speed > 0.5) {
      heading = std::atan2(sy.slope, sx.slope);
    } else {
      auto i = std::min(static_cast<std::size_t>(std::floor(t / h)), hs.size() - 2);
      heading = angle_lerp(hs[i], hs[i + 1], (t - static_cast<double>(i) * h) / h);
    }
    traj.points.push_back(
      {t0 + t, to_world(frame, {sx.value, sy.value}), wrap_angle(heading + frame.heading), speed});
  }
  return traj;
}

Trajectory fuse_trajectory(const Trajectory & closed, const WaypointSet & offsets, double correction_horizon, const Pose2 & frame)
{
  Trajectory out = closed;
  const double t0 = closed.start_time();
  auto knot = [&](std::size_t i) -> std::array<double, 3> {
    // Knot 0 is t = 0; knot i >= 1 is waypoint i - 1.
    if (i == 0) {
      return {0.0, 0.0, 0.0};
    }
    const double t = kWaypointSpacing * static_cast<double>(i);
    if (t <= correction_horizon) {
      return {0.0, 0.0, 0.0};
    }
    return offsets.points[i - 1];
  };
  bool changed = false;
  for (std::size_t k = 0; k < out.points.size(); ++k) {
    const double t = static_cast<double>(k) * kTickSeconds;
    if (t <= correction_horizon + 1e-9) {
      continue;
    }
    const double u = t / kWaypointSpacing;
    const auto i = std::min(static_cast<std::size_t>(std::floor(u)), kWaypoints - 1);
    const double w = std::min(1.0, u - static_cast<double>(i));
    const auto a = knot(i);
    const auto b = knot(i + 1);
    const Vec2 d{a[0] + w * (b[0] - a[0]), a[1] + w * (b[1] - a[1])};
    out.points[k].position = closed.points[k].position + rotate_out(frame, d);
    out.points[k].heading = wrap_angle(closed.points[k].heading + a[2] + w * (b[2] - a[2]));
    changed = true;
  }
  if (changed) {
    for (std::size_t k = 0; k < out.points.size(); ++k) {
      const double t = static_cast<double>(k) * kTickSeconds;
      if (t <= correction_horizon + 1e-9) {
        continue;
      }
      const std::size_t a = k - 1;
      const std::size_t b = std::min(out.points.size() - 1, k + 1);
      const double dt = out.points[b].t - out.points[a].t;
      const double fused = distance(out.points[a].position, out.points[b].position);
      const double base = distance(closed.points[a].position, closed.points[b].position);
      out.points[k].v = std::max(0.0, closed.points[k].v + (fused - base) / dt);
    }
  }
  (void)t0;
  return out;
}

std::size_t dataset_ticks(const Scenario & sc)
{
  const auto horizon = static_cast<std::size_t>(std::llround(kForecastHorizon * sc.frequency));
  return sc.num_ticks() >= horizon ? sc.num_ticks() - horizon + 1 : 0;
}

namespace {

WaypointSet round_to_float(WaypointSet w)
{
  for (auto & p : w.points) {
    for (double & v : p) {
      v = static_cast<double>(static_cast<float>(v));
    }
  }
  return w;
}

}  // namespace

Dataset build_dataset(const std::vector<Scenario> & scenarios, bool with_closed, const PdmClosedConfig & closed_cfg)
{
  Dataset d;
  for (const Scenario & sc : scenarios) {
    RouteCache route;
    PdmClosedPlanner closed(closed_cfg);
    closed.initialize(sc);
    const auto n = static_cast<long>(dataset_ticks(sc));
    for (long k = 0; k < n; ++k) {
      const Observation obs = logged_observation(sc, k);
      const Path & path = route.path_for(*sc.map, sc.route, obs.ego);
      d.features.push_back(featurize(obs, path));
      d.targets.push_back(round_to_float(waypoints_from_log(sc, k)));
      if (with_closed) {
        const Trajectory plan = closed.plan(obs);
        d.closed.push_back(round_to_float(waypoints_from_trajectory(plan, {obs.ego.position, obs.ego.heading})));
      }
      d.scenario_ids.push_back(sc.id);
    }
  }
  return d;
}

namespace {

constexpr const char * kDatasetMagic = "PDMDATA1\n";
constexpr const char * kCheckpointMagic = "PDMCKPT1\n";

void write_floats(std::ostream & os, std::span<const float> v)
{
  os.write(reinterpret_cast<const char *>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

void read_floats(std::istream & is, std::span<float> v)
{
  is.read(reinterpret_cast<char *>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (!is) {
    throw ParseError("unexpected end of binary payload");
  }
}

std::vector<float> waypoint_floats(const WaypointSet & w)
{
  std::vector<float> out;
  for (const auto & p : w.points) {
    for (double v : p) {
      out.push_back(static_cast<float>(v));
    }
  }
  return out;
}

WaypointSet waypoints_from_floats(std::span<const float> v)
{
  WaypointSet w;
  for (std::size_t i = 0; i < kWaypoints; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      w.points[i][j] = static_cast<double>(v[3 * i + j]);
    }
  }
  return w;
}

std::string read_header(std::istream & is, const char * magic, const std::string & what)
{
  std::string line;
  std::getline(is, line);
  if (!is || line + "\n" != magic) {
    throw ParseError(what + ": bad magic line");
  }
  std::getline(is, line);
  if (!is) {
    throw ParseError(what + ": missing header");
  }
  return line;
}

}  // namespace

void save_dataset(const Dataset & d, const std::string & path)
{
  nlohmann::json scen = nlohmann::json::array();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (scen.empty() || scen.back()["id"] != d.scenario_ids[i]) {
      scen.push_back({{"id", d.scenario_ids[i]}, {"records", 0}});
    }
    scen.back()["records"] = scen.back()["records"].get<int>() + 1;
  }
  const nlohmann::json header{{"schema_version", 1}, {"kind", "dataset"}, {"records", d.size()},
    {"centerline_values", 2 * kCenterlineSamples}, {"history_values", 6 * kHistoryStates},
    {"waypoint_values", 3 * kWaypoints}, {"has_closed", !d.closed.empty()}, {"scenarios", scen}};
  std::ostringstream os;
  os << kDatasetMagic << header.dump() << "\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    write_floats(os, d.features[i].centerline);
    write_floats(os, d.features[i].history);
    write_floats(os, waypoint_floats(d.targets[i]));
    if (!d.closed.empty()) {
      write_floats(os, waypoint_floats(d.closed[i]));
    }
  }
  write_text_file(path, os.str());
}

Dataset load_dataset(const std::string & path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw ParseError("cannot open dataset '" + path + "'");
  }
  Dataset d;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_header(is, kDatasetMagic, "dataset"));
  } catch (const nlohmann::json::exception & ex) {
    throw ParseError(std::string("dataset header: ") + ex.what());
  }
  if (header.value("schema_version", 0) != 1 || header.value("centerline_values", 0) != 2 * kCenterlineSamples ||
      header.value("history_values", 0) != 6 * kHistoryStates)
  {
    throw ParseError("dataset: unsupported schema or feature layout");
  }
  const bool has_closed = header.value("has_closed", false);
  for (const auto & s : header.at("scenarios")) {
    for (int i = 0; i < s.at("records").get<int>(); ++i) {
      d.scenario_ids.push_back(s.at("id").get<std::string>());
    }
  }
  const auto n = header.at("records").get<std::size_t>();
  if (d.scenario_ids.size() != n) {
    throw ParseError("dataset: record count does not match scenario list");
  }
  std::vector<float> wp(3 * kWaypoints);
  for (std::size_t i = 0; i < n; ++i) {
    Features f;
    read_floats(is, f.centerline);
    read_floats(is, f.history);
    d.features.push_back(f);
    read_floats(is, wp);
    d.targets.push_back(waypoints_from_floats(wp));
    if (has_closed) {
      read_floats(is, wp);
      d.closed.push_back(waypoints_from_floats(wp));
    }
  }
  return d;
}

namespace {

struct Packed {
  std::vector<Mlp::Mat> inputs;  // blocks x samples
  Mlp::Mat targets;
};

Packed pack(const Dataset & data, ModelKind kind, const FeatureSelection & sel)
{
  if (kind == ModelKind::offset && data.closed.size() != data.size()) {
    throw ConfigError("offset model needs PDM-Closed waypoints in the dataset");
  }
  Packed p;
  const auto n = static_cast<Eigen::Index>(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const WaypointSet * closed = kind == ModelKind::offset ? &data.closed[i] : nullptr;
    const auto blocks = select_inputs(data.features[i], sel, closed);
    if (i == 0) {
      for (const auto & b : blocks) {
        p.inputs.emplace_back(static_cast<Eigen::Index>(b.size()), n);
      }
      p.targets.resize(static_cast<Eigen::Index>(3 * kWaypoints), n);
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      p.inputs[b].col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const Eigen::VectorXf>(blocks[b].data(), static_cast<Eigen::Index>(blocks[b].size()));
    }
    WaypointSet target = data.targets[i];
    if (kind == ModelKind::offset) {
      for (std::size_t w = 0; w < kWaypoints; ++w) {
        target.points[w][0] -= data.closed[i].points[w][0];
        target.points[w][1] -= data.closed[i].points[w][1];
        target.points[w][2] = wrap_angle(target.points[w][2] - data.closed[i].points[w][2]);
      }
    }
    const auto enc = encode_waypoints(target);
    p.targets.col(static_cast<Eigen::Index>(i)) =
      Eigen::Map<const Eigen::VectorXf>(enc.data(), static_cast<Eigen::Index>(enc.size()));
  }
  return p;
}

}  // namespace

LearnedModel train_model(
  const Dataset & data, const TrainConfig & cfg, TrainReport * report, const std::function<void(int, double)> & on_epoch)
{
  if (data.size() == 0) {
    throw ConfigError("cannot train on an empty dataset");
  }
  if (cfg.epochs <= 0 || cfg.batch <= 0) {
    throw ConfigError("epochs and batch size must be positive");
  }
  const auto start = std::chrono::steady_clock::now();
  LearnedModel model{cfg.kind, cfg.features, Mlp(model_shape(cfg.kind, cfg.features, cfg.hidden), cfg.seed)};
  if (cfg.zero_head) {
    model.net.zero_output_head();
  }
  const Packed packed = pack(data, cfg.kind, cfg.features);
  Adam<float> adam(model.net, cfg.adam);
  Mlp grads;
  Mlp::Cache cache;
  SplitMix shuffle(cfg.seed ^ 0x5DEECE66DULL);
  std::vector<Eigen::Index> order(data.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  TrainReport local;
  TrainReport & rep = report != nullptr ? *report : local;
  rep = {};
  std::vector<Mlp::Mat> batch_in(packed.inputs.size());
  Mlp::Mat batch_target;
  Mlp::Mat grad_out;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle.next() % i);
      std::swap(order[i - 1], order[j]);
    }
    double loss_sum = 0.0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch)) {
      const auto b = static_cast<Eigen::Index>(std::min(order.size() - at, static_cast<std::size_t>(cfg.batch)));
      for (std::size_t blk = 0; blk < packed.inputs.size(); ++blk) {
        batch_in[blk].resize(packed.inputs[blk].rows(), b);
        for (Eigen::Index c = 0; c < b; ++c) {
          batch_in[blk].col(c) = packed.inputs[blk].col(order[at + static_cast<std::size_t>(c)]);
        }
      }
      batch_target.resize(packed.targets.rows(), b);
      for (Eigen::Index c = 0; c < b; ++c) {
        batch_target.col(c) = packed.targets.col(order[at + static_cast<std::size_t>(c)]);
      }
      const Mlp::Mat out = model.net.forward(batch_in, cache);
      const float loss = Mlp::l1_loss(out, batch_target, &grad_out);
      if (!std::isfinite(loss)) {
        rep.diverged = true;
        throw InvariantError("training diverged at epoch " + std::to_string(epoch + 1) + " (loss is not finite)");
      }
      loss_sum += static_cast<double>(loss) * static_cast<double>(b);
      model.net.backward(cache, grad_out, grads);
      adam.step(model.net, grads);
    }
    const double epoch_loss = loss_sum / static_cast<double>(order.size());
    rep.epoch_loss.push_back(epoch_loss);
    if (on_epoch) {
      on_epoch(epoch + 1, epoch_loss);
    }
  }
  if (!model.net.all_finite()) {
    rep.diverged = true;
    throw InvariantError("training produced non-finite parameters");
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return model;
}

double evaluate_l1(const LearnedModel & m, const Dataset & data)
{
  if (data.size() == 0) {
    return 0.0;
  }
  const Packed packed = pack(data, m.kind, m.features);
  const Mlp::Mat out = m.net.forward(packed.inputs);
  return static_cast<double>(Mlp::l1_loss(out, packed.targets, nullptr));
}

void save_checkpoint(const LearnedModel & m, const std::string & path)
{
  const MlpShape & s = m.net.shape();
  const nlohmann::json header{{"schema_version", kCheckpointSchemaVersion}, {"kind", to_string(m.kind)},
    {"features", {{"centerline", to_string(m.features.centerline)}, {"history", m.features.history}}},
    {"shape", {{"inputs", s.inputs}, {"projection", s.projection}, {"hidden", s.hidden}, {"outputs", s.outputs}}},
    {"seed", m.net.seed()}, {"parameters", m.net.parameter_count()}, {"dtype", "float32-le"}};
  std::vector<float> flat;
  m.net.copy_to(flat);
  std::ostringstream os;
  os << kCheckpointMagic << header.dump() << "\n";
  write_floats(os, flat);
  write_text_file(path, os.str());
}

LearnedModel load_checkpoint(const std::string & path)
{
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw ParseError("cannot open checkpoint '" + path + "'");
  }
  LearnedModel m;
  try {
    const nlohmann::json h = nlohmann::json::parse(read_header(is, kCheckpointMagic, "checkpoint"));
    if (h.at("schema_version").get<int>() != kCheckpointSchemaVersion) {
      throw ParseError("checkpoint: unsupported schema_version");
    }
    m.kind = model_kind_from_string(h.at("kind").get<std::string>());
    m.features.centerline = centerline_input_from_string(h.at("features").at("centerline").get<std::string>());
    m.features.history = h.at("features").at("history").get<bool>();
    MlpShape shape;
    shape.inputs = h.at("shape").at("inputs").get<std::vector<int>>();
    shape.projection = h.at("shape").at("projection").get<int>();
    shape.hidden = h.at("shape").at("hidden").get<int>();
    shape.outputs = h.at("shape").at("outputs").get<int>();
    if (shape != model_shape(m.kind, m.features, shape.hidden)) {
      throw ParseError("checkpoint: shape does not match the declared inputs");
    }
    m.net = Mlp(shape, h.at("seed").get<std::uint64_t>());
    std::vector<float> flat(m.net.parameter_count());
    if (h.at("parameters").get<std::size_t>() != flat.size()) {
      throw ParseError("checkpoint: parameter count mismatch");
    }
    read_floats(is, flat);
    m.net.copy_from(flat);
  } catch (const nlohmann::json::exception & ex) {
    throw ParseError(std::string("checkpoint header: ") + ex.what());
  }
  return m;
}

PdmOpenPlanner::PdmOpenPlanner(std::shared_ptr<const LearnedModel> model) : model_(std::move(model))
{
  if (!model_ || model_->kind != ModelKind::open) {
    throw ConfigError("pdm_open needs an open model");
  }
}

Trajectory PdmOpenPlanner::plan(const Observation & obs)
{
  const Path & path = route_.path_for(*obs.map, obs.route, obs.ego);
  const Features f = featurize(obs, path);
  const WaypointSet w = forward_open(*model_, f);
  return upsample_waypoints(w, {obs.ego.position, obs.ego.heading}, obs.t);
}

PdmHybridPlanner::PdmHybridPlanner(std::shared_ptr<const LearnedModel> offset_model, double correction_horizon, PdmClosedConfig cfg)
: model_(std::move(offset_model)), correction_(correction_horizon), closed_(std::move(cfg))
{
  if (!model_ || model_->kind != ModelKind::offset) {
    throw ConfigError("pdm_hybrid needs an offset model");
  }
  if (!(correction_ >= 0.0 && correction_ <= kForecastHorizon)) {
    throw ConfigError("correction horizon must lie in [0, 8] s");
  }
}

Trajectory PdmHybridPlanner::plan(const Observation & obs)
{
  const Trajectory closed = closed_.plan(obs);
  if (closed_.diagnostics().route_failure) {
    return closed;
  }
  const Path & path = route_.path_for(*obs.map, obs.route, obs.ego);
  const Features f = featurize(obs, path);
  const Pose2 frame{obs.ego.position, obs.ego.heading};
  const WaypointSet w_closed = waypoints_from_trajectory(closed, frame);
  const WaypointSet offsets = forward_offset(*model_, w_closed, f);
  return fuse_trajectory(closed, offsets, correction_, frame);
}

}  // namespace pdm
