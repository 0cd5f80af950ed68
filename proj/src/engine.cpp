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

#include "pdm/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "pdm/errors.hpp"
#include "pdm/idm.hpp"

namespace pdm {

const char * to_string(SimMode mode) { return mode == SimMode::reactive ? "reactive" : "non_reactive"; }

SimMode sim_mode_from_string(const std::string & name)
{
  if (name == "reactive") {
    return SimMode::reactive;
  }
  if (name == "non_reactive") {
    return SimMode::non_reactive;
  }
  throw ConfigError("unknown simulation mode '" + name + "'");
}

namespace {

double tick_time(long k) { return static_cast<double>(k) / 10.0; }

struct ReactiveAgent {
  std::size_t track_index;
  Path path;
  double s = 0.0;
  double v = 0.0;
  IdmParams idm;
};

// Lane chain an agent follows: nearest aligned lane at t = 0, then the
// successor closest to the agent's last logged position.
Path agent_path(const WorldMap & map, const AgentTrack & track, const AgentState & now)
{
  const LaneSegment * start = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const LaneSegment & seg : map.segments()) {
    const auto & c = seg.centerline;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      const double u = project_to_segment(c[i], c[i + 1], now.position);
      const Vec2 q = c[i] + (c[i + 1] - c[i]) * u;
      const double heading = std::atan2(c[i + 1].y - c[i].y, c[i + 1].x - c[i].x);
      const double d = distance(q, now.position);
      if (d < best && std::abs(wrap_angle(heading - now.heading)) < std::numbers::pi / 2) {
        best = d;
        start = &seg;
      }
    }
  }
  if (start == nullptr || best > 5.0) {
    return {};
  }
  std::vector<int> chain{start->id};
  double length = polyline_length(start->centerline);
  const Vec2 goal = track.states.back().position;
  while (length < 300.0) {
    const LaneSegment & tail = map.at(chain.back());
    if (tail.successors.empty()) {
      break;
    }
    int next = tail.successors.front();
    double closest = std::numeric_limits<double>::infinity();
    for (int succ : tail.successors) {
      for (const Vec2 & p : map.at(succ).centerline) {
        const double d = distance(p, goal);
        if (d < closest || (d == closest && succ < next)) {
          closest = d;
          next = succ;
        }
      }
    }
    if (std::find(chain.begin(), chain.end(), next) != chain.end()) {
      break;
    }
    chain.push_back(next);
    length += polyline_length(map.at(next).centerline);
  }
  return chain_path(map, chain);
}

std::vector<ReactiveAgent> reactive_agents(const Scenario & sc)
{
  std::vector<ReactiveAgent> out;
  for (std::size_t i = 0; i < sc.agents.size(); ++i) {
    const AgentTrack & track = sc.agents[i];
    if (track.kind != AgentKind::vehicle || !track.covers(0.0)) {
      continue;
    }
    double max_speed = 0.0;
    for (const AgentState & st : track.states) {
      max_speed = std::max(max_speed, st.velocity.norm());
    }
    if (max_speed < 0.5) {
      continue;
    }
    const AgentState now = agent_state_at(track, 0.0);
    Path path = agent_path(*sc.map, track, now);
    if (path.empty()) {
      continue;
    }
    ReactiveAgent agent;
    agent.track_index = i;
    agent.s = path.project({now.position, now.heading}).s;
    agent.v = std::max(0.0, dot(now.velocity, unit_from_heading(now.heading)));
    agent.idm.target_speed = max_speed;
    agent.path = std::move(path);
    out.push_back(std::move(agent));
  }
  return out;
}

TrackedObject reactive_object(const Scenario & sc, const ReactiveAgent & a)
{
  const AgentTrack & track = sc.agents[a.track_index];
  const Pose2 pose = a.path.pose_at(a.s);
  TrackedObject obj;
  obj.id = track.id;
  obj.kind = track.kind;
  obj.position = pose.position;
  obj.heading = wrap_angle(pose.heading);
  obj.velocity = unit_from_heading(pose.heading) * a.v;
  obj.length = track.length;
  obj.width = track.width;
  return obj;
}

}  // namespace

Observation logged_observation(const Scenario & scenario, long tick)
{
  Observation obs;
  obs.t = tick_time(tick);
  obs.tick = tick;
  obs.ego = scenario.ego_at_tick(tick);
  const auto h = static_cast<long>(scenario.history_ticks());
  for (long k = tick - h; k <= tick; ++k) {
    obs.history.push_back(scenario.ego_at_tick(k));
  }
  obs.agents = agents_at(scenario, obs.t);
  obs.map = scenario.map;
  obs.route = scenario.route;
  return obs;
}

RolloutLog run_closed_loop(const Scenario & sc, Planner & planner, SimMode mode, const EngineOptions & options)
{
  RolloutLog log;
  log.scenario_id = sc.id;
  log.planner = planner.name();
  log.mode = mode;
  const std::size_t ticks = options.ticks == 0 ? sc.num_ticks() : options.ticks;
  const double wheelbase = options.tracker.wheelbase;

  std::vector<ReactiveAgent> reactive;
  std::vector<bool> is_reactive(sc.agents.size(), false);
  if (mode == SimMode::reactive) {
    reactive = reactive_agents(sc);
    for (const auto & a : reactive) {
      is_reactive[a.track_index] = true;
    }
  }
  auto agents_now = [&](double t) {
    std::vector<TrackedObject> out;
    std::size_t r = 0;
    for (std::size_t i = 0; i < sc.agents.size(); ++i) {
      if (is_reactive[i]) {
        while (reactive[r].track_index != i) {
          ++r;
        }
        out.push_back(reactive_object(sc, reactive[r]));
      } else if (sc.agents[i].covers(t)) {
        out.push_back(tracked_object(sc.agents[i], agent_state_at(sc.agents[i], t)));
      }
    }
    return out;
  };

  const EgoState & e0 = sc.ego_at_tick(0);
  KinematicState state = kinematic_from_ego(e0, &sc.ego_at_tick(1), wheelbase);
  std::vector<EgoState> history;
  const auto h = static_cast<long>(sc.history_ticks());
  for (long k = -h; k < 0; ++k) {
    history.push_back(sc.ego_at_tick(k));
  }
  EgoState ego = e0;
  ego.acceleration = sc.ego_at_tick(0).acceleration;

  planner.initialize(sc);
  for (std::size_t k = 0;; ++k) {
    const double t = tick_time(static_cast<long>(k));
    std::vector<TrackedObject> agents = agents_now(t);
    history.push_back(ego);
    log.states.push_back(state);
    log.ego.push_back(ego);
    log.agents.push_back(agents);
    if (k == ticks) {
      break;
    }

    Observation obs;
    obs.t = t;
    obs.tick = static_cast<long>(k);
    obs.ego = ego;
    obs.history.assign(history.end() - (h + 1), history.end());
    obs.agents = agents;
    obs.map = sc.map;
    obs.route = sc.route;

    Trajectory plan;
    ControlCommand cmd;
    const auto start = std::chrono::steady_clock::now();
    try {
      plan = planner.plan(obs);
      const auto stop = std::chrono::steady_clock::now();
      log.runtime_ms.push_back(
        options.timing ? std::chrono::duration<double, std::milli>(stop - start).count() : 0.0);
      cmd = track(plan, state, t, options.tracker);
    } catch (const std::exception & ex) {
      log.aborted = true;
      log.error = ex.what();
      if (log.runtime_ms.size() < log.commands.size() + 1) {
        log.runtime_ms.push_back(0.0);
      }
      break;
    }
    log.commands.push_back(cmd);

    // Background agents react to the ego state at this tick.
    if (!reactive.empty()) {
      TrackedObject ego_obj{-1, AgentKind::vehicle, ego.position, ego.heading, ego.velocity, obs.vehicle.length, obs.vehicle.width};
      std::vector<ReactiveAgent> next = reactive;
      for (std::size_t r = 0; r < reactive.size(); ++r) {
        const AgentTrack & track = sc.agents[reactive[r].track_index];
        std::vector<TrackedObject> others;
        others.push_back(ego_obj);
        for (const TrackedObject & a : agents) {
          if (a.id != track.id) {
            others.push_back(a);
          }
        }
        const VehicleParameters dims{track.length, track.width, track.length * 0.67};
        const LeadInfo lead = leading_gap(reactive[r].path, reactive[r].s, reactive[r].v, dims, others);
        const LongitudinalState ls{reactive[r].s, reactive[r].v};
        const double acc =
          lead.gap > 0.0 ? idm_acceleration(ls, lead.gap, lead.closing_speed, reactive[r].idm) : -reactive[r].idm.max_decel;
        const double v_next = std::max(0.0, ls.v + acc * kTickSeconds);
        next[r].s = std::min(ls.x + 0.5 * (ls.v + v_next) * kTickSeconds, reactive[r].path.length());
        next[r].v = v_next;
      }
      reactive = std::move(next);
    }

    state = bicycle_step(state, cmd, kTickSeconds, wheelbase);
    ego = ego_from_kinematic(state, tick_time(static_cast<long>(k + 1)), wheelbase);
  }
  return log;
}

OpenLoopLog run_open_loop(const Scenario & sc, Planner & planner, bool timing, bool all_ticks)
{
  OpenLoopLog log;
  log.scenario_id = sc.id;
  log.planner = planner.name();
  planner.initialize(sc);
  const auto ticks = static_cast<long>(sc.num_ticks());
  const auto horizon = static_cast<long>(std::llround(kForecastHorizon * sc.frequency));
  const long last = all_ticks ? ticks : ticks - horizon;
  for (long k = 0; k <= last; ++k) {
    const Observation obs = logged_observation(sc, k);
    try {
      const auto start = std::chrono::steady_clock::now();
      Trajectory plan = planner.plan(obs);
      const auto stop = std::chrono::steady_clock::now();
      log.runtime_ms.push_back(timing ? std::chrono::duration<double, std::milli>(stop - start).count() : 0.0);
      log.times.push_back(obs.t);
      log.predictions.push_back(std::move(plan));
    } catch (const std::exception & ex) {
      log.aborted = true;
      log.error = ex.what();
      break;
    }
  }
  return log;
}

namespace {

using nlohmann::json;

json object_json(const TrackedObject & a)
{
  return {{"id", a.id}, {"kind", to_string(a.kind)}, {"x", a.position.x}, {"y", a.position.y},
    {"heading", a.heading}, {"vx", a.velocity.x}, {"vy", a.velocity.y}, {"length", a.length}, {"width", a.width}};
}

}  // namespace

std::string serialize_rollout(const RolloutLog & log)
{
  json ticks = json::array();
  for (std::size_t k = 0; k < log.states.size(); ++k) {
    const KinematicState & s = log.states[k];
    const EgoState & e = log.ego[k];
    json tick{{"t", e.t}, {"x", s.x}, {"y", s.y}, {"heading", s.heading}, {"v", s.v}, {"steering", s.steering},
      {"accel", s.accel}, {"vx", e.velocity.x}, {"vy", e.velocity.y}, {"ax", e.acceleration.x}, {"ay", e.acceleration.y}};
    if (k < log.commands.size()) {
      tick["command"] = {log.commands[k].accel, log.commands[k].steering_rate};
    }
    if (k < log.runtime_ms.size()) {
      tick["runtime_ms"] = log.runtime_ms[k];
    }
    json agents = json::array();
    for (const TrackedObject & a : log.agents[k]) {
      agents.push_back(object_json(a));
    }
    tick["agents"] = std::move(agents);
    ticks.push_back(std::move(tick));
  }
  json doc{{"schema_version", kRolloutSchemaVersion}, {"kind", "rollout"}, {"scenario_id", log.scenario_id},
    {"planner", log.planner}, {"mode", to_string(log.mode)}, {"aborted", log.aborted}, {"error", log.error},
    {"ticks", std::move(ticks)}};
  return doc.dump(1) + "\n";
}

RolloutLog parse_rollout(const std::string & text)
{
  RolloutLog log;
  try {
    const json doc = json::parse(text);
    if (doc.at("schema_version").get<int>() != kRolloutSchemaVersion || doc.at("kind") != "rollout") {
      throw ParseError("rollout: unsupported schema_version or kind");
    }
    log.scenario_id = doc.at("scenario_id").get<std::string>();
    log.planner = doc.at("planner").get<std::string>();
    log.mode = sim_mode_from_string(doc.at("mode").get<std::string>());
    log.aborted = doc.at("aborted").get<bool>();
    log.error = doc.at("error").get<std::string>();
    for (const json & tick : doc.at("ticks")) {
      KinematicState s;
      s.x = tick.at("x");
      s.y = tick.at("y");
      s.heading = tick.at("heading");
      s.v = tick.at("v");
      s.steering = tick.at("steering");
      s.accel = tick.at("accel");
      log.states.push_back(s);
      EgoState e;
      e.t = tick.at("t");
      e.position = s.position();
      e.heading = s.heading;
      e.velocity = {tick.at("vx").get<double>(), tick.at("vy").get<double>()};
      e.acceleration = {tick.at("ax").get<double>(), tick.at("ay").get<double>()};
      log.ego.push_back(e);
      if (tick.contains("command")) {
        log.commands.push_back({tick["command"][0].get<double>(), tick["command"][1].get<double>()});
      }
      if (tick.contains("runtime_ms")) {
        log.runtime_ms.push_back(tick["runtime_ms"]);
      }
      std::vector<TrackedObject> agents;
      for (const json & a : tick.at("agents")) {
        TrackedObject obj;
        obj.id = a.at("id");
        obj.kind = agent_kind_from_string(a.at("kind").get<std::string>());
        obj.position = {a.at("x").get<double>(), a.at("y").get<double>()};
        obj.heading = a.at("heading");
        obj.velocity = {a.at("vx").get<double>(), a.at("vy").get<double>()};
        obj.length = a.at("length");
        obj.width = a.at("width");
        agents.push_back(obj);
      }
      log.agents.push_back(std::move(agents));
    }
  } catch (const json::exception & ex) {
    throw ParseError(std::string("rollout: ") + ex.what());
  }
  return log;
}

}  // namespace pdm
