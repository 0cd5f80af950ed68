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

#include "pdm/scenario_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pdm/errors.hpp"

namespace pdm {

using nlohmann::json;

namespace {

// Field access with the JSON path in every error message.
const json & field(const json & obj, const std::string & key, const std::string & where)
{
  if (!obj.is_object()) {
    throw ParseError(where + ": expected an object");
  }
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(where + ": missing field '" + key + "'");
  }
  return *it;
}

double number(const json & obj, const std::string & key, const std::string & where)
{
  const json & v = field(obj, key, where);
  if (!v.is_number()) {
    throw ParseError(where + "." + key + ": expected a number");
  }
  return v.get<double>();
}

int integer(const json & obj, const std::string & key, const std::string & where)
{
  const json & v = field(obj, key, where);
  if (!v.is_number_integer()) {
    throw ParseError(where + "." + key + ": expected an integer");
  }
  return v.get<int>();
}

json polyline_to_json(const Polyline & line)
{
  json arr = json::array();
  for (const Vec2 & p : line) {
    arr.push_back({p.x, p.y});
  }
  return arr;
}

Polyline polyline_from_json(const json & arr, const std::string & where)
{
  if (!arr.is_array()) {
    throw ParseError(where + ": expected an array of [x, y] points");
  }
  Polyline line;
  line.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const json & p = arr[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ParseError(where + "[" + std::to_string(i) + "]: expected [x, y]");
    }
    line.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return line;
}

std::vector<int> ids_from_json(const json & arr, const std::string & where)
{
  if (!arr.is_array()) {
    throw ParseError(where + ": expected an array of integers");
  }
  std::vector<int> ids;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number_integer()) {
      throw ParseError(where + "[" + std::to_string(i) + "]: expected an integer");
    }
    ids.push_back(arr[i].get<int>());
  }
  return ids;
}

json optional_id(const std::optional<int> & id) { return id ? json(*id) : json(nullptr); }

std::optional<int> optional_id_from_json(const json & obj, const std::string & key, const std::string & where)
{
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    return std::nullopt;
  }
  if (!it->is_number_integer()) {
    throw ParseError(where + "." + key + ": expected an integer or null");
  }
  return it->get<int>();
}

std::size_t line_of_offset(const std::string & text, std::size_t offset)
{
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

}  // namespace

std::string serialize_scenario(const Scenario & sc)
{
  json segments = json::array();
  for (const LaneSegment & seg : sc.map->segments()) {
    segments.push_back({
      {"id", seg.id},
      {"roadblock", seg.roadblock},
      {"centerline", polyline_to_json(seg.centerline)},
      {"successors", seg.successors},
      {"speed_limit", seg.speed_limit},
      {"left_boundary", polyline_to_json(seg.left_boundary)},
      {"right_boundary", polyline_to_json(seg.right_boundary)},
      {"left_neighbor", optional_id(seg.left_neighbor)},
      {"right_neighbor", optional_id(seg.right_neighbor)},
    });
  }
  json drivable = json::array();
  for (const Polygon & poly : sc.map->drivable_area()) {
    drivable.push_back(polyline_to_json(poly));
  }
  json agents = json::array();
  for (const AgentTrack & track : sc.agents) {
    json states = json::array();
    for (const AgentState & s : track.states) {
      states.push_back(
        {{"t", s.t}, {"x", s.position.x}, {"y", s.position.y}, {"heading", s.heading},
         {"vx", s.velocity.x}, {"vy", s.velocity.y}});
    }
    agents.push_back(
      {{"id", track.id}, {"kind", to_string(track.kind)}, {"length", track.length},
       {"width", track.width}, {"states", std::move(states)}});
  }
  json ego = json::array();
  for (const EgoState & e : sc.ego_log) {
    ego.push_back(
      {{"t", e.t}, {"x", e.position.x}, {"y", e.position.y}, {"heading", e.heading},
       {"vx", e.velocity.x}, {"vy", e.velocity.y}, {"ax", e.acceleration.x},
       {"ay", e.acceleration.y}});
  }
  json doc = {
    {"schema_version", kScenarioSchemaVersion},
    {"id", sc.id},
    {"duration_s", sc.duration},
    {"frequency_hz", sc.frequency},
    {"route", sc.route},
    {"map", {{"segments", std::move(segments)}, {"drivable_area", std::move(drivable)}}},
    {"agents", std::move(agents)},
    {"ego_log", std::move(ego)},
  };
  return doc.dump(1) + "\n";
}

Scenario parse_scenario(const std::string & text)
{
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error & e) {
    throw ParseError(
      "scenario parse error at line " + std::to_string(line_of_offset(text, e.byte)) + ": " + e.what());
  }
  const std::string root = "scenario";
  if (integer(doc, "schema_version", root) != kScenarioSchemaVersion) {
    throw ParseError("scenario.schema_version: unsupported version");
  }
  Scenario sc;
  if (const auto it = doc.find("id"); it != doc.end() && it->is_string()) {
    sc.id = it->get<std::string>();
  }
  sc.duration = number(doc, "duration_s", root);
  sc.frequency = number(doc, "frequency_hz", root);
  sc.route = ids_from_json(field(doc, "route", root), "scenario.route");

  const json & map = field(doc, "map", root);
  const json & segs = field(map, "segments", "scenario.map");
  if (!segs.is_array()) {
    throw ParseError("scenario.map.segments: expected an array");
  }
  std::vector<LaneSegment> segments;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string where = "scenario.map.segments[" + std::to_string(i) + "]";
    const json & s = segs[i];
    LaneSegment seg;
    seg.id = integer(s, "id", where);
    seg.roadblock = integer(s, "roadblock", where);
    seg.centerline = polyline_from_json(field(s, "centerline", where), where + ".centerline");
    seg.successors = ids_from_json(field(s, "successors", where), where + ".successors");
    seg.speed_limit = number(s, "speed_limit", where);
    seg.left_boundary = polyline_from_json(field(s, "left_boundary", where), where + ".left_boundary");
    seg.right_boundary = polyline_from_json(field(s, "right_boundary", where), where + ".right_boundary");
    seg.left_neighbor = optional_id_from_json(s, "left_neighbor", where);
    seg.right_neighbor = optional_id_from_json(s, "right_neighbor", where);
    segments.push_back(std::move(seg));
  }
  std::vector<Polygon> drivable;
  const json & area = field(map, "drivable_area", "scenario.map");
  if (!area.is_array()) {
    throw ParseError("scenario.map.drivable_area: expected an array of polygons");
  }
  for (std::size_t i = 0; i < area.size(); ++i) {
    drivable.push_back(polyline_from_json(area[i], "scenario.map.drivable_area[" + std::to_string(i) + "]"));
  }
  sc.map = std::make_shared<const WorldMap>(std::move(segments), std::move(drivable));

  const json & agents = field(doc, "agents", root);
  if (!agents.is_array()) {
    throw ParseError("scenario.agents: expected an array");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string where = "scenario.agents[" + std::to_string(i) + "]";
    const json & a = agents[i];
    AgentTrack track;
    track.id = integer(a, "id", where);
    const json & kind = field(a, "kind", where);
    if (!kind.is_string()) {
      throw ParseError(where + ".kind: expected a string");
    }
    track.kind = agent_kind_from_string(kind.get<std::string>());
    track.length = number(a, "length", where);
    track.width = number(a, "width", where);
    const json & states = field(a, "states", where);
    if (!states.is_array()) {
      throw ParseError(where + ".states: expected an array");
    }
    for (std::size_t k = 0; k < states.size(); ++k) {
      const std::string sw = where + ".states[" + std::to_string(k) + "]";
      const json & s = states[k];
      track.states.push_back(
        {number(s, "t", sw), {number(s, "x", sw), number(s, "y", sw)}, number(s, "heading", sw),
         {number(s, "vx", sw), number(s, "vy", sw)}});
    }
    sc.agents.push_back(std::move(track));
  }
  const json & ego = field(doc, "ego_log", root);
  if (!ego.is_array()) {
    throw ParseError("scenario.ego_log: expected an array");
  }
  for (std::size_t k = 0; k < ego.size(); ++k) {
    const std::string sw = "scenario.ego_log[" + std::to_string(k) + "]";
    const json & s = ego[k];
    EgoState e;
    e.t = number(s, "t", sw);
    e.position = {number(s, "x", sw), number(s, "y", sw)};
    e.heading = number(s, "heading", sw);
    e.velocity = {number(s, "vx", sw), number(s, "vy", sw)};
    e.acceleration = {number(s, "ax", sw), number(s, "ay", sw)};
    sc.ego_log.push_back(e);
  }
  validate_scenario(sc);
  return sc;
}

std::string read_text_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path & path, const std::string & text)
{
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << text;
  if (!out) {
    throw Error("write failed for " + path.string());
  }
}

Scenario load_scenario(const std::filesystem::path & path) { return parse_scenario(read_text_file(path)); }

void save_scenario(const Scenario & scenario, const std::filesystem::path & path)
{
  write_text_file(path, serialize_scenario(scenario));
}

}  // namespace pdm
