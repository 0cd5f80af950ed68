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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "pdm/bench.hpp"
#include "pdm/engine.hpp"
#include "pdm/errors.hpp"
#include "pdm/generator.hpp"
#include "pdm/idm.hpp"
#include "pdm/learned.hpp"
#include "pdm/metrics.hpp"
#include "pdm/pdm_closed.hpp"
#include "pdm/scenario_io.hpp"

namespace py = pybind11;
using namespace pdm;

namespace {

py::list trajectory_rows(const Trajectory & t)
{
  py::list rows;
  for (const auto & p : t.points) {
    rows.append(py::make_tuple(p.t, p.position.x, p.position.y, p.heading, p.v));
  }
  return rows;
}

py::dict cls_dict(const ClsReport & r)
{
  py::dict d;
  d["cls"] = r.cls;
  d["no_at_fault_collision"] = r.no_at_fault_collision;
  d["drivable_area"] = r.drivable_area;
  d["driving_direction"] = r.driving_direction;
  d["makes_progress"] = r.makes_progress;
  d["ttc"] = r.ttc;
  d["progress"] = r.progress;
  d["speed_compliance"] = r.speed_compliance;
  d["comfort"] = r.comfort;
  d["ego_progress"] = r.ego_progress;
  d["expert_progress"] = r.expert_progress;
  return d;
}

PlannerSpec make_spec(const std::string & kind, const std::string & checkpoint, double correction_horizon,
                      double idm_accel, bool forecasting)
{
  PlannerSpec spec;
  spec.kind = kind;
  spec.checkpoint = checkpoint;
  spec.correction_horizon = correction_horizon;
  spec.idm.accel = idm_accel;
  spec.closed.forecasting = forecasting;
  return spec;
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Closed-loop planning benchmark: IDM, PDM-Closed, PDM-Open and PDM-Hybrid";

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<ParseError> parse_error(m, "ParseError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) {
        std::rethrow_exception(p);
      }
    } catch (const ConfigError & e) {
      py::set_error(config_error, e.what());
    } catch (const ParseError & e) {
      py::set_error(parse_error, e.what());
    }
  });

  py::class_<IdmParams>(m, "IdmParams")
    .def(py::init<>())
    .def_readwrite("accel", &IdmParams::accel)
    .def_readwrite("target_speed", &IdmParams::target_speed)
    .def_readwrite("jam_distance", &IdmParams::jam_distance)
    .def_readwrite("time_headway", &IdmParams::time_headway)
    .def_readwrite("exponent", &IdmParams::exponent)
    .def_readwrite("comfortable_decel", &IdmParams::comfortable_decel)
    .def_readwrite("max_decel", &IdmParams::max_decel);

  m.def(
    "idm_acceleration",
    [](double v, double gap, double closing_speed, const IdmParams & p) {
      return idm_acceleration({0.0, v}, gap, closing_speed, p);
    },
    py::arg("v"), py::arg("gap"), py::arg("closing_speed") = 0.0, py::arg("params") = IdmParams{},
    "IDM acceleration; pass float('inf') as the gap for a free road.");
  m.def("idm_desired_gap", &idm_desired_gap, py::arg("v"), py::arg("closing_speed"), py::arg("params") = IdmParams{});

  py::class_<Scenario>(m, "Scenario")
    .def_readonly("id", &Scenario::id)
    .def_readonly("route", &Scenario::route)
    .def_property_readonly("num_ticks", &Scenario::num_ticks)
    .def_property_readonly("num_agents", [](const Scenario & s) { return s.agents.size(); })
    .def("ego_at", [](const Scenario & s, long tick) {
      const EgoState & e = s.ego_at_tick(tick);
      return py::make_tuple(e.t, e.position.x, e.position.y, e.heading, e.speed());
    })
    .def("to_json", &serialize_scenario)
    .def_static("from_json", &parse_scenario);

  m.def("scenario_templates", &scenario_templates);
  m.def(
    "generate_scenario", [](const std::string & name, std::uint64_t seed) { return generate_scenario({name}, seed); },
    py::arg("template_name"), py::arg("seed"));

  m.def(
    "plan_closed",
    [](const Scenario & sc, long tick, bool forecasting) {
      PdmClosedConfig cfg;
      cfg.forecasting = forecasting;
      PdmClosedPlanner planner(cfg);
      const Trajectory t = planner.plan(logged_observation(sc, tick));
      const auto & d = planner.diagnostics();
      py::dict out;
      out["trajectory"] = trajectory_rows(t);
      out["emergency_brake"] = d.emergency_brake;
      out["route_failure"] = d.route_failure;
      if (!d.proposals.empty()) {
        const Proposal & w = d.proposals[d.winner];
        out["speed_fraction"] = w.speed_fraction;
        out["lateral_offset"] = w.lateral_offset;
        out["score"] = w.score.total;
      }
      return out;
    },
    py::arg("scenario"), py::arg("tick") = 0, py::arg("forecasting") = true,
    "Runs PDM-Closed on the logged observation at `tick`.");

  m.def(
    "run_closed_loop",
    [](const Scenario & sc, const std::string & kind, const std::string & mode, const std::string & checkpoint,
       double correction_horizon, double idm_accel, bool forecasting) {
      const PlannerFactory factory(make_spec(kind, checkpoint, correction_horizon, idm_accel, forecasting));
      auto planner = factory.make();
      RolloutLog log;
      {
        py::gil_scoped_release release;
        log = run_closed_loop(sc, *planner, sim_mode_from_string(mode), {.timing = false});
      }
      py::dict out = cls_dict(score_closed_loop(log, sc));
      py::list states;
      for (const auto & s : log.states) {
        states.append(py::make_tuple(s.x, s.y, s.heading, s.v));
      }
      out["states"] = states;
      out["aborted"] = log.aborted;
      return out;
    },
    py::arg("scenario"), py::arg("planner") = "pdm_closed", py::arg("mode") = "reactive", py::arg("checkpoint") = "",
    py::arg("correction_horizon") = 2.0, py::arg("idm_accel") = 1.0, py::arg("forecasting") = true);

  m.def(
    "open_loop_score",
    [](const Scenario & sc, const std::string & kind, const std::string & checkpoint, double idm_accel) {
      const PlannerFactory factory(make_spec(kind, checkpoint, 2.0, idm_accel, true));
      auto planner = factory.make();
      OpenLoopLog log;
      {
        py::gil_scoped_release release;
        log = run_open_loop(sc, *planner, false);
      }
      const OlsReport r = score_open_loop(log, sc);
      py::dict out;
      out["ols"] = r.ols;
      out["miss_rate"] = r.miss_rate;
      out["ticks"] = r.ticks;
      return out;
    },
    py::arg("scenario"), py::arg("planner") = "log_replay", py::arg("checkpoint") = "", py::arg("idm_accel") = 1.0);

  m.def(
    "evaluate",
    [](const std::string & kind, std::vector<std::string> templates, int seeds_per_template, std::uint64_t seed,
       std::vector<std::string> modes, int jobs, const std::string & checkpoint) {
      BenchConfig cfg;
      cfg.templates = std::move(templates);
      cfg.seeds_per_template = seeds_per_template;
      cfg.seed = seed;
      cfg.planner = make_spec(kind, checkpoint, 2.0, 1.0, true);
      cfg.modes = modes;
      cfg.jobs = jobs;
      cfg.validate();
      std::vector<ScenarioResult> res;
      {
        py::gil_scoped_release release;
        EvalOptions opt;
        opt.modes = modes;
        opt.jobs = jobs;
        opt.timing = false;
        res = evaluate(generate_benchmark(cfg), PlannerFactory(cfg.planner), opt);
      }
      py::list rows;
      for (const auto & r : res) {
        py::dict d;
        d["scenario_id"] = r.scores.scenario_id;
        d["cls_r"] = r.scores.cls_r;
        d["cls_nr"] = r.scores.cls_nr;
        d["ols"] = r.scores.ols;
        d["failed"] = r.failed;
        rows.append(d);
      }
      return rows;
    },
    py::arg("planner") = "pdm_closed", py::arg("templates") = std::vector<std::string>{},
    py::arg("seeds_per_template") = 20, py::arg("seed") = 0,
    py::arg("modes") = std::vector<std::string>{"open_loop", "closed_nr", "closed_r"}, py::arg("jobs") = 1,
    py::arg("checkpoint") = "");

  m.def("planner_kinds", &planner_kinds);
}
