# Copyright 2026 The PDM Planner Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math

import pytest

import pdm_planner as pdm


def test_idm_fixed_points():
    p = pdm.IdmParams()
    assert pdm.idm_acceleration(0.0, math.inf, 0.0, p) == p.accel
    assert pdm.idm_acceleration(p.target_speed, math.inf, 0.0, p) == 0.0
    assert pdm.idm_acceleration(10.0, 5.0, 5.0, p) == -p.max_decel


def test_desired_gap_formula():
    p = pdm.IdmParams()
    v, dv = 10.0, 2.0
    expected = p.jam_distance + v * p.time_headway + v * dv / (2.0 * math.sqrt(p.accel * p.comfortable_decel))
    assert pdm.idm_desired_gap(v, dv, p) == pytest.approx(expected, rel=1e-12)


def test_generator_is_deterministic_and_round_trips():
    a = pdm.generate_scenario("curve", 3)
    b = pdm.generate_scenario("curve", 3)
    assert a.to_json() == b.to_json()
    assert a.id == "curve_0003"
    back = pdm.Scenario.from_json(a.to_json())
    assert back.to_json() == a.to_json()
    assert set(pdm.scenario_templates()) >= {"straight", "curve", "lane_fork"}


def test_bad_inputs_raise_value_errors():
    with pytest.raises(ValueError):
        pdm.generate_scenario("roundabout", 0)
    with pytest.raises(ValueError):
        pdm.Scenario.from_json("{")


def test_pdm_closed_plan_shape():
    sc = pdm.generate_scenario("straight", 0)
    out = pdm.plan_closed(sc, 10)
    assert len(out["trajectory"]) == 81
    assert out["trajectory"][0][0] == pytest.approx(1.0)
    assert not out["route_failure"]


def test_log_replay_open_loop_is_perfect():
    sc = pdm.generate_scenario("lane_fork", 1)
    assert pdm.open_loop_score(sc, "log_replay")["ols"] == 100.0


def test_closed_loop_rollout():
    sc = pdm.generate_scenario("lead_vehicle_brake", 0)
    out = pdm.run_closed_loop(sc, "pdm_closed", "non_reactive")
    assert len(out["states"]) == sc.num_ticks + 1
    assert 0.0 <= out["cls"] <= 100.0
    assert out["no_at_fault_collision"]


def test_evaluate_small_set():
    rows = pdm.evaluate("idm", ["straight"], 2, 0, ["closed_nr"])
    assert [r["scenario_id"] for r in rows] == ["straight_0000", "straight_0001"]
    assert all(not r["failed"] for r in rows)
