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

"""Python bindings for the PDM planner benchmark."""

from pdm_planner._core import (
    ConfigError,
    IdmParams,
    ParseError,
    Scenario,
    evaluate,
    generate_scenario,
    idm_acceleration,
    idm_desired_gap,
    open_loop_score,
    plan_closed,
    planner_kinds,
    run_closed_loop,
    scenario_templates,
)

__all__ = [
    "ConfigError",
    "IdmParams",
    "ParseError",
    "Scenario",
    "evaluate",
    "generate_scenario",
    "idm_acceleration",
    "idm_desired_gap",
    "open_loop_score",
    "plan_closed",
    "planner_kinds",
    "run_closed_loop",
    "scenario_templates",
]
