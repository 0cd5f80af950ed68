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

#include <cstdint>
#include <string>
#include <vector>

#include "pdm/world.hpp"

namespace pdm {

/// Names the procedural template; see scenario_templates().
struct GeneratorSpec {
  std::string template_name;
};

/// straight, curve, lane_fork, lead_vehicle_brake, crossing_pedestrian, stop_and_go
const std::vector<std::string> & scenario_templates();

/// Deterministic per (spec, seed). The ego log is an anticipating car-following
/// drive along the route centerline with a small lateral sway; speeds stay at
/// or below 15 m/s. Throws ConfigError for an unknown template.
Scenario generate_scenario(const GeneratorSpec & spec, std::uint64_t seed);

/// Counter-based uniform stream; identical across platforms for a seed.
class SplitMix {
public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  bool bernoulli(double p) { return uniform(0.0, 1.0) < p; }

private:
  std::uint64_t state_;
};

}  // namespace pdm
