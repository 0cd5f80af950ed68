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

#include <filesystem>
#include <string>

#include "pdm/world.hpp"

namespace pdm {

inline constexpr int kScenarioSchemaVersion = 1;

/// Parses and validates a scenario document. Errors carry line or field context.
Scenario parse_scenario(const std::string & text);
std::string serialize_scenario(const Scenario & scenario);

Scenario load_scenario(const std::filesystem::path & path);
void save_scenario(const Scenario & scenario, const std::filesystem::path & path);

/// Reads a whole file; throws Error on I/O failure.
std::string read_text_file(const std::filesystem::path & path);
/// Writes a whole file, creating parent directories; throws Error on I/O failure.
void write_text_file(const std::filesystem::path & path, const std::string & text);

}  // namespace pdm
