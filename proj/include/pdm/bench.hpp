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
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pdm/engine.hpp"
#include "pdm/learned.hpp"
#include "pdm/metrics.hpp"
#include "pdm/pdm_closed.hpp"

namespace pdm {

/// Planner kind plus its configuration.
struct PlannerSpec {
  std::string kind = "idm";  ///< log_replay, idm, pdm_closed, pdm_open, pdm_hybrid, constant_velocity
  IdmParams idm;
  PdmClosedConfig closed;
  std::string checkpoint;  ///< open model (pdm_open) or offset model (pdm_hybrid)
  double correction_horizon = 2.0;
};

const std::vector<std::string> & planner_kinds();

struct BenchConfig {
  std::vector<std::string> templates;  ///< empty means every template
  int seeds_per_template = 20;
  std::uint64_t seed = 0;
  std::filesystem::path scenario_dir;
  std::filesystem::path output_dir = "out";
  std::filesystem::path dataset;        ///< defaults to <scenario_dir>/dataset.bin
  bool write_dataset = true;
  PlannerSpec planner;
  std::vector<std::string> modes{"open_loop", "closed_nr", "closed_r"};
  int jobs = 1;
  /// Wall-clock planner timing; off writes zero runtimes so reports are byte-stable.
  bool timing = true;
  bool write_rollouts = true;
  TrainConfig train;
  std::filesystem::path checkpoint_out;  ///< cmd_train output, defaults to <output_dir>/model.ckpt
  std::vector<double> correction_horizons{0.0, 2.0, 2.5, 3.0};
  std::vector<std::filesystem::path> report_inputs;

  /// Throws ConfigError for unknown planner kinds, modes, templates or jobs < 1.
  void validate() const;
};

/// Reads a JSON config document; unknown keys are rejected.
BenchConfig parse_bench_config(const std::string & text);
BenchConfig load_bench_config(const std::filesystem::path & path);

/// Seed used for scenario i of a template under the global seed.
std::uint64_t scenario_seed(std::uint64_t global_seed, int index);

/// Scenario set in template order, then seed order.
std::vector<Scenario> generate_benchmark(const BenchConfig & cfg);
/// Every *.json scenario under `dir` except manifest.json, sorted by filename.
std::vector<Scenario> load_scenarios(const std::filesystem::path & dir);
/// Scenarios from cfg.scenario_dir when set, otherwise generated in memory.
std::vector<Scenario> benchmark_scenarios(const BenchConfig & cfg);

/// Builds planners for one spec; checkpoints are loaded once and shared.
class PlannerFactory {
public:
  explicit PlannerFactory(PlannerSpec spec);
  std::unique_ptr<Planner> make() const;
  const PlannerSpec & spec() const { return spec_; }

private:
  PlannerSpec spec_;
  std::shared_ptr<const LearnedModel> model_;
};

struct ScenarioResult {
  ScenarioScores scores;
  OlsReport open_loop;
  ClsReport closed_nr;
  ClsReport closed_r;
  RolloutLog rollout_nr;
  RolloutLog rollout_r;
  bool failed = false;
  std::string error;
};

struct EvalOptions {
  std::vector<std::string> modes{"open_loop", "closed_nr", "closed_r"};
  int jobs = 1;
  bool timing = true;
  bool keep_rollouts = false;
};

/// Runs every requested mode per scenario over a bounded work queue. Results
/// are in scenario order and independent of `jobs`.
std::vector<ScenarioResult> evaluate(
  const std::vector<Scenario> & scenarios, const PlannerFactory & factory, const EvalOptions & options);

/// `scenario_id,cls_r,cls_nr,ols,runtime_ms` rows.
std::string scores_csv(const std::vector<ScenarioResult> & results);
/// Aggregate row, per-template means and failures as JSON.
std::string summary_json(
  const std::string & planner, const std::vector<ScenarioResult> & results, const std::vector<std::string> & modes);

/// Exit codes of the command line verbs.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitPartial = 2;

using LogSink = std::function<void(const std::string &)>;

int cmd_generate(const BenchConfig & cfg, const LogSink & log = {});
int cmd_train(const BenchConfig & cfg, const LogSink & log = {});
int cmd_eval(const BenchConfig & cfg, const LogSink & log = {});
/// suite is hybrid_C, closed_components, open_inputs or idm_accel.
int cmd_ablate(const BenchConfig & cfg, const std::string & suite, const LogSink & log = {});
int cmd_report(const BenchConfig & cfg, const LogSink & log = {});

const std::vector<std::string> & ablation_suites();

/// One row of an ablation table.
struct AblationRow {
  std::string label;
  BenchmarkRow row;
  std::size_t failures = 0;
};

std::string ablation_markdown(const std::string & suite, const std::vector<AblationRow> & rows);

/// Standalone SVG plots.
std::string svg_line_plot(
  const std::string & title, const std::string & x_label, const std::string & y_label,
  const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> & series);
std::string svg_scatter(
  const std::string & title, const std::string & x_label, const std::string & y_label,
  const std::vector<std::pair<std::string, std::pair<double, double>>> & points);

/// 64-bit FNV-1a, used for manifest checksums.
std::uint64_t fnv1a(const std::string & data);

}  // namespace pdm
