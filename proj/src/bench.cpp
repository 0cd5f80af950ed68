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

#include "pdm/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pdm/errors.hpp"
#include "pdm/generator.hpp"
#include "pdm/scenario_io.hpp"

namespace pdm {

namespace fs = std::filesystem;
using nlohmann::json;

const std::vector<std::string> & planner_kinds()
{
  static const std::vector<std::string> kinds{
    "log_replay", "idm", "pdm_closed", "pdm_open", "pdm_hybrid", "constant_velocity"};
  return kinds;
}

const std::vector<std::string> & ablation_suites()
{
  static const std::vector<std::string> suites{"hybrid_C", "closed_components", "open_inputs", "idm_accel"};
  return suites;
}

namespace {

const std::vector<std::string> & mode_names()
{
  static const std::vector<std::string> modes{"open_loop", "closed_nr", "closed_r"};
  return modes;
}

bool contains(const std::vector<std::string> & v, const std::string & s)
{
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string fixed(double v, int digits = 6)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string hex64(std::uint64_t v)
{
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)> & fn)
{
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(jobs, static_cast<int>(std::max<std::size_t>(n, 1)))));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      fn(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) {
            error = std::current_exception();
          }
        }
      }
    });
  }
  for (auto & t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

void check_keys(const json & obj, const std::set<std::string> & allowed, const std::string & where)
{
  if (!obj.is_object()) {
    throw ConfigError(where + " must be an object");
  }
  for (const auto & item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("unknown config key '" + where + "." + item.key() + "'");
    }
  }
}

IdmParams parse_idm(const json & j, IdmParams p)
{
  check_keys(
    j, {"accel", "target_speed", "jam_distance", "time_headway", "exponent", "comfortable_decel", "max_decel"}, "idm");
  p.accel = j.value("accel", p.accel);
  p.target_speed = j.value("target_speed", p.target_speed);
  p.jam_distance = j.value("jam_distance", p.jam_distance);
  p.time_headway = j.value("time_headway", p.time_headway);
  p.exponent = j.value("exponent", p.exponent);
  p.comfortable_decel = j.value("comfortable_decel", p.comfortable_decel);
  p.max_decel = j.value("max_decel", p.max_decel);
  return p;
}

PdmClosedConfig parse_closed(const json & j, PdmClosedConfig c)
{
  check_keys(j,
    {"speed_fractions", "lateral_offsets", "forecasting", "forecast_horizon", "proposal_horizon",
     "brake_check_horizon", "brake_decel", "idm"},
    "pdm_closed");
  c.speed_fractions = j.value("speed_fractions", c.speed_fractions);
  c.lateral_offsets = j.value("lateral_offsets", c.lateral_offsets);
  c.forecasting = j.value("forecasting", c.forecasting);
  c.forecast_horizon = j.value("forecast_horizon", c.forecast_horizon);
  c.proposal_horizon = j.value("proposal_horizon", c.proposal_horizon);
  c.brake_check_horizon = j.value("brake_check_horizon", c.brake_check_horizon);
  c.brake_decel = j.value("brake_decel", c.brake_decel);
  if (j.contains("idm")) {
    c.idm = parse_idm(j.at("idm"), c.idm);
  }
  return c;
}

TrainConfig parse_train(const json & j, TrainConfig t)
{
  check_keys(j, {"kind", "centerline", "history", "hidden", "epochs", "batch", "learning_rate", "zero_head"}, "train");
  if (j.contains("kind")) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind != "open" && kind != "offset") {
      throw ConfigError("train.kind must be open or offset");
    }
    t.kind = kind == "offset" ? ModelKind::offset : ModelKind::open;
  }
  if (j.contains("centerline")) {
    t.features.centerline = centerline_input_from_string(j.at("centerline").get<std::string>());
  }
  t.features.history = j.value("history", t.features.history);
  t.hidden = j.value("hidden", t.hidden);
  t.epochs = j.value("epochs", t.epochs);
  t.batch = j.value("batch", t.batch);
  t.adam.learning_rate = j.value("learning_rate", t.adam.learning_rate);
  t.zero_head = j.value("zero_head", t.zero_head);
  return t;
}

std::string template_of(const std::string & scenario_id)
{
  const auto pos = scenario_id.rfind('_');
  return pos == std::string::npos ? scenario_id : scenario_id.substr(0, pos);
}

void emit(const LogSink & log, const std::string & msg)
{
  if (log) {
    log(msg);
  }
}

fs::path dataset_path(const BenchConfig & cfg)
{
  if (!cfg.dataset.empty()) {
    return cfg.dataset;
  }
  if (cfg.scenario_dir.empty()) {
    throw ConfigError("no dataset path and no scenario directory configured");
  }
  return cfg.scenario_dir / "dataset.bin";
}

}  // namespace

void BenchConfig::validate() const
{
  for (const auto & t : templates) {
    if (!contains(scenario_templates(), t)) {
      throw ConfigError("unknown template '" + t + "'");
    }
  }
  if (seeds_per_template < 1) {
    throw ConfigError("seeds_per_template must be at least 1");
  }
  if (!contains(planner_kinds(), planner.kind)) {
    throw ConfigError("unknown planner kind '" + planner.kind + "'");
  }
  if (modes.empty()) {
    throw ConfigError("at least one mode is required");
  }
  for (const auto & m : modes) {
    if (!contains(mode_names(), m)) {
      throw ConfigError("unknown mode '" + m + "' (expected open_loop, closed_nr or closed_r)");
    }
  }
  if (jobs < 1) {
    throw ConfigError("jobs must be at least 1");
  }
  planner.idm.validate();
  planner.closed.validate();
}

BenchConfig parse_bench_config(const std::string & text)
{
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception & ex) {
    throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
  }
  BenchConfig c;
  try {
    check_keys(j,
      {"templates", "seeds_per_template", "seed", "scenario_dir", "output_dir", "dataset", "write_dataset", "planner",
       "modes", "jobs", "timing", "write_rollouts", "train", "checkpoint_out", "correction_horizons", "report_inputs"},
      "config");
    c.templates = j.value("templates", c.templates);
    c.seeds_per_template = j.value("seeds_per_template", c.seeds_per_template);
    c.seed = j.value("seed", c.seed);
    c.scenario_dir = j.value("scenario_dir", c.scenario_dir.string());
    c.output_dir = j.value("output_dir", c.output_dir.string());
    c.dataset = j.value("dataset", c.dataset.string());
    c.write_dataset = j.value("write_dataset", c.write_dataset);
    c.modes = j.value("modes", c.modes);
    c.jobs = j.value("jobs", c.jobs);
    c.timing = j.value("timing", c.timing);
    c.write_rollouts = j.value("write_rollouts", c.write_rollouts);
    c.checkpoint_out = j.value("checkpoint_out", c.checkpoint_out.string());
    c.correction_horizons = j.value("correction_horizons", c.correction_horizons);
    for (const auto & p : j.value("report_inputs", std::vector<std::string>{})) {
      c.report_inputs.emplace_back(p);
    }
    if (j.contains("planner")) {
      const json & p = j.at("planner");
      check_keys(p, {"kind", "checkpoint", "correction_horizon", "idm", "pdm_closed"}, "planner");
      c.planner.kind = p.value("kind", c.planner.kind);
      c.planner.checkpoint = p.value("checkpoint", c.planner.checkpoint);
      c.planner.correction_horizon = p.value("correction_horizon", c.planner.correction_horizon);
      if (p.contains("idm")) {
        c.planner.idm = parse_idm(p.at("idm"), c.planner.idm);
      }
      if (p.contains("pdm_closed")) {
        c.planner.closed = parse_closed(p.at("pdm_closed"), c.planner.closed);
      }
    }
    if (j.contains("train")) {
      c.train = parse_train(j.at("train"), c.train);
    }
  } catch (const json::exception & ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  }
  return c;
}

BenchConfig load_bench_config(const fs::path & path)
{
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const Error & ex) {
    throw ConfigError(ex.what());
  }
  return parse_bench_config(text);
}

std::uint64_t scenario_seed(std::uint64_t global_seed, int index)
{
  return global_seed * 10000ULL + static_cast<std::uint64_t>(index);
}

std::vector<Scenario> generate_benchmark(const BenchConfig & cfg)
{
  const std::vector<std::string> & names = cfg.templates.empty() ? scenario_templates() : cfg.templates;
  std::vector<std::pair<std::string, std::uint64_t>> jobs;
  for (const auto & name : names) {
    for (int i = 0; i < cfg.seeds_per_template; ++i) {
      jobs.emplace_back(name, scenario_seed(cfg.seed, i));
    }
  }
  std::vector<Scenario> out(jobs.size());
  parallel_for(jobs.size(), cfg.jobs, [&](std::size_t i) {
    out[i] = generate_scenario({jobs[i].first}, jobs[i].second);
  });
  return out;
}

std::vector<Scenario> load_scenarios(const fs::path & dir)
{
  if (!fs::is_directory(dir)) {
    throw ConfigError("scenario directory '" + dir.string() + "' does not exist");
  }
  std::vector<fs::path> files;
  for (const auto & entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json" && entry.path().filename() != "manifest.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  out.reserve(files.size());
  for (const auto & f : files) {
    out.push_back(load_scenario(f));
  }
  return out;
}

std::vector<Scenario> benchmark_scenarios(const BenchConfig & cfg)
{
  if (cfg.scenario_dir.empty()) {
    return generate_benchmark(cfg);
  }
  std::vector<Scenario> all = load_scenarios(cfg.scenario_dir);
  if (cfg.templates.empty()) {
    return all;
  }
  std::vector<Scenario> out;
  for (auto & sc : all) {
    if (contains(cfg.templates, template_of(sc.id))) {
      out.push_back(std::move(sc));
    }
  }
  return out;
}

PlannerFactory::PlannerFactory(PlannerSpec spec) : spec_(std::move(spec))
{
  if (!contains(planner_kinds(), spec_.kind)) {
    throw ConfigError("unknown planner kind '" + spec_.kind + "'");
  }
  if (spec_.kind == "pdm_open" || spec_.kind == "pdm_hybrid") {
    if (spec_.checkpoint.empty()) {
      throw ConfigError(spec_.kind + " needs a checkpoint");
    }
    try {
      model_ = std::make_shared<const LearnedModel>(load_checkpoint(spec_.checkpoint));
    } catch (const ParseError & ex) {
      throw ConfigError(ex.what());
    }
    const ModelKind want = spec_.kind == "pdm_open" ? ModelKind::open : ModelKind::offset;
    if (model_->kind != want) {
      throw ConfigError(spec_.kind + " needs a " + to_string(want) + " checkpoint");
    }
  }
  if (spec_.kind == "idm") {
    spec_.idm.validate();
  }
  if (spec_.kind == "pdm_closed" || spec_.kind == "pdm_hybrid") {
    spec_.closed.validate();
  }
}

std::unique_ptr<Planner> PlannerFactory::make() const
{
  const std::string & k = spec_.kind;
  if (k == "log_replay") {
    return std::make_unique<LogReplayPlanner>();
  }
  if (k == "constant_velocity") {
    return std::make_unique<ConstantVelocityPlanner>();
  }
  if (k == "idm") {
    return std::make_unique<IdmPlanner>(spec_.idm);
  }
  if (k == "pdm_closed") {
    return std::make_unique<PdmClosedPlanner>(spec_.closed);
  }
  if (k == "pdm_open") {
    return std::make_unique<PdmOpenPlanner>(model_);
  }
  return std::make_unique<PdmHybridPlanner>(model_, spec_.correction_horizon, spec_.closed);
}

std::vector<ScenarioResult> evaluate(
  const std::vector<Scenario> & scenarios, const PlannerFactory & factory, const EvalOptions & options)
{
  std::vector<ScenarioResult> results(scenarios.size());
  parallel_for(scenarios.size(), options.jobs, [&](std::size_t i) {
    const Scenario & sc = scenarios[i];
    ScenarioResult & r = results[i];
    r.scores.scenario_id = sc.id;
    double runtime_sum = 0.0;
    std::size_t runtime_n = 0;
    auto add_runtime = [&](const std::vector<double> & v) {
      for (double x : v) {
        runtime_sum += x;
        ++runtime_n;
      }
    };
    auto note_failure = [&](const std::string & mode, const std::string & error) {
      if (!r.failed) {
        r.error = mode + ": " + error;
      }
      r.failed = true;
    };
    if (contains(options.modes, "open_loop")) {
      auto planner = factory.make();
      const OpenLoopLog log = run_open_loop(sc, *planner, options.timing);
      add_runtime(log.runtime_ms);
      if (log.aborted) {
        note_failure("open_loop", log.error);
      }
      r.open_loop = score_open_loop(log, sc);
      r.scores.ols = r.open_loop.ols;
    }
    EngineOptions eng;
    eng.timing = options.timing;
    for (SimMode mode : {SimMode::non_reactive, SimMode::reactive}) {
      const std::string name = mode == SimMode::reactive ? "closed_r" : "closed_nr";
      if (!contains(options.modes, name)) {
        continue;
      }
      auto planner = factory.make();
      RolloutLog log = run_closed_loop(sc, *planner, mode, eng);
      add_runtime(log.runtime_ms);
      if (log.aborted) {
        note_failure(name, log.error);
      }
      const ClsReport rep = score_closed_loop(log, sc);
      if (mode == SimMode::reactive) {
        r.closed_r = rep;
        r.scores.cls_r = rep.cls;
      } else {
        r.closed_nr = rep;
        r.scores.cls_nr = rep.cls;
      }
      if (options.keep_rollouts) {
        (mode == SimMode::reactive ? r.rollout_r : r.rollout_nr) = std::move(log);
      }
    }
    r.scores.runtime_ms = runtime_n > 0 ? runtime_sum / static_cast<double>(runtime_n) : 0.0;
  });
  return results;
}

std::string scores_csv(const std::vector<ScenarioResult> & results)
{
  std::string out = "scenario_id,cls_r,cls_nr,ols,runtime_ms\n";
  for (const auto & r : results) {
    const ScenarioScores & s = r.scores;
    out += s.scenario_id + "," + fixed(s.cls_r) + "," + fixed(s.cls_nr) + "," + fixed(s.ols) + "," +
           fixed(s.runtime_ms) + "\n";
  }
  return out;
}

namespace {

std::vector<ScenarioScores> scores_of(const std::vector<ScenarioResult> & results)
{
  std::vector<ScenarioScores> s;
  for (const auto & r : results) {
    s.push_back(r.scores);
  }
  return s;
}

// Rounded to fixed decimals so the text is stable across formatting paths.
json row_json(const BenchmarkRow & row)
{
  auto r6 = [](double v) { return std::round(v * 1e6) / 1e6; };
  return {{"cls_r", r6(row.cls_r)}, {"cls_nr", r6(row.cls_nr)}, {"ols", r6(row.ols)}, {"overall", r6(row.overall)},
    {"runtime_ms", r6(row.runtime_ms)}, {"scenarios", row.scenarios}};
}

}  // namespace

std::string summary_json(
  const std::string & planner, const std::vector<ScenarioResult> & results, const std::vector<std::string> & modes)
{
  const auto all = scores_of(results);
  json doc;
  doc["schema_version"] = 1;
  doc["planner"] = planner;
  doc["modes"] = modes;
  doc["aggregate"] = row_json(aggregate(all));
  std::map<std::string, std::vector<ScenarioScores>> by_template;
  for (const auto & s : all) {
    by_template[template_of(s.scenario_id)].push_back(s);
  }
  json per = json::object();
  for (const auto & [name, rows] : by_template) {
    per[name] = row_json(aggregate(rows));
  }
  doc["templates"] = per;
  json failures = json::array();
  for (const auto & r : results) {
    if (r.failed) {
      failures.push_back({{"scenario_id", r.scores.scenario_id}, {"error", r.error}});
    }
  }
  doc["failures"] = failures;
  return doc.dump(2) + "\n";
}

std::uint64_t fnv1a(const std::string & data)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

int cmd_generate(const BenchConfig & cfg, const LogSink & log)
{
  cfg.validate();
  if (cfg.scenario_dir.empty()) {
    throw ConfigError("generate needs --scenario-dir");
  }
  const std::vector<Scenario> scenarios = generate_benchmark(cfg);
  json manifest;
  manifest["schema_version"] = 1;
  manifest["seed"] = cfg.seed;
  manifest["templates"] = cfg.templates.empty() ? scenario_templates() : cfg.templates;
  manifest["seeds_per_template"] = cfg.seeds_per_template;
  json entries = json::array();
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const Scenario & sc = scenarios[i];
    const std::string text = serialize_scenario(sc);
    const std::string file = sc.id + ".json";
    write_text_file(cfg.scenario_dir / file, text);
    entries.push_back({{"id", sc.id}, {"template", template_of(sc.id)},
      {"seed", scenario_seed(cfg.seed, static_cast<int>(i % static_cast<std::size_t>(cfg.seeds_per_template)))},
      {"file", file}, {"fnv1a", hex64(fnv1a(text))}});
  }
  manifest["scenarios"] = entries;
  emit(log, "wrote " + std::to_string(scenarios.size()) + " scenarios to " + cfg.scenario_dir.string());
  if (cfg.write_dataset) {
    std::vector<Dataset> parts(scenarios.size());
    parallel_for(scenarios.size(), cfg.jobs, [&](std::size_t i) {
      parts[i] = build_dataset({scenarios[i]}, true, cfg.planner.closed);
    });
    Dataset all;
    for (auto & p : parts) {
      all.features.insert(all.features.end(), p.features.begin(), p.features.end());
      all.targets.insert(all.targets.end(), p.targets.begin(), p.targets.end());
      all.closed.insert(all.closed.end(), p.closed.begin(), p.closed.end());
      all.scenario_ids.insert(all.scenario_ids.end(), p.scenario_ids.begin(), p.scenario_ids.end());
    }
    const fs::path path = dataset_path(cfg);
    save_dataset(all, path.string());
    manifest["dataset"] = {{"file", path.filename().string()}, {"records", all.size()},
      {"fnv1a", hex64(fnv1a(read_text_file(path)))}};
    emit(log, "wrote dataset with " + std::to_string(all.size()) + " records to " + path.string());
  }
  write_text_file(cfg.scenario_dir / "manifest.json", manifest.dump(2) + "\n");
  return kExitOk;
}

namespace {

// Running minimum of the loss curve.
std::vector<double> monotone_curve(const std::vector<double> & v)
{
  std::vector<double> out;
  double best = std::numeric_limits<double>::infinity();
  for (double x : v) {
    best = std::min(best, x);
    out.push_back(best);
  }
  return out;
}

json train_report_json(const TrainConfig & t, const TrainReport & rep, std::size_t records)
{
  json j;
  j["schema_version"] = 1;
  j["kind"] = to_string(t.kind);
  j["centerline"] = to_string(t.features.centerline);
  j["history"] = t.features.history;
  j["hidden"] = t.hidden;
  j["epochs"] = t.epochs;
  j["batch"] = t.batch;
  j["learning_rate"] = t.adam.learning_rate;
  j["seed"] = t.seed;
  j["records"] = records;
  j["diverged"] = rep.diverged;
  j["epoch_loss"] = rep.epoch_loss;
  j["smoothed_loss"] = monotone_curve(rep.epoch_loss);
  return j;
}

void write_loss_plot(const fs::path & path, const TrainReport & rep)
{
  std::vector<std::pair<double, double>> raw;
  std::vector<std::pair<double, double>> smooth;
  const auto mono = monotone_curve(rep.epoch_loss);
  for (std::size_t i = 0; i < rep.epoch_loss.size(); ++i) {
    raw.emplace_back(static_cast<double>(i + 1), rep.epoch_loss[i]);
    smooth.emplace_back(static_cast<double>(i + 1), mono[i]);
  }
  write_text_file(path, svg_line_plot("Training loss", "epoch", "mean L1", {{"epoch", raw}, {"running min", smooth}}));
}

}  // namespace

int cmd_train(const BenchConfig & cfg, const LogSink & log)
{
  const fs::path data_path = dataset_path(cfg);
  Dataset data;
  try {
    data = load_dataset(data_path.string());
  } catch (const ParseError & ex) {
    throw ConfigError(ex.what());
  }
  TrainConfig t = cfg.train;
  t.seed = cfg.seed;
  const fs::path ckpt = cfg.checkpoint_out.empty() ? cfg.output_dir / "model.ckpt" : cfg.checkpoint_out;
  const fs::path report_path = ckpt.parent_path() / (ckpt.stem().string() + ".train.json");
  const fs::path plot_path = ckpt.parent_path() / (ckpt.stem().string() + ".loss.svg");
  TrainReport rep;
  emit(log, "training " + std::string(to_string(t.kind)) + " model on " + std::to_string(data.size()) + " records");
  try {
    const LearnedModel model = train_model(data, t, &rep, [&](int epoch, double loss) {
      if (epoch == 1 || epoch % 10 == 0 || epoch == t.epochs) {
        emit(log, "epoch " + std::to_string(epoch) + " loss " + fixed(loss));
      }
    });
    save_checkpoint(model, ckpt.string());
  } catch (const InvariantError & ex) {
    write_text_file(report_path, train_report_json(t, rep, data.size()).dump(2) + "\n");
    emit(log, std::string("training failed: ") + ex.what());
    return kExitPartial;
  }
  write_text_file(report_path, train_report_json(t, rep, data.size()).dump(2) + "\n");
  write_loss_plot(plot_path, rep);
  emit(log, "wrote " + ckpt.string());
  return kExitOk;
}

namespace {

EvalOptions eval_options(const BenchConfig & cfg)
{
  EvalOptions o;
  o.modes = cfg.modes;
  o.jobs = cfg.jobs;
  o.timing = cfg.timing;
  o.keep_rollouts = cfg.write_rollouts;
  return o;
}

}  // namespace

int cmd_eval(const BenchConfig & cfg, const LogSink & log)
{
  cfg.validate();
  const std::vector<Scenario> scenarios = benchmark_scenarios(cfg);
  if (scenarios.empty()) {
    throw ConfigError("no scenarios to evaluate");
  }
  const PlannerFactory factory(cfg.planner);
  emit(log, "evaluating " + cfg.planner.kind + " on " + std::to_string(scenarios.size()) + " scenarios");
  const auto results = evaluate(scenarios, factory, eval_options(cfg));
  write_text_file(cfg.output_dir / "scores.csv", scores_csv(results));
  write_text_file(cfg.output_dir / "summary.json", summary_json(cfg.planner.kind, results, cfg.modes));
  std::size_t failures = 0;
  for (const auto & r : results) {
    if (cfg.write_rollouts) {
      if (!r.rollout_nr.states.empty()) {
        write_text_file(cfg.output_dir / "rollouts" / (r.scores.scenario_id + ".closed_nr.json"), serialize_rollout(r.rollout_nr));
      }
      if (!r.rollout_r.states.empty()) {
        write_text_file(cfg.output_dir / "rollouts" / (r.scores.scenario_id + ".closed_r.json"), serialize_rollout(r.rollout_r));
      }
    }
    if (r.failed) {
      ++failures;
      emit(log, "scenario " + r.scores.scenario_id + " failed: " + r.error);
    }
  }
  const BenchmarkRow row = aggregate(scores_of(results));
  emit(log, "CLS-R " + fixed(row.cls_r, 2) + "  CLS-NR " + fixed(row.cls_nr, 2) + "  OLS " + fixed(row.ols, 2) +
              "  overall " + fixed(row.overall, 2));
  return failures > 0 ? kExitPartial : kExitOk;
}

std::string ablation_markdown(const std::string & suite, const std::vector<AblationRow> & rows)
{
  std::string out = "### " + suite + "\n\n| Variant | CLS-R | CLS-NR | OLS | Overall | Runtime [ms] |\n";
  out += "|---|---:|---:|---:|---:|---:|\n";
  for (const auto & r : rows) {
    out += "| " + r.label + " | " + fixed(r.row.cls_r, 1) + " | " + fixed(r.row.cls_nr, 1) + " | " +
           fixed(r.row.ols, 1) + " | " + fixed(r.row.overall, 1) + " | " + fixed(r.row.runtime_ms, 2) + " |\n";
  }
  return out;
}

namespace {

std::string label_for_c(double c)
{
  return "C=" + fixed(c, 1) + "s";
}

}  // namespace

int cmd_ablate(const BenchConfig & cfg, const std::string & suite, const LogSink & log)
{
  cfg.validate();
  if (!contains(ablation_suites(), suite)) {
    throw ConfigError("unknown ablation suite '" + suite + "'");
  }
  const std::vector<Scenario> scenarios = benchmark_scenarios(cfg);
  if (scenarios.empty()) {
    throw ConfigError("no scenarios to evaluate");
  }
  std::vector<std::pair<std::string, PlannerSpec>> variants;
  std::vector<double> xs;
  if (suite == "hybrid_C") {
    if (cfg.planner.checkpoint.empty() || !fs::exists(cfg.planner.checkpoint)) {
      throw ConfigError("hybrid_C needs an offset checkpoint (--checkpoint)");
    }
    PlannerSpec closed = cfg.planner;
    closed.kind = "pdm_closed";
    variants.emplace_back("PDM-Closed", closed);
    for (double c : cfg.correction_horizons) {
      PlannerSpec s = cfg.planner;
      s.kind = "pdm_hybrid";
      s.correction_horizon = c;
      variants.emplace_back(label_for_c(c), s);
      xs.push_back(c);
    }
  } else if (suite == "closed_components") {
    PlannerSpec base = cfg.planner;
    base.kind = "pdm_closed";
    variants.emplace_back("Base", base);
    PlannerSpec no_lat = base;
    no_lat.closed.lateral_offsets = {0.0};
    variants.emplace_back("No lateral offsets", no_lat);
    PlannerSpec no_lon = base;
    no_lon.closed.speed_fractions = {1.0};
    variants.emplace_back("No longitudinal variety", no_lon);
    PlannerSpec no_cast = base;
    no_cast.closed.forecasting = false;
    variants.emplace_back("No forecasting", no_cast);
  } else if (suite == "idm_accel") {
    for (double a : {1.0, 0.1}) {
      PlannerSpec s = cfg.planner;
      s.kind = "idm";
      s.idm.accel = a;
      variants.emplace_back("IDM a=" + fixed(a, 1), s);
    }
  } else {
    const fs::path data_path = dataset_path(cfg);
    Dataset data;
    try {
      data = load_dataset(data_path.string());
    } catch (const ParseError & ex) {
      throw ConfigError(ex.what());
    }
    struct Variant {
      std::string label;
      std::string file;
      FeatureSelection sel;
      int hidden;
    };
    const std::vector<Variant> open_variants{
      {"Full inputs", "full", {CenterlineInput::full, true}, 512},
      {"No centerline", "no_centerline", {CenterlineInput::none, true}, 512},
      {"No history", "no_history", {CenterlineInput::full, false}, 512},
      {"Shorter centerline (30 m)", "shorter", {CenterlineInput::shorter, true}, 512},
      {"Coarser centerline (10 m)", "coarser", {CenterlineInput::coarser, true}, 512},
      {"Smaller hidden (256)", "hidden256", {CenterlineInput::full, true}, 256},
    };
    for (const auto & v : open_variants) {
      TrainConfig t = cfg.train;
      t.kind = ModelKind::open;
      t.features = v.sel;
      t.hidden = v.hidden;
      t.seed = cfg.seed;
      emit(log, "training " + v.label);
      const LearnedModel model = train_model(data, t);
      const fs::path ckpt = cfg.output_dir / "open_inputs" / (v.file + ".ckpt");
      fs::create_directories(ckpt.parent_path());
      save_checkpoint(model, ckpt.string());
      PlannerSpec s = cfg.planner;
      s.kind = "pdm_open";
      s.checkpoint = ckpt.string();
      variants.emplace_back(v.label, s);
    }
  }

  EvalOptions opts = eval_options(cfg);
  opts.keep_rollouts = false;
  std::vector<AblationRow> rows;
  json jrows = json::array();
  for (std::size_t i = 0; i < variants.size(); ++i) {
    const auto & [label, spec] = variants[i];
    emit(log, "running " + label);
    const auto results = evaluate(scenarios, PlannerFactory(spec), opts);
    AblationRow row{label, aggregate(scores_of(results)), 0};
    for (const auto & r : results) {
      row.failures += r.failed ? 1 : 0;
    }
    rows.push_back(row);
    json jr = row_json(row.row);
    jr["label"] = label;
    jr["failures"] = row.failures;
    if (suite == "hybrid_C" && i > 0) {
      jr["correction_horizon"] = xs[i - 1];
    }
    jrows.push_back(jr);
  }
  const std::string md = ablation_markdown(suite, rows);
  write_text_file(cfg.output_dir / ("ablation_" + suite + ".md"), md);
  write_text_file(cfg.output_dir / ("ablation_" + suite + ".json"),
    json{{"schema_version", 1}, {"suite", suite}, {"rows", jrows}}.dump(2) + "\n");
  if (suite == "hybrid_C") {
    std::vector<std::pair<double, double>> r;
    std::vector<std::pair<double, double>> nr;
    std::vector<std::pair<double, double>> ols;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      r.emplace_back(xs[i - 1], rows[i].row.cls_r);
      nr.emplace_back(xs[i - 1], rows[i].row.cls_nr);
      ols.emplace_back(xs[i - 1], rows[i].row.ols);
    }
    write_text_file(cfg.output_dir / "hybrid_C.svg",
      svg_line_plot("PDM-Hybrid correction horizon", "C [s]", "score", {{"CLS-R", r}, {"CLS-NR", nr}, {"OLS", ols}}));
  }
  emit(log, md);
  std::size_t failures = 0;
  for (const auto & r : rows) {
    failures += r.failures;
  }
  return failures > 0 ? kExitPartial : kExitOk;
}

int cmd_report(const BenchConfig & cfg, const LogSink & log)
{
  std::vector<fs::path> inputs = cfg.report_inputs;
  if (inputs.empty()) {
    if (!fs::is_directory(cfg.output_dir)) {
      throw ConfigError("output directory '" + cfg.output_dir.string() + "' does not exist");
    }
    for (const auto & entry : fs::recursive_directory_iterator(cfg.output_dir)) {
      const std::string name = entry.path().filename().string();
      if (entry.is_regular_file() &&
          (name == "summary.json" || (name.rfind("ablation_", 0) == 0 && entry.path().extension() == ".json")))
      {
        inputs.push_back(entry.path());
      }
    }
    std::sort(inputs.begin(), inputs.end());
  }
  if (inputs.empty()) {
    throw ConfigError("no summary or ablation files to report");
  }
  std::string md = "# Benchmark report\n\n";
  std::string board = "| Planner | Source | CLS-R | CLS-NR | OLS | Overall | Runtime [ms] |\n|---|---|---:|---:|---:|---:|---:|\n";
  std::vector<std::pair<std::string, std::pair<double, double>>> scatter;
  std::string ablations;
  std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> c_series;
  for (const auto & path : inputs) {
    json j;
    try {
      j = json::parse(read_text_file(path));
    } catch (const std::exception & ex) {
      throw ConfigError("cannot read report input '" + path.string() + "': " + ex.what());
    }
    if (j.contains("suite")) {
      std::vector<AblationRow> rows;
      std::vector<std::pair<double, double>> r;
      for (const auto & jr : j.at("rows")) {
        AblationRow row;
        row.label = jr.at("label").get<std::string>();
        row.row.cls_r = jr.at("cls_r").get<double>();
        row.row.cls_nr = jr.at("cls_nr").get<double>();
        row.row.ols = jr.at("ols").get<double>();
        row.row.overall = jr.at("overall").get<double>();
        row.row.runtime_ms = jr.at("runtime_ms").get<double>();
        rows.push_back(row);
        if (jr.contains("correction_horizon")) {
          r.emplace_back(jr.at("correction_horizon").get<double>(), row.row.cls_r);
        }
      }
      ablations += ablation_markdown(j.at("suite").get<std::string>(), rows) + "\n";
      if (!r.empty()) {
        c_series.emplace_back("CLS-R", r);
      }
    } else {
      const json & a = j.at("aggregate");
      const std::string planner = j.at("planner").get<std::string>();
      board += "| " + planner + " | " + path.parent_path().filename().string() + " | " +
               fixed(a.at("cls_r").get<double>(), 1) + " | " + fixed(a.at("cls_nr").get<double>(), 1) + " | " +
               fixed(a.at("ols").get<double>(), 1) + " | " + fixed(a.at("overall").get<double>(), 1) + " | " +
               fixed(a.at("runtime_ms").get<double>(), 2) + " |\n";
      scatter.push_back({planner, {a.at("ols").get<double>(), a.at("cls_r").get<double>()}});
    }
  }
  if (!scatter.empty()) {
    md += "## Planners\n\n" + board + "\n![OLS vs CLS-R](ols_vs_cls.svg)\n\n";
    write_text_file(cfg.output_dir / "ols_vs_cls.svg", svg_scatter("Open-loop vs closed-loop", "OLS", "CLS-R", scatter));
  }
  if (!ablations.empty()) {
    md += "## Ablations\n\n" + ablations;
  }
  if (!c_series.empty()) {
    write_text_file(cfg.output_dir / "score_vs_C.svg", svg_line_plot("Score vs correction horizon", "C [s]", "CLS-R", c_series));
    md += "![Score vs C](score_vs_C.svg)\n";
  }
  write_text_file(cfg.output_dir / "report.md", md);
  emit(log, "wrote " + (cfg.output_dir / "report.md").string());
  return kExitOk;
}

namespace {

struct Frame {
  double x0, x1, y0, y1;
  static constexpr double kLeft = 70, kRight = 590, kTop = 40, kBottom = 380;
  double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kRight - kLeft); }
  double py(double y) const { return kBottom - (y - y0) / (y1 - y0) * (kBottom - kTop); }
};

const char * kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape_xml(const std::string & s)
{
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

Frame make_frame(double x0, double x1, double y0, double y1)
{
  if (x1 - x0 < 1e-9) {
    x0 -= 1.0;
    x1 += 1.0;
  }
  if (y1 - y0 < 1e-9) {
    y0 -= 1.0;
    y1 += 1.0;
  }
  const double mx = 0.05 * (x1 - x0);
  const double my = 0.05 * (y1 - y0);
  return {x0 - mx, x1 + mx, y0 - my, y1 + my};
}

std::string svg_axes(const Frame & f, const std::string & title, const std::string & xl, const std::string & yl)
{
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"440\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"640\" height=\"440\" fill=\"white\"/>\n";
  s << "<text x=\"330\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape_xml(title) << "</text>\n";
  s << "<rect x=\"" << Frame::kLeft << "\" y=\"" << Frame::kTop << "\" width=\"" << Frame::kRight - Frame::kLeft
    << "\" height=\"" << Frame::kBottom - Frame::kTop << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    s << "<text x=\"" << fixed(f.px(x), 1) << "\" y=\"" << Frame::kBottom + 16 << "\" text-anchor=\"middle\">"
      << fixed(x, 2) << "</text>\n";
    s << "<text x=\"" << Frame::kLeft - 6 << "\" y=\"" << fixed(f.py(y) + 4, 1) << "\" text-anchor=\"end\">"
      << fixed(y, 1) << "</text>\n";
  }
  s << "<text x=\"330\" y=\"415\" text-anchor=\"middle\">" << escape_xml(xl) << "</text>\n";
  s << "<text x=\"16\" y=\"210\" text-anchor=\"middle\" transform=\"rotate(-90 16 210)\">" << escape_xml(yl)
    << "</text>\n";
  return s.str();
}

}  // namespace

std::string svg_line_plot(
  const std::string & title, const std::string & x_label, const std::string & y_label,
  const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>> & series)
{
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto & [name, pts] : series) {
    for (const auto & [x, y] : pts) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x0 > x1) {
    x0 = y0 = 0.0;
    x1 = y1 = 1.0;
  }
  const Frame f = make_frame(x0, x1, y0, y1);
  std::string out = svg_axes(f, title, x_label, y_label);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char * color = kColors[i % 6];
    std::string pts;
    for (const auto & [x, y] : series[i].second) {
      pts += fixed(f.px(x), 1) + "," + fixed(f.py(y), 1) + " ";
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"" + pts + "\"/>\n";
    out += "<text x=\"" + fixed(Frame::kRight - 120, 0) + "\" y=\"" + fixed(Frame::kTop + 18 + 16 * static_cast<double>(i), 0) +
           "\" fill=\"" + color + "\">" + escape_xml(series[i].first) + "</text>\n";
  }
  return out + "</svg>\n";
}

std::string svg_scatter(
  const std::string & title, const std::string & x_label, const std::string & y_label,
  const std::vector<std::pair<std::string, std::pair<double, double>>> & points)
{
  const Frame f{0.0, 100.0, 0.0, 100.0};
  std::string out = svg_axes(f, title, x_label, y_label);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto & [name, p] = points[i];
    const char * color = kColors[i % 6];
    out += "<circle cx=\"" + fixed(f.px(p.first), 1) + "\" cy=\"" + fixed(f.py(p.second), 1) + "\" r=\"5\" fill=\"" +
           color + "\"/>\n";
    out += "<text x=\"" + fixed(f.px(p.first) + 8, 1) + "\" y=\"" + fixed(f.py(p.second) - 6, 1) + "\">" +
           escape_xml(name) + "</text>\n";
  }
  return out + "</svg>\n";
}

}  // namespace pdm
