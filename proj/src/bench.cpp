#include "ridge/bench.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "ridge/environment_io.hpp"
#include "ridge/rng.hpp"
#include "ridge/step_log.hpp"
#include "ridge/worldgen.hpp"

namespace ridge {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 6> kOutcomeNames = {"Success", "Rollover", "Stuck", "Timeout", "Fault",
                                                           "Boundary"};

}  // namespace

std::string_view to_string(Outcome o) { return kOutcomeNames[static_cast<std::size_t>(o)]; }

Outcome parse_outcome(std::string_view name) {
  for (std::size_t i = 0; i < kOutcomeNames.size(); ++i) {
    if (kOutcomeNames[i] == name) return static_cast<Outcome>(i);
  }
  throw FormatError(fmt::format("unknown outcome '{}'", name));
}

// ---------------------------------------------------------------------------
// Episode configuration

void EpisodeConfig::validate() const {
  if (!(timeout > 0.0)) throw ConfigError("episode: timeout must be positive");
  if (!(goal_radius > 0.0)) throw ConfigError("episode: goal_radius must be positive");
  if (!(control_rate > 0.0)) throw ConfigError("episode: control_rate must be positive");
  if (!(physics_dt > 0.0) || physics_dt > kMaxDt) throw ConfigError("episode: physics_dt must be in (0, 0.02]");
  if (!(settle_time >= 0.0) || !(stuck_window > 0.0) || !(stuck_epsilon > 0.0)) {
    throw ConfigError("episode: settle_time >= 0, stuck_window > 0 and stuck_epsilon > 0 required");
  }
  const double ratio = 1.0 / (control_rate * physics_dt);
  if (std::abs(ratio - std::round(ratio)) > 1e-6) {
    throw ConfigError("episode: control period must be a whole number of physics steps");
  }
}

EpisodeConfig EpisodeConfig::scaled(double s) const {
  EpisodeConfig c = *this;
  const double ts = std::sqrt(s);
  c.timeout *= ts;
  c.goal_radius *= s;
  c.stuck_window *= ts;
  c.stuck_epsilon *= s;
  c.occupancy_inflation *= s;
  return c;
}

int EpisodeConfig::substeps() const { return static_cast<int>(std::lround(1.0 / (control_rate * physics_dt))); }

json EpisodeConfig::to_json() const {
  return {{"timeout", timeout},
          {"goal_radius", goal_radius},
          {"control_rate", control_rate},
          {"physics_dt", physics_dt},
          {"settle_time", settle_time},
          {"rollover_threshold", rollover_threshold},
          {"stuck_window", stuck_window},
          {"stuck_epsilon", stuck_epsilon},
          {"occupancy_inflation", occupancy_inflation},
          {"log_every_step", log_every_step}};
}

EpisodeConfig EpisodeConfig::from_json(const json& j) {
  EpisodeConfig c;
  try {
    c.timeout = j.value("timeout", c.timeout);
    c.goal_radius = j.value("goal_radius", c.goal_radius);
    c.control_rate = j.value("control_rate", c.control_rate);
    c.physics_dt = j.value("physics_dt", c.physics_dt);
    c.settle_time = j.value("settle_time", c.settle_time);
    c.rollover_threshold = j.value("rollover_threshold", c.rollover_threshold);
    c.stuck_window = j.value("stuck_window", c.stuck_window);
    c.stuck_epsilon = j.value("stuck_epsilon", c.stuck_epsilon);
    c.occupancy_inflation = j.value("occupancy_inflation", c.occupancy_inflation);
    c.log_every_step = j.value("log_every_step", c.log_every_step);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("episode config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Episodes

ControllerInput make_controller_input(const EnvironmentSpec& env, const NavigationTask& task,
                                      const VehicleState& state, const OccupancyGrid& occupancy,
                                      int window_half_cells) {
  ControllerInput in;
  in.vehicle_state = state;
  in.elevation_window = extract_elevation_window(env.heightfield, state.planar_position(), window_half_cells);
  in.occupancy = &occupancy;
  in.global_path = task.global_path;
  in.goal = task.goal;
  return in;
}

Simulator settle_vehicle(const EnvironmentSpec& env, const VehicleParams& params, Vec2 xy, double yaw,
                         const EpisodeConfig& cfg) {
  Simulator sim(env, params, spawn_state(params, env, {}, xy, yaw));
  // Parked while settling, so slopes do not roll the vehicle away before the clock starts.
  const auto steps = static_cast<int>(std::lround(cfg.settle_time / cfg.physics_dt));
  for (int i = 0; i < steps; ++i) sim.step(Action{0.0, 0.0, 1.0}, cfg.physics_dt);
  return sim;
}

EpisodeResult run_episode(const EnvironmentSpec& env, int task_id, Controller& controller,
                          const VehicleParams& vehicle, const EpisodeConfig& cfg, std::ostream* log) {
  cfg.validate();
  if (task_id < 0 || task_id >= static_cast<int>(env.tasks.size())) {
    throw ConfigError(fmt::format("task_id {} outside 0..{}", task_id, env.tasks.size() - 1));
  }
  const NavigationTask& task = env.tasks[static_cast<std::size_t>(task_id)];
  EpisodeResult r;
  r.env_seed = env.seed;
  r.task_id = task_id;
  r.controller_id = std::string(controller.id());
  r.elevation_level = env.elevation_level();

  const OccupancyGrid occupancy = rasterize_obstacles(env.heightfield, env.obstacles.obstacles, cfg.occupancy_inflation);
  std::optional<Simulator> sim;
  try {
    sim.emplace(settle_vehicle(env, vehicle, task.start, task.start_yaw, cfg));
  } catch (const SimulationFault& f) {
    r.outcome = Outcome::Fault;
    r.message = std::string("settling: ") + f.what();
    return r;
  }
  controller.reset();

  const bool logging = log != nullptr;
  if (logging) {
    json header = {{"type", "header"},
                   {"format_version", kStepLogVersion},
                   {"env_seed", env.seed},
                   {"generator", env.generator_config},
                   {"task_id", task_id},
                   {"controller", r.controller_id},
                   {"vehicle", vehicle.exact_json()},
                   {"episode", cfg.to_json()}};
    *log << header.dump() << '\n';
    *log << json{{"type", "initial"}, {"settled", true}, {"state", state_to_json(sim->state())}}.dump() << '\n';
  }

  const int substeps = cfg.substeps();
  const double period = substeps * cfg.physics_dt;
  std::deque<PoseSample> history{{0.0, sim->state().planar_position()}};
  bool done = false;
  for (std::size_t k = 0; !done; ++k) {
    const VehicleState& s = sim->state();
    const Action a = controller.act(make_controller_input(env, task, s, occupancy, kControllerWindowHalfCells)).clamped();
    try {
      for (int i = 0; i < substeps; ++i) sim->step(a, cfg.physics_dt);
    } catch (const SimulationFault& f) {
      r.outcome = Outcome::Fault;
      r.message = f.what();
      r.duration = static_cast<double>(k) * period;
      break;
    }
    const double elapsed = static_cast<double>(k + 1) * period;
    const VehicleState& now = sim->state();
    r.roll_series.push_back(now.roll());
    r.pitch_series.push_back(now.pitch());
    r.action_log.push_back(a);
    r.trajectory.push_back({now.position, now.orientation});
    if (logging && cfg.log_every_step) *log << step_record_json(k, elapsed, now, a).dump() << '\n';
    r.duration = elapsed;

    history.push_back({elapsed, now.planar_position()});
    while (history.size() > 2 && elapsed - history[1].t >= cfg.stuck_window) history.pop_front();

    done = true;
    if ((now.planar_position() - task.goal).norm() <= cfg.goal_radius) {
      r.outcome = Outcome::Success;
      r.traversal_time = elapsed;
    } else if (detect_rollover(now, cfg.rollover_threshold)) {
      r.outcome = Outcome::Rollover;
    } else if (detect_stuck(history, cfg.stuck_window, cfg.stuck_epsilon)) {
      r.outcome = Outcome::Stuck;
    } else if (elapsed >= cfg.timeout - 1e-9) {
      r.outcome = Outcome::Timeout;
    } else {
      done = false;
    }
  }
  if (logging) {
    json tail = {{"type", "outcome"}, {"outcome", std::string(to_string(r.outcome))}, {"t", r.duration},
                 {"steps", r.action_log.size()}};
    if (r.traversal_time) tail["traversal_time"] = *r.traversal_time;
    if (!r.message.empty()) tail["message"] = r.message;
    *log << tail.dump() << '\n';
  }
  return r;
}

// ---------------------------------------------------------------------------
// Metrics

SummaryStats summarize(const std::vector<double>& values) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  s.max = values.front();
  for (double v : values) {
    sum += v;
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(values.size()));
  return s;
}

namespace {

GroupMetrics group_metrics(const std::vector<const EpisodeResult*>& group) {
  GroupMetrics g;
  g.trials = group.size();
  std::vector<double> times, roll, pitch;
  for (const auto* r : group) {
    ++g.outcomes[std::string(to_string(r->outcome))];
    if (r->outcome == Outcome::Success) {
      ++g.successes;
      if (r->traversal_time) times.push_back(*r->traversal_time);
    }
    for (double v : r->roll_series) roll.push_back(std::abs(v));
    for (double v : r->pitch_series) pitch.push_back(std::abs(v));
  }
  g.success_rate = g.trials ? static_cast<double>(g.successes) / static_cast<double>(g.trials) : 0.0;
  g.traversal_time = summarize(times);
  g.roll = summarize(roll);
  g.pitch = summarize(pitch);
  return g;
}

}  // namespace

MetricsReport compute_metrics(const std::vector<EpisodeResult>& results) {
  if (results.empty()) throw Error("compute_metrics: no episode results");
  std::vector<const EpisodeResult*> all;
  std::map<ElevationLevel, std::vector<const EpisodeResult*>> by_level;
  for (const auto& r : results) {
    all.push_back(&r);
    by_level[r.elevation_level].push_back(&r);
  }
  MetricsReport report;
  report.overall = group_metrics(all);
  for (const auto& [level, group] : by_level) report.by_level[level] = group_metrics(group);
  return report;
}

json to_json(const GroupMetrics& g) {
  auto stats = [](const SummaryStats& s) {
    return json{{"mean", s.mean}, {"std", s.std}, {"max", s.max}, {"count", s.count}};
  };
  return {{"trials", g.trials},
          {"successes", g.successes},
          {"success_rate", g.success_rate},
          {"traversal_time", stats(g.traversal_time)},
          {"roll", stats(g.roll)},
          {"pitch", stats(g.pitch)},
          {"outcomes", g.outcomes}};
}

json to_json(const MetricsReport& r) {
  json levels = json::object();
  for (const auto& [level, g] : r.by_level) levels[std::string(to_string(level))] = to_json(g);
  return {{"overall", to_json(r.overall)}, {"by_level", levels}};
}

// ---------------------------------------------------------------------------
// Benchmark

BenchmarkRun run_benchmark(const std::vector<EnvironmentSpec>& envs, const BenchmarkOptions& options) {
  std::vector<int> tasks = options.tasks;
  if (tasks.empty()) {
    for (int t = 0; t < kTaskCount; ++t) tasks.push_back(t);
  }
  for (int t : tasks) {
    if (t < 0 || t >= kTaskCount) throw ConfigError(fmt::format("task id {} outside 0..{}", t, kTaskCount - 1));
  }
  options.episode.validate();
  // Fail on a bad controller name before any episode runs.
  if (!envs.empty()) {
    ControllerContext probe{vehicle_preset(options.vehicle, envs.front().scale), 1.0, 0.1, 0};
    make_controller(options.controller, probe, options.controller_params);
  }
  if (options.log_dir) std::filesystem::create_directories(*options.log_dir);

  struct Item {
    std::size_t env;
    int task;
  };
  std::vector<Item> items;
  for (std::size_t e = 0; e < envs.size(); ++e) {
    for (int t : tasks) items.push_back({e, t});
  }

  BenchmarkRun run;
  run.results.resize(items.size());
  const int threads = std::max(1, options.threads);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::size_t i = 0; i < items.size(); ++i) {
    const EnvironmentSpec& env = envs[items[i].env];
    const int task = items[i].task;
    EpisodeResult& out = run.results[i];
    try {
      const double s = scale_factor(env.scale);
      const VehicleParams vehicle = options.vehicle_file
                                        ? vehicle_preset(*options.vehicle_file, options.vehicle, env.scale)
                                        : vehicle_preset(options.vehicle, env.scale);
      const EpisodeConfig cfg = options.episode.scaled(s);
      ControllerContext ctx{vehicle, s, cfg.control_period(),
                            derive_seed(env.seed, "controller", static_cast<std::uint64_t>(task))};
      auto controller = make_controller(options.controller, ctx, options.controller_params);
      if (options.log_dir) {
        std::ofstream log(*options.log_dir / fmt::format("env{}_task{}_{}.jsonl", env.seed, task, options.controller));
        out = run_episode(env, task, *controller, vehicle, cfg, &log);
      } else {
        out = run_episode(env, task, *controller, vehicle, cfg, nullptr);
      }
    } catch (const std::exception& e) {
      out = {};
      out.outcome = Outcome::Fault;
      out.env_seed = env.seed;
      out.task_id = task;
      out.controller_id = options.controller;
      out.elevation_level = env.elevation_level();
      out.message = e.what();
    }
  }
  if (!run.results.empty()) run.report = compute_metrics(run.results);
  return run;
}

BenchmarkRun run_benchmark(const std::vector<std::filesystem::path>& env_dirs, const BenchmarkOptions& options) {
  std::vector<EnvironmentSpec> envs;
  std::vector<std::string> warnings;
  for (const auto& dir : env_dirs) {
    try {
      envs.push_back(read_environment(dir));
    } catch (const std::exception& e) {
      warnings.push_back(fmt::format("skipping {}: {}", dir.string(), e.what()));
      std::cerr << "warning: " << warnings.back() << '\n';
    }
  }
  if (envs.empty()) throw Error("no loadable environments");
  BenchmarkRun run = run_benchmark(envs, options);
  run.warnings = std::move(warnings);
  return run;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

double mean_abs(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s / static_cast<double>(v.size());
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

json episode_json(const EpisodeResult& r) {
  json j = {{"env_seed", r.env_seed},
            {"task_id", r.task_id},
            {"controller", r.controller_id},
            {"elevation_level", std::string(to_string(r.elevation_level))},
            {"outcome", std::string(to_string(r.outcome))},
            {"traversal_time", r.traversal_time ? json(*r.traversal_time) : json(nullptr)},
            {"duration", r.duration},
            {"steps", r.roll_series.size()},
            {"mean_abs_roll", mean_abs(r.roll_series)},
            {"mean_abs_pitch", mean_abs(r.pitch_series)},
            {"max_abs_roll", max_abs(r.roll_series)},
            {"max_abs_pitch", max_abs(r.pitch_series)}};
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

namespace {

constexpr std::string_view kEpisodeColumns[] = {"env_seed",      "task_id",        "controller",    "elevation_level",
                                                "outcome",       "traversal_time", "duration",      "steps",
                                                "mean_abs_roll", "mean_abs_pitch", "max_abs_roll",  "max_abs_pitch"};

std::string csv_cell(const json& v) {
  if (v.is_null()) return {};
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return fmt::format("{}", v.get<double>());
  return v.dump();
}

void write_episode_rows(const json& episodes, std::ostream& out) {
  out << fmt::format("{}\n", fmt::join(kEpisodeColumns, ","));
  for (const auto& e : episodes) {
    std::vector<std::string> cells;
    for (auto col : kEpisodeColumns) cells.push_back(csv_cell(e.value(std::string(col), json(nullptr))));
    out << fmt::format("{}\n", fmt::join(cells, ","));
  }
}

json summary_row(std::string_view group, const json& g) {
  json row = {{"group", group}, {"trials", g.at("trials")}, {"successes", g.at("successes")},
              {"success_rate", g.at("success_rate")}};
  for (const char* metric : {"traversal_time", "roll", "pitch"}) {
    for (const char* stat : {"mean", "std", "max"}) {
      row[fmt::format("{}_{}", metric, stat)] = g.at(metric).at(stat);
    }
  }
  return row;
}

std::vector<json> summary_rows(const json& metrics) {
  std::vector<json> rows{summary_row("all", metrics.at("overall"))};
  for (auto level : kElevationLevels) {
    const std::string name(to_string(level));
    if (metrics.at("by_level").contains(name)) rows.push_back(summary_row(name, metrics.at("by_level").at(name)));
  }
  return rows;
}

void write_summary_rows(const std::vector<json>& rows, std::ostream& out) {
  static const std::vector<std::string> columns = [] {
    std::vector<std::string> c{"group", "trials", "successes", "success_rate"};
    for (const char* metric : {"traversal_time", "roll", "pitch"}) {
      for (const char* stat : {"mean", "std", "max"}) c.push_back(fmt::format("{}_{}", metric, stat));
    }
    return c;
  }();
  out << fmt::format("{}\n", fmt::join(columns, ","));
  for (const auto& r : rows) {
    std::vector<std::string> cells;
    for (const auto& col : columns) cells.push_back(csv_cell(r.at(col)));
    out << fmt::format("{}\n", fmt::join(cells, ","));
  }
}

}  // namespace

void write_episode_csv(const std::vector<EpisodeResult>& results, std::ostream& out) {
  json episodes = json::array();
  for (const auto& r : results) episodes.push_back(episode_json(r));
  write_episode_rows(episodes, out);
}

void write_summary_csv(const MetricsReport& report, std::ostream& out) {
  write_summary_rows(summary_rows(to_json(report)), out);
}

void export_report(const json& report, std::string_view format, std::ostream& out) {
  try {
    if (format == "csv") {
      write_episode_rows(report.at("episodes"), out);
    } else if (format == "json") {
      out << json{{"summary", summary_rows(report.at("metrics"))}, {"episodes", report.at("episodes")}}.dump(2) << '\n';
    } else {
      throw ConfigError(fmt::format("unknown export format '{}' (expected csv|json)", format));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

json report_json(const BenchmarkRun& run, const BenchmarkOptions& options) {
  json episodes = json::array();
  for (const auto& r : run.results) episodes.push_back(episode_json(r));
  return {{"controller", options.controller},
          {"vehicle", options.vehicle},
          {"episode_config", options.episode.to_json()},
          {"trials", run.results.size()},
          {"metrics", to_json(run.report)},
          {"warnings", run.warnings},
          {"episodes", episodes}};
}

void write_reports(const BenchmarkRun& run, const BenchmarkOptions& options, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "report.json") << report_json(run, options).dump(2) << '\n';
  std::ofstream csv(dir / "episodes.csv");
  write_episode_csv(run.results, csv);
  std::ofstream summary(dir / "summary.csv");
  write_summary_csv(run.report, summary);
  if (!csv || !summary) throw Error("cannot write reports under " + dir.string());
}

// ---------------------------------------------------------------------------
// Replay

namespace {

double pose_divergence(const VehicleState& s, const json& rec) {
  const auto& p = rec.at("position");
  const auto& q = rec.at("quaternion");
  double d = 0.0;
  for (int i = 0; i < 3; ++i) d = std::max(d, std::abs(s.position[i] - p.at(i).get<double>()));
  const double qs[4] = {s.orientation.w(), s.orientation.x(), s.orientation.y(), s.orientation.z()};
  for (int i = 0; i < 4; ++i) d = std::max(d, std::abs(qs[i] - q.at(i).get<double>()));
  return d;
}

}  // namespace

ReplayVerdict replay_log(std::istream& in, const EnvironmentSpec& env) {
  const auto lines = read_log_lines(in);
  if (lines.empty() || lines[0].value("type", "") != "header") throw FormatError("step log must start with a header");
  const json& header = lines[0];
  VehicleParams vehicle;
  EpisodeConfig cfg;
  try {
    vehicle = VehicleParams::from_exact_json(header.at("vehicle"));
    cfg = EpisodeConfig::from_json(header.at("episode"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("log header: ") + e.what());
  }
  const int substeps = cfg.substeps();

  ReplayVerdict v;
  std::optional<Simulator> sim;
  auto diverge = [&](std::size_t step, double d) {
    if (d > 0.0 && !v.first_divergent_step) v.first_divergent_step = step;
    v.max_divergence = std::max(v.max_divergence, d);
  };
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const json& rec = lines[i];
    const std::string type = rec.value("type", "");
    if (type == "initial") {
      const VehicleState logged = state_from_json(rec.at("state"));
      if (rec.value("settled", false)) {
        // Episode logs start after the parked settle phase; redo it and compare.
        const int task_id = rec.value("task_id", header.value("task_id", -1));
        if (task_id < 0 || task_id >= static_cast<int>(env.tasks.size())) throw FormatError("log task_id out of range");
        const auto& task = env.tasks[static_cast<std::size_t>(task_id)];
        sim.emplace(settle_vehicle(env, vehicle, task.start, task.start_yaw, cfg));
        if (!(sim->state() == logged)) {
          diverge(v.steps, std::max((sim->state().position - logged.position).cwiseAbs().maxCoeff(), 1e-300));
          v.message = "settled start state differs from the logged initial state";
        }
      } else {
        sim.emplace(env, vehicle, logged);
      }
    } else if (type == "step") {
      if (!sim) throw FormatError(fmt::format("line {}: step before any initial record", i + 1));
      const Action a = action_from_json(rec.at("action"));
      const auto step = rec.at("step").get<std::size_t>();
      try {
        for (int k = 0; k < substeps; ++k) sim->step(a, cfg.physics_dt);
      } catch (const SimulationFault& f) {
        v.message = std::string("replay fault: ") + f.what();
        diverge(step, std::numeric_limits<double>::infinity());
        break;
      }
      diverge(step, pose_divergence(sim->state(), rec));
      ++v.steps;
    }
  }
  v.match = v.max_divergence == 0.0;
  if (v.match) {
    v.message = fmt::format("replayed {} steps, divergence 0", v.steps);
  } else if (v.message.empty()) {
    v.message = fmt::format("replay mismatch: max divergence {:.3g}, first at step {}", v.max_divergence,
                            *v.first_divergent_step);
  }
  return v;
}

ReplayVerdict replay_log(std::istream& in) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string first;
  {
    std::istringstream peek(buffer.str());
    std::getline(peek, first);
  }
  json header;
  try {
    header = json::parse(first);
  } catch (const json::exception& e) {
    throw FormatError(std::string("line 1: ") + e.what());
  }
  if (!header.contains("generator") || header["generator"].empty()) {
    throw FormatError("log header carries no generator record; pass the environment explicitly");
  }
  const EnvironmentSpec env = generate_environment(WorldGenConfig::from_json(header["generator"]));
  if (env.seed != header.at("env_seed").get<std::uint64_t>()) throw FormatError("generator seed does not match env_seed");
  std::istringstream again(buffer.str());
  return replay_log(again, env);
}

}  // namespace ridge
