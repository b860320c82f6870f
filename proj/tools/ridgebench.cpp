// ridgebench: generate environment suites, run controllers, replay logs,
// record datasets and serve the reset/step protocol.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>

#include "ridge/bench.hpp"
#include "ridge/datasets.hpp"
#include "ridge/environment_io.hpp"
#include "ridge/worldgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ridge;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Globals {
  std::uint64_t seed = 0;
  std::string scale = "full";
  std::string out;
  int threads = 1;
  std::string config;
};

// Usage errors detected after parsing (bad values, unknown names).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const Globals& g) {
  if (g.config.empty()) return json::object();
  std::ifstream in(g.config);
  if (!in) throw UsageError("cannot open config " + g.config);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw UsageError("config " + g.config + " must hold a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    throw UsageError(fmt::format("config {}: {}", g.config, e.what()));
  }
}

json section(const json& cfg, const char* key) {
  return cfg.contains(key) ? cfg.at(key) : json::object();
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// "0..4", "1,3,7", "0..2,8" or "all".
std::vector<int> parse_tasks(const std::string& text) {
  std::vector<int> out;
  if (text.empty() || text == "all") return out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    try {
      const std::size_t dots = item.find("..");
      std::size_t used = 0;
      if (dots == std::string::npos) {
        out.push_back(std::stoi(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } else {
        const std::string a = item.substr(0, dots), b = item.substr(dots + 2);
        const int lo = std::stoi(a, &used);
        if (used != a.size()) throw std::invalid_argument(item);
        const int hi = std::stoi(b, &used);
        if (used != b.size() || hi < lo) throw std::invalid_argument(item);
        for (int t = lo; t <= hi; ++t) out.push_back(t);
      }
    } catch (const std::logic_error&) {
      throw UsageError(fmt::format("bad --tasks item '{}' (expected e.g. 0..4 or 1,3,7)", item));
    }
    pos = comma + 1;
  }
  for (int t : out) {
    if (t < 0 || t >= kTaskCount) throw UsageError(fmt::format("task id {} outside 0..{}", t, kTaskCount - 1));
  }
  return out;
}

EnvironmentSpec load_env(const std::string& dir) {
  if (!fs::is_directory(dir)) throw UsageError("no environment directory " + dir);
  return read_environment(dir);
}

std::vector<EnvironmentSpec> load_suite(const std::string& root) {
  if (!fs::is_directory(root)) throw UsageError("no environment directory " + root);
  std::vector<EnvironmentSpec> envs;
  if (fs::exists(fs::path(root) / "meta.json")) {
    envs.push_back(read_environment(root));
    return envs;
  }
  for (const auto& dir : list_environment_dirs(root)) envs.push_back(read_environment(dir));
  if (envs.empty()) throw UsageError("no environments under " + root);
  return envs;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

// gen ---------------------------------------------------------------------------

struct GenArgs {
  int count = 1;
  std::string level = "mixed";
  std::string density = "mixed";
};

int cmd_gen(const Globals& g, const GenArgs& a) {
  const json cfg = load_config(g);
  json wj = section(cfg, "worldgen");
  WorldGenConfig base = WorldGenConfig::from_json(wj);
  if (wj.contains("semantics_file")) {
    // Relative to the config file.
    const fs::path file = fs::path(g.config).parent_path() / wj.at("semantics_file").get<std::string>();
    base.semantics = SemanticsTable::load(file);
  }
  base.scale = parse_scale(g.scale);
  base.elevation_level.reset();
  base.obstacle_density.reset();
  if (a.level != "mixed") base.elevation_level = parse_elevation_level(a.level);
  if (a.density != "mixed") base.obstacle_density = parse_obstacle_density(a.density);
  base.validate();
  const fs::path root = g.out.empty() ? fs::path("envs") : fs::path(g.out);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) throw UsageError("cannot create output directory " + root.string());

  json envs = json::array();
  for (int i = 0; i < a.count; ++i) {
    WorldGenConfig c = base;
    c.seed = g.seed + static_cast<std::uint64_t>(i);
    const EnvironmentSpec env = generate_environment(c);
    const std::string name = fmt::format("env_{:06d}", c.seed);
    write_environment(env, root / name);
    envs.push_back({{"dir", name},
                    {"seed", env.seed},
                    {"elevation_level", std::string(to_string(env.elevation_level()))},
                    {"obstacle_density", std::string(to_string(env.obstacles.density))},
                    {"tasks", env.tasks.size()}});
  }
  const json manifest = {{"generated_at", timestamp_utc()},
                         {"seed", g.seed},
                         {"count", a.count},
                         {"level", a.level},
                         {"density", a.density},
                         {"scale", g.scale},
                         {"environment_count", envs.size()},
                         {"task_count", static_cast<std::size_t>(a.count) * kTaskCount},
                         {"environments", envs}};
  open_out(root / "manifest.json") << manifest.dump(2) << '\n';
  std::cout << manifest.dump(2) << '\n';
  return 0;
}

// run ---------------------------------------------------------------------------

struct RunArgs {
  std::string envs;
  std::string controller = "pid";
  std::string tasks = "all";
  std::string report;
  std::string logs;
  std::string vehicle = "hmmwv";
  std::string vehicle_file;
};

void print_summary(const BenchmarkRun& run, const std::string& controller) {
  auto line = [](std::string_view name, const GroupMetrics& m) {
    std::cout << fmt::format("{:<8} trials {:>5}  success {:.3f}  time {:>7.2f}  |roll| {:.4f}  |pitch| {:.4f}\n",
                             name, m.trials, m.success_rate, m.traversal_time.mean, m.roll.mean, m.pitch.mean);
  };
  std::cout << "controller " << controller << '\n';
  line("all", run.report.overall);
  for (const auto& [level, m] : run.report.by_level) line(to_string(level), m);
}

int cmd_run(const Globals& g, const RunArgs& a) {
  const json cfg = load_config(g);
  const auto names = controller_names();
  if (std::find(names.begin(), names.end(), a.controller) == names.end()) {
    throw UsageError(fmt::format("unknown controller '{}'; registered: {}", a.controller, fmt::join(names, ", ")));
  }
  BenchmarkOptions opt;
  opt.controller = a.controller;
  opt.controller_params = section(section(cfg, "controllers"), a.controller.c_str());
  opt.vehicle = a.vehicle;
  if (!a.vehicle_file.empty()) opt.vehicle_file = a.vehicle_file;
  opt.tasks = parse_tasks(a.tasks);
  opt.threads = g.threads;
  opt.episode = EpisodeConfig::from_json(section(cfg, "episode"));
  if (!a.logs.empty()) opt.log_dir = a.logs;
  if (!fs::is_directory(a.envs)) throw UsageError("no environment directory " + a.envs);

  std::vector<fs::path> dirs;
  if (fs::exists(fs::path(a.envs) / "meta.json")) {
    dirs.push_back(a.envs);
  } else {
    dirs = list_environment_dirs(a.envs);
  }
  if (dirs.empty()) throw UsageError("no environments under " + a.envs);
  const BenchmarkRun run = run_benchmark(dirs, opt);
  const fs::path report = !a.report.empty() ? fs::path(a.report) : !g.out.empty() ? fs::path(g.out) : "report";
  write_reports(run, opt, report);
  print_summary(run, a.controller);
  std::cout << "reports written to " << report.string() << '\n';
  return 0;
}

// replay ------------------------------------------------------------------------

struct ReplayArgs {
  std::string log;
  std::string env;
};

int cmd_replay(const ReplayArgs& a) {
  std::ifstream in(a.log);
  if (!in) throw UsageError("cannot open log " + a.log);
  const ReplayVerdict v = a.env.empty() ? replay_log(in) : replay_log(in, load_env(a.env));
  json out = {{"match", v.match}, {"steps", v.steps}, {"max_divergence", v.max_divergence}};
  if (v.first_divergent_step) out["first_divergent_step"] = *v.first_divergent_step;
  if (!v.message.empty()) out["message"] = v.message;
  std::cout << out.dump() << '\n';
  return v.match ? 0 : kExitRuntime;
}

// dataset -----------------------------------------------------------------------

struct ExploreArgs {
  std::string env;
  double duration = 60.0;
  std::string vehicle = "hmmwv";
};

int cmd_explore(const Globals& g, const ExploreArgs& a) {
  const json cfg = load_config(g);
  const EnvironmentSpec env = load_env(a.env);
  ExplorationConfig ec = ExplorationConfig::from_json(section(cfg, "exploration"));
  ec.seed = g.seed;
  ec.duration = a.duration;
  ec.validate();
  const fs::path path = g.out.empty() ? fs::path("exploration.jsonl") : fs::path(g.out);
  auto out = open_out(path);
  const auto summary = record_random_exploration(env, vehicle_preset(a.vehicle, env.scale), ec, out);
  std::cout << fmt::format("{} trials, {} steps -> {}\n", summary.trials, summary.steps, path.string());
  for (const auto& [tag, n] : summary.terminations) std::cout << fmt::format("  {:<9} {}\n", tag, n);
  return 0;
}

struct FailureArgs {
  std::vector<std::string> logs;
  double window = 10.0;
};

int cmd_failures(const Globals& g, const FailureArgs& a) {
  std::vector<fs::path> files;
  for (const auto& p : a.logs) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::recursive_directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
      }
    } else if (fs::is_regular_file(p)) {
      files.push_back(p);
    } else {
      throw UsageError("no log file or directory " + p);
    }
  }
  std::sort(files.begin(), files.end());
  const fs::path path = g.out.empty() ? fs::path("failures.jsonl") : fs::path(g.out);
  auto out = open_out(path);
  std::size_t clips = 0;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::vector<FailureClip> found;
    try {
      found = extract_failures(in, a.window);
    } catch (const FormatError& e) {
      throw FormatError(fmt::format("{}: {}", f.string(), e.what()));
    }
    for (const auto& c : found) {
      out << json{{"source", f.filename().string()},
                  {"outcome", std::string(to_string(c.outcome))},
                  {"end_time", c.end_time},
                  {"records", c.records}}
                 .dump()
          << '\n';
      ++clips;
    }
  }
  std::cout << fmt::format("{} failure clips from {} logs -> {}\n", clips, files.size(), path.string());
  return 0;
}

// export ------------------------------------------------------------------------

struct ExportArgs {
  std::string report;
  std::string format = "csv";
};

int cmd_export(const Globals& g, const ExportArgs& a) {
  std::ifstream in(a.report);
  if (!in) throw UsageError("cannot open report " + a.report);
  json report;
  try {
    report = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(fmt::format("{}: {}", a.report, e.what()));
  }
  if (g.out.empty()) {
    export_report(report, a.format, std::cout);
  } else {
    auto out = open_out(g.out);
    export_report(report, a.format, out);
  }
  return 0;
}

// serve -------------------------------------------------------------------------

struct ServeArgs {
  std::string envs;
};

int cmd_serve(const Globals& g, const ServeArgs& a) {
  const json cfg = section(load_config(g), "rl");
  RlConfig rc;
  rc.vehicle = cfg.value("vehicle", rc.vehicle);
  rc.episode = EpisodeConfig::from_json(section(cfg, "episode"));
  rc.reward = RewardConfig::from_json(section(cfg, "reward"));
  rc.spawn_yaw_jitter = cfg.value("spawn_yaw_jitter", rc.spawn_yaw_jitter);
  RlSession session(load_suite(a.envs), rc);
  serve_protocol(session, std::cin, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-road mobility benchmark: terrain generation, vehicle simulation and controller evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Base seed");
  app.add_option("--scale", g.scale, "World and vehicle scale")->check(CLI::IsMember({"full", "1/6", "1/10"}));
  app.add_option("--out", g.out, "Output path");
  app.add_option("--threads", g.threads, "Worker threads for the benchmark harness")->check(CLI::Range(1, 1024));
  app.add_option("--config", g.config, "JSON config file with worldgen/episode/controllers/exploration/rl sections");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate an environment suite");
  gen_cmd->add_option("--count", gen.count, "Number of environments (seeds seed..seed+count-1)")
      ->check(CLI::Range(1, 1000000));
  gen_cmd->add_option("--level", gen.level, "Elevation level")->check(CLI::IsMember({"low", "medium", "high", "mixed"}));
  gen_cmd->add_option("--density", gen.density, "Obstacle density")
      ->check(CLI::IsMember({"sparse", "medium", "dense", "mixed"}));

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a controller over an environment suite");
  run_cmd->add_option("--envs", run.envs, "Suite directory (or one environment directory)")->required();
  run_cmd->add_option("--controller", run.controller, "Controller name (pid, eh, mppi)");
  run_cmd->add_option("--tasks", run.tasks, "Task ids, e.g. 0..4 or 1,3,7 (default all)");
  run_cmd->add_option("--report", run.report, "Report directory (default --out, else ./report)");
  run_cmd->add_option("--logs", run.logs, "Write one step log per episode into this directory");
  run_cmd->add_option("--vehicle", run.vehicle, "Vehicle preset");
  run_cmd->add_option("--vehicle-file", run.vehicle_file, "JSON file of vehicle presets");

  ReplayArgs replay;
  auto* replay_cmd = app.add_subcommand("replay", "Re-simulate a step log and report pose divergence");
  replay_cmd->add_option("--log", replay.log, "Step log (JSONL)")->required();
  replay_cmd->add_option("--env", replay.env, "Environment directory (default: regenerate from the log header)");

  auto* dataset_cmd = app.add_subcommand("dataset", "Record datasets");
  dataset_cmd->require_subcommand(1);
  ExploreArgs explore;
  auto* explore_cmd = dataset_cmd->add_subcommand("explore", "Random exploration with sinusoidal steering");
  explore_cmd->add_option("--env", explore.env, "Environment directory")->required();
  explore_cmd->add_option("--duration", explore.duration, "Simulated seconds")->check(CLI::PositiveNumber);
  explore_cmd->add_option("--vehicle", explore.vehicle, "Vehicle preset");
  FailureArgs failures;
  auto* failures_cmd = dataset_cmd->add_subcommand("failures", "Extract rollover/stuck clips from step logs");
  failures_cmd->add_option("--logs", failures.logs, "Log files or directories")->required();
  failures_cmd->add_option("--window", failures.window, "Clip length in seconds")->check(CLI::PositiveNumber);

  ExportArgs exp;
  auto* export_cmd = app.add_subcommand("export", "Flatten a report.json");
  export_cmd->add_option("--report", exp.report, "report.json written by run")->required();
  export_cmd->add_option("--format", exp.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the reset/step protocol on stdin/stdout");
  serve_cmd->add_option("--envs", serve.envs, "Suite directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*gen_cmd) return cmd_gen(g, gen);
    if (*run_cmd) return cmd_run(g, run);
    if (*replay_cmd) return cmd_replay(replay);
    if (*explore_cmd) return cmd_explore(g, explore);
    if (*failures_cmd) return cmd_failures(g, failures);
    if (*export_cmd) return cmd_export(g, exp);
    if (*serve_cmd) return cmd_serve(g, serve);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const LookupError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
