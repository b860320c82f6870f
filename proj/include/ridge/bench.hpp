#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ridge/controllers.hpp"
#include "ridge/terrain.hpp"
#include "ridge/vehicle.hpp"

namespace ridge {

enum class Outcome { Success, Rollover, Stuck, Timeout, Fault, Boundary };

std::string_view to_string(Outcome o);
Outcome parse_outcome(std::string_view name);
/// Rollover and Stuck are the failure modes kept as failure clips.
inline bool is_failure_clip_outcome(Outcome o) { return o == Outcome::Rollover || o == Outcome::Stuck; }

struct EpisodeConfig {
  double timeout = 120.0;          // s, full scale
  double goal_radius = 3.0;        // m, full scale
  double control_rate = 10.0;      // Hz
  double physics_dt = kDefaultDt;  // s
  double settle_time = 1.0;        // s of parked steps before the clock starts
  double rollover_threshold = kDefaultRolloverThreshold;
  double stuck_window = 8.0;       // s, full scale
  double stuck_epsilon = 0.5;      // m, full scale
  double occupancy_inflation = 1.5;  // m, full scale, for the controllers' occupancy grid
  bool log_every_step = true;

  void validate() const;
  /// Lengths times s, durations times sqrt(s) (speeds follow Froude scaling).
  EpisodeConfig scaled(double length_scale) const;
  int substeps() const;
  double control_period() const { return 1.0 / control_rate; }

  nlohmann::json to_json() const;
  static EpisodeConfig from_json(const nlohmann::json& j);
};

struct Pose {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
};

struct EpisodeResult {
  Outcome outcome = Outcome::Timeout;
  std::optional<double> traversal_time;  // Success only
  double duration = 0.0;                 // simulated seconds after settling
  std::vector<double> roll_series;       // one per control tick
  std::vector<double> pitch_series;
  std::vector<Action> action_log;
  std::vector<Pose> trajectory;
  std::uint64_t env_seed = 0;
  int task_id = 0;
  std::string controller_id;
  ElevationLevel elevation_level = ElevationLevel::Low;
  std::string message;  // fault diagnostics
};

/// Everything a controller needs for one tick, taken from ground truth.
ControllerInput make_controller_input(const EnvironmentSpec& env, const NavigationTask& task,
                                      const VehicleState& state, const OccupancyGrid& occupancy, int window_half_cells);

/// Half width of the elevation window handed to controllers, in cells.
inline constexpr int kControllerWindowHalfCells = 14;

/// Spawns at the task start and runs the parked settle phase.
Simulator settle_vehicle(const EnvironmentSpec& env, const VehicleParams& params, Vec2 xy, double yaw,
                         const EpisodeConfig& cfg);

/// Runs one controller on one task to termination. When `log` is given, the
/// step log (header, initial state, one record per control tick, outcome on
/// the final line) is written to it.
EpisodeResult run_episode(const EnvironmentSpec& env, int task_id, Controller& controller,
                          const VehicleParams& vehicle, const EpisodeConfig& cfg, std::ostream* log = nullptr);

// Metrics ---------------------------------------------------------------------

struct SummaryStats {
  double mean = 0.0;
  double std = 0.0;  // population
  double max = 0.0;
  std::size_t count = 0;
};

SummaryStats summarize(const std::vector<double>& values);

struct GroupMetrics {
  std::size_t trials = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  SummaryStats traversal_time;  // successes only
  SummaryStats roll;            // |roll| over every tick of every episode
  SummaryStats pitch;
  std::map<std::string, std::size_t> outcomes;
};

struct MetricsReport {
  GroupMetrics overall;
  std::map<ElevationLevel, GroupMetrics> by_level;
};

/// Throws Error on empty input.
MetricsReport compute_metrics(const std::vector<EpisodeResult>& results);

nlohmann::json to_json(const GroupMetrics& g);
nlohmann::json to_json(const MetricsReport& r);

// Benchmark -------------------------------------------------------------------

struct BenchmarkOptions {
  std::string controller = "pid";
  nlohmann::json controller_params = nlohmann::json::object();
  std::string vehicle = "hmmwv";
  std::optional<std::filesystem::path> vehicle_file;
  std::vector<int> tasks;  // empty: all ten
  int threads = 1;
  std::optional<std::filesystem::path> log_dir;
  EpisodeConfig episode;   // full-scale values; scaled per environment
};

struct BenchmarkRun {
  std::vector<EpisodeResult> results;  // ordered by (environment order, task_id)
  MetricsReport report;
  std::vector<std::string> warnings;   // environments that failed to load
};

/// Runs every requested task of every environment in the given directories.
/// The outcome does not depend on the thread count.
BenchmarkRun run_benchmark(const std::vector<std::filesystem::path>& env_dirs, const BenchmarkOptions& options);
/// Same, over environments already in memory.
BenchmarkRun run_benchmark(const std::vector<EnvironmentSpec>& envs, const BenchmarkOptions& options);

/// Per-episode CSV: header plus one row per episode.
void write_episode_csv(const std::vector<EpisodeResult>& results, std::ostream& out);
/// One summary block (row) per group: overall plus each elevation level.
void write_summary_csv(const MetricsReport& report, std::ostream& out);
nlohmann::json episode_json(const EpisodeResult& r);
nlohmann::json report_json(const BenchmarkRun& run, const BenchmarkOptions& options);

/// Flattens a report.json document. "csv": the per-episode table; "json": one
/// flat row per group plus the episode records.
void export_report(const nlohmann::json& report, std::string_view format, std::ostream& out);

/// Writes report.json, episodes.csv and summary.csv into `dir`.
void write_reports(const BenchmarkRun& run, const BenchmarkOptions& options, const std::filesystem::path& dir);

// Replay ----------------------------------------------------------------------

struct ReplayVerdict {
  bool match = true;
  double max_divergence = 0.0;  // max over ticks of position + quaternion component difference
  std::optional<std::size_t> first_divergent_step;
  std::size_t steps = 0;
  std::string message;
};

/// Re-simulates the logged actions from the logged start on `env` and compares
/// every pose. The log header must carry the vehicle and episode settings.
ReplayVerdict replay_log(std::istream& log, const EnvironmentSpec& env);
/// Regenerates the environment from the generator record in the log header.
ReplayVerdict replay_log(std::istream& log);

}  // namespace ridge
