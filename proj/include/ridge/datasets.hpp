#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ridge/bench.hpp"

namespace ridge {

// Random exploration ------------------------------------------------------------

struct ExplorationConfig {
  std::uint64_t seed = 0;
  double duration = 60.0;           // s of simulated driving in total
  double steering_frequency = 0.1;  // Hz
  double steering_amplitude = 1.0;
  double target_speed = 2.0;        // m/s, full scale
  double speed_gain = 1.0;          // throttle per (m/s) of error, full scale
  double control_rate = 10.0;       // Hz
  double physics_dt = kDefaultDt;
  double rollover_threshold = kDefaultRolloverThreshold;
  double stuck_window = 8.0;        // s, full scale
  double stuck_epsilon = 0.5;       // m, full scale
  double spawn_clearance = 10.0;    // m, full scale, from obstacle centres and the world edge
  /// First spawn pose (x, y, yaw); sampled like every respawn when unset.
  std::optional<Eigen::Vector3d> first_pose;

  void validate() const;
  nlohmann::json to_json() const;
  static ExplorationConfig from_json(const nlohmann::json& j);
};

struct ExplorationSummary {
  std::size_t trials = 0;
  std::size_t steps = 0;
  std::map<std::string, std::size_t> terminations;  // outcome tag -> count
};

/// Drives with steering sin(2 pi f t) and a speed loop, respawning on
/// rollover, stuck or boundary exit. Writes a step-record stream: header, then
/// per trial an initial record, its steps and an outcome record. The final
/// trial ends with Timeout when the duration runs out.
ExplorationSummary record_random_exploration(const EnvironmentSpec& env, const VehicleParams& vehicle,
                                             const ExplorationConfig& cfg, std::ostream& out);

// Failure clips -------------------------------------------------------------------

struct FailureClip {
  Outcome outcome = Outcome::Rollover;
  double end_time = 0.0;  // terminal step time
  std::vector<nlohmann::json> records;
};

/// Trailing `window` seconds of every Rollover/Stuck trial in a step-record
/// stream. Malformed lines throw FormatError naming the line.
std::vector<FailureClip> extract_failures(std::istream& log, double window = 10.0);
std::vector<FailureClip> extract_failures(const std::vector<nlohmann::json>& records, double window = 10.0);

// Reset/step interface --------------------------------------------------------------

struct RewardConfig {
  double progress_weight = 1.0;  // per meter of progress toward the goal
  double rollover = -50.0;
  double stuck = -20.0;
  double success = 100.0;

  nlohmann::json to_json() const;
  static RewardConfig from_json(const nlohmann::json& j);
};

inline constexpr int kObservationPatch = 20;  // cells per side

struct Observation {
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
  Vec3 linear_velocity = Vec3::Zero();   // body frame
  Vec3 angular_velocity = Vec3::Zero();  // body frame
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  std::vector<double> elevation;  // 20 x 20 row-major, relative to the ground under the vehicle
  Vec2 goal = Vec2::Zero();       // goal vector in the body frame
  double t = 0.0;

  friend bool operator==(const Observation& a, const Observation& b);
};

struct Transition {
  Observation observation;
  Action action;
  double reward = 0.0;
  bool done = false;
  std::optional<Outcome> outcome;  // set when done

  friend bool operator==(const Transition& a, const Transition& b);
};

nlohmann::json to_json(const Observation& o);
Observation observation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Transition& t);
Transition transition_from_json(const nlohmann::json& j);

struct RlConfig {
  std::string vehicle = "hmmwv";
  EpisodeConfig episode;  // full scale, scaled per environment
  RewardConfig reward;
  double spawn_yaw_jitter = 0.0;  // rad, uniform +- around the task yaw, drawn from the reset seed
};

// One session owns one simulator; calls are strictly sequential.
class RlSession {
 public:
  RlSession(std::vector<EnvironmentSpec> envs, RlConfig cfg = {});

  Observation reset(int env_id, int task_id, std::uint64_t seed);
  /// One control tick. Throws ProtocolError before reset or after done.
  Transition step(const Action& action);

  std::size_t environment_count() const { return envs_.size(); }

 private:
  Observation observe() const;

  std::vector<EnvironmentSpec> envs_;
  RlConfig cfg_;
  const EnvironmentSpec* env_ = nullptr;
  const NavigationTask* task_ = nullptr;
  VehicleParams vehicle_;
  EpisodeConfig episode_;
  std::optional<Simulator> sim_;
  std::deque<PoseSample> history_;
  double elapsed_ = 0.0;
  bool done_ = false;
};

/// Serves line-delimited JSON requests until EOF or {"op": "close"}:
///   {"op": "reset", "env_id": i, "task_id": k, "seed": s} -> {"ok": true, "observation": {...}}
///   {"op": "step", "action": [steer, throttle, brake]}    -> {"ok": true, "transition": {...}}
/// Errors answer {"ok": false, "error": "..."} and the session continues.
void serve_protocol(RlSession& session, std::istream& in, std::ostream& out);

}  // namespace ridge
