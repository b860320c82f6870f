#include "ridge/datasets.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "ridge/rng.hpp"
#include "ridge/step_log.hpp"

namespace ridge {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Random exploration

void ExplorationConfig::validate() const {
  if (!(duration > 0.0)) throw ConfigError("exploration: duration must be positive");
  if (!(control_rate > 0.0) || !(physics_dt > 0.0) || physics_dt > kMaxDt) {
    throw ConfigError("exploration: control_rate > 0 and physics_dt in (0, 0.02] required");
  }
  if (!(stuck_window > 0.0) || !(stuck_epsilon > 0.0) || !(spawn_clearance >= 0.0)) {
    throw ConfigError("exploration: stuck_window, stuck_epsilon > 0 and spawn_clearance >= 0 required");
  }
}

json ExplorationConfig::to_json() const {
  json j = {{"seed", seed},
            {"duration", duration},
            {"steering_frequency", steering_frequency},
            {"steering_amplitude", steering_amplitude},
            {"target_speed", target_speed},
            {"speed_gain", speed_gain},
            {"control_rate", control_rate},
            {"physics_dt", physics_dt},
            {"rollover_threshold", rollover_threshold},
            {"stuck_window", stuck_window},
            {"stuck_epsilon", stuck_epsilon},
            {"spawn_clearance", spawn_clearance}};
  if (first_pose) j["first_pose"] = {first_pose->x(), first_pose->y(), first_pose->z()};
  return j;
}

ExplorationConfig ExplorationConfig::from_json(const json& j) {
  ExplorationConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.duration = j.value("duration", c.duration);
    c.steering_frequency = j.value("steering_frequency", c.steering_frequency);
    c.steering_amplitude = j.value("steering_amplitude", c.steering_amplitude);
    c.target_speed = j.value("target_speed", c.target_speed);
    c.speed_gain = j.value("speed_gain", c.speed_gain);
    c.control_rate = j.value("control_rate", c.control_rate);
    c.physics_dt = j.value("physics_dt", c.physics_dt);
    c.rollover_threshold = j.value("rollover_threshold", c.rollover_threshold);
    c.stuck_window = j.value("stuck_window", c.stuck_window);
    c.stuck_epsilon = j.value("stuck_epsilon", c.stuck_epsilon);
    c.spawn_clearance = j.value("spawn_clearance", c.spawn_clearance);
    if (j.contains("first_pose")) {
      const auto& p = j.at("first_pose");
      c.first_pose = Eigen::Vector3d(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("exploration config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

Eigen::Vector3d sample_spawn(const EnvironmentSpec& env, double clearance, Rng& rng) {
  const auto& f = env.heightfield;
  const double lo = std::min(clearance, 0.5 * f.extent_x());
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const Vec2 p(rng.uniform(lo, f.extent_x() - lo), rng.uniform(lo, f.extent_y() - lo));
    const double yaw = rng.uniform(-kPi, kPi);
    bool ok = true;
    for (const auto& o : env.obstacles.obstacles) {
      if ((o.center - p).norm() < clearance) {
        ok = false;
        break;
      }
    }
    if (ok) return {p.x(), p.y(), yaw};
  }
  throw GenerationError("no exploration spawn pose with the requested obstacle clearance");
}

}  // namespace

ExplorationSummary record_random_exploration(const EnvironmentSpec& env, const VehicleParams& vehicle,
                                             const ExplorationConfig& cfg, std::ostream& out) {
  cfg.validate();
  const double s = scale_factor(env.scale);
  const double v_scale = std::sqrt(s);
  const double target = cfg.target_speed * v_scale;
  const double gain = cfg.speed_gain / v_scale;
  const double stuck_window = cfg.stuck_window * v_scale;
  const double stuck_epsilon = cfg.stuck_epsilon * s;

  EpisodeConfig episode;
  episode.control_rate = cfg.control_rate;
  episode.physics_dt = cfg.physics_dt;
  episode.settle_time = 0.0;
  episode.validate();
  const int substeps = episode.substeps();
  const double period = substeps * cfg.physics_dt;
  const auto total_ticks = static_cast<std::size_t>(std::ceil(cfg.duration / period - 1e-9));

  out << json{{"type", "header"},
              {"format_version", kStepLogVersion},
              {"kind", "exploration"},
              {"env_seed", env.seed},
              {"generator", env.generator_config},
              {"vehicle", vehicle.exact_json()},
              {"episode", episode.to_json()},
              {"exploration", cfg.to_json()}}
             .dump()
      << '\n';

  Rng rng(cfg.seed, "exploration-spawn");
  ExplorationSummary summary;
  std::size_t ticks = 0;
  while (ticks < total_ticks) {
    const Eigen::Vector3d pose = (summary.trials == 0 && cfg.first_pose) ? *cfg.first_pose
                                                                           : sample_spawn(env, cfg.spawn_clearance * s, rng);
    Simulator sim(env, vehicle, spawn_state(vehicle, env, {}, pose.head<2>(), pose.z()));
    out << json{{"type", "initial"}, {"settled", false}, {"trial", summary.trials}, {"state", state_to_json(sim.state())}}
               .dump()
        << '\n';

    std::deque<PoseSample> history{{0.0, sim.state().planar_position()}};
    Outcome outcome = Outcome::Timeout;
    double t = 0.0;
    for (std::size_t k = 0;; ++k) {
      if (ticks >= total_ticks) break;
      Action a = speed_command(target, sim.state().forward_speed(), gain);
      a.steering = cfg.steering_amplitude * std::sin(2.0 * kPi * cfg.steering_frequency * t);
      a = a.clamped();
      try {
        for (int i = 0; i < substeps; ++i) sim.step(a, cfg.physics_dt);
      } catch (const SimulationFault&) {
        outcome = Outcome::Fault;
        break;
      }
      ++ticks;
      t = static_cast<double>(k + 1) * period;
      const VehicleState& now = sim.state();
      json rec = step_record_json(k, t, now, a);
      rec["trial"] = summary.trials;
      out << rec.dump() << '\n';
      ++summary.steps;

      history.push_back({t, now.planar_position()});
      while (history.size() > 2 && t - history[1].t >= stuck_window) history.pop_front();
      if (detect_rollover(now, cfg.rollover_threshold)) {
        outcome = Outcome::Rollover;
        break;
      }
      if (!env.heightfield.contains(now.position.x(), now.position.y())) {
        outcome = Outcome::Boundary;
        break;
      }
      if (detect_stuck(history, stuck_window, stuck_epsilon)) {
        outcome = Outcome::Stuck;
        break;
      }
    }
    out << json{{"type", "outcome"}, {"trial", summary.trials}, {"outcome", std::string(to_string(outcome))}, {"t", t}}
               .dump()
        << '\n';
    ++summary.terminations[std::string(to_string(outcome))];
    ++summary.trials;
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Failure clips

std::vector<FailureClip> extract_failures(const std::vector<json>& records, double window) {
  std::vector<FailureClip> clips;
  std::vector<const json*> steps;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& rec = records[i];
    const std::string type = rec.value("type", "");
    if (type == "initial") {
      steps.clear();
    } else if (type == "step") {
      if (!rec.contains("t")) throw FormatError(fmt::format("record {}: step without a time stamp", i + 1));
      steps.push_back(&rec);
    } else if (type == "outcome") {
      if (!rec.contains("outcome")) throw FormatError(fmt::format("record {}: outcome record without a tag", i + 1));
      const Outcome o = parse_outcome(rec.at("outcome").get<std::string>());
      if (is_failure_clip_outcome(o) && !steps.empty()) {
        FailureClip clip;
        clip.outcome = o;
        clip.end_time = steps.back()->at("t").get<double>();
        const double from = clip.end_time - window;
        for (const json* st : steps) {
          if (st->at("t").get<double>() > from + 1e-9) clip.records.push_back(*st);
        }
        clips.push_back(std::move(clip));
      }
      steps.clear();
    }
  }
  return clips;
}

std::vector<FailureClip> extract_failures(std::istream& log, double window) {
  return extract_failures(read_log_lines(log), window);
}

// ---------------------------------------------------------------------------
// Reset/step interface

json RewardConfig::to_json() const {
  return {{"progress_weight", progress_weight}, {"rollover", rollover}, {"stuck", stuck}, {"success", success}};
}

RewardConfig RewardConfig::from_json(const json& j) {
  RewardConfig r;
  r.progress_weight = j.value("progress_weight", r.progress_weight);
  r.rollover = j.value("rollover", r.rollover);
  r.stuck = j.value("stuck", r.stuck);
  r.success = j.value("success", r.success);
  return r;
}

bool operator==(const Observation& a, const Observation& b) {
  return a.position == b.position && a.orientation.coeffs() == b.orientation.coeffs() &&
         a.linear_velocity == b.linear_velocity && a.angular_velocity == b.angular_velocity && a.roll == b.roll &&
         a.pitch == b.pitch && a.yaw == b.yaw && a.elevation == b.elevation && a.goal == b.goal && a.t == b.t;
}

bool operator==(const Transition& a, const Transition& b) {
  return a.observation == b.observation && a.action == b.action && a.reward == b.reward && a.done == b.done &&
         a.outcome == b.outcome;
}

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 vec3(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

}  // namespace

json to_json(const Observation& o) {
  return {{"position", vec(o.position)},
          {"quaternion", {o.orientation.w(), o.orientation.x(), o.orientation.y(), o.orientation.z()}},
          {"linear_velocity", vec(o.linear_velocity)},
          {"angular_velocity", vec(o.angular_velocity)},
          {"roll", o.roll},
          {"pitch", o.pitch},
          {"yaw", o.yaw},
          {"elevation", o.elevation},
          {"goal", {o.goal.x(), o.goal.y()}},
          {"t", o.t}};
}

Observation observation_from_json(const json& j) {
  Observation o;
  try {
    o.position = vec3(j.at("position"));
    const auto& q = j.at("quaternion");
    o.orientation = Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(), q.at(3).get<double>());
    o.linear_velocity = vec3(j.at("linear_velocity"));
    o.angular_velocity = vec3(j.at("angular_velocity"));
    o.roll = j.at("roll").get<double>();
    o.pitch = j.at("pitch").get<double>();
    o.yaw = j.at("yaw").get<double>();
    o.elevation = j.at("elevation").get<std::vector<double>>();
    o.goal = Vec2(j.at("goal").at(0).get<double>(), j.at("goal").at(1).get<double>());
    o.t = j.at("t").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("observation: ") + e.what());
  }
  return o;
}

json to_json(const Transition& t) {
  return {{"observation", to_json(t.observation)},
          {"action", action_to_json(t.action)},
          {"reward", t.reward},
          {"done", t.done},
          {"info", {{"outcome", t.outcome ? json(std::string(to_string(*t.outcome))) : json(nullptr)}}}};
}

Transition transition_from_json(const json& j) {
  Transition t;
  try {
    t.observation = observation_from_json(j.at("observation"));
    t.action = action_from_json(j.at("action"));
    t.reward = j.at("reward").get<double>();
    t.done = j.at("done").get<bool>();
    const auto& o = j.at("info").at("outcome");
    if (!o.is_null()) t.outcome = parse_outcome(o.get<std::string>());
  } catch (const json::exception& e) {
    throw FormatError(std::string("transition: ") + e.what());
  }
  return t;
}

RlSession::RlSession(std::vector<EnvironmentSpec> envs, RlConfig cfg) : envs_(std::move(envs)), cfg_(std::move(cfg)) {
  if (envs_.empty()) throw ConfigError("rl session needs at least one environment");
  cfg_.episode.validate();
}

Observation RlSession::reset(int env_id, int task_id, std::uint64_t seed) {
  if (env_id < 0 || env_id >= static_cast<int>(envs_.size())) {
    throw ProtocolError(fmt::format("env_id {} outside 0..{}", env_id, envs_.size() - 1));
  }
  const EnvironmentSpec& env = envs_[static_cast<std::size_t>(env_id)];
  if (task_id < 0 || task_id >= static_cast<int>(env.tasks.size())) {
    throw ProtocolError(fmt::format("task_id {} outside 0..{}", task_id, env.tasks.size() - 1));
  }
  env_ = &env;
  task_ = &env.tasks[static_cast<std::size_t>(task_id)];
  vehicle_ = vehicle_preset(cfg_.vehicle, env.scale);
  episode_ = cfg_.episode.scaled(scale_factor(env.scale));
  Rng rng(seed, "rl-reset");
  const double yaw = task_->start_yaw + cfg_.spawn_yaw_jitter * rng.uniform(-1.0, 1.0);
  sim_.reset();
  sim_.emplace(settle_vehicle(env, vehicle_, task_->start, yaw, episode_));
  history_ = {{0.0, sim_->state().planar_position()}};
  elapsed_ = 0.0;
  done_ = false;
  return observe();
}

Observation RlSession::observe() const {
  const VehicleState& s = sim_->state();
  const Eigen::Matrix3d rot = s.orientation.toRotationMatrix();
  Observation o;
  o.position = s.position;
  o.orientation = s.orientation;
  o.linear_velocity = rot.transpose() * s.linear_velocity;
  o.angular_velocity = s.angular_velocity;
  o.roll = s.roll();
  o.pitch = s.pitch();
  o.yaw = s.yaw();
  o.t = elapsed_;
  const auto& f = env_->heightfield;
  const double ground = f.height_at_clamped(s.position.x(), s.position.y());
  const int ox = static_cast<int>(std::lround(s.position.x() / f.resolution)) - kObservationPatch / 2;
  const int oy = static_cast<int>(std::lround(s.position.y() / f.resolution)) - kObservationPatch / 2;
  o.elevation.resize(static_cast<std::size_t>(kObservationPatch) * kObservationPatch);
  for (int r = 0; r < kObservationPatch; ++r) {
    for (int c = 0; c < kObservationPatch; ++c) {
      const int ix = std::clamp(ox + c, 0, f.cells_x - 1), iy = std::clamp(oy + r, 0, f.cells_y - 1);
      o.elevation[static_cast<std::size_t>(r) * kObservationPatch + c] = f.at(ix, iy) - ground;
    }
  }
  const Vec2 d = task_->goal - s.planar_position();
  const double cy = std::cos(o.yaw), sy = std::sin(o.yaw);
  o.goal = Vec2(cy * d.x() + sy * d.y(), -sy * d.x() + cy * d.y());
  return o;
}

Transition RlSession::step(const Action& action) {
  if (!sim_) throw ProtocolError("step before reset");
  if (done_) throw ProtocolError("episode is done; call reset");
  Transition tr;
  tr.action = action.clamped();
  const double before = (sim_->state().planar_position() - task_->goal).norm();
  const int substeps = episode_.substeps();
  try {
    for (int i = 0; i < substeps; ++i) sim_->step(tr.action, episode_.physics_dt);
  } catch (const SimulationFault&) {
    done_ = true;
    tr.done = true;
    tr.outcome = Outcome::Fault;
    tr.observation = observe();
    return tr;
  }
  elapsed_ += substeps * episode_.physics_dt;
  const VehicleState& now = sim_->state();
  const double after = (now.planar_position() - task_->goal).norm();
  tr.reward = cfg_.reward.progress_weight * (before - after);

  history_.push_back({elapsed_, now.planar_position()});
  while (history_.size() > 2 && elapsed_ - history_[1].t >= episode_.stuck_window) history_.pop_front();
  if (after <= episode_.goal_radius) {
    tr.outcome = Outcome::Success;
    tr.reward += cfg_.reward.success;
  } else if (detect_rollover(now, episode_.rollover_threshold)) {
    tr.outcome = Outcome::Rollover;
    tr.reward += cfg_.reward.rollover;
  } else if (detect_stuck(history_, episode_.stuck_window, episode_.stuck_epsilon)) {
    tr.outcome = Outcome::Stuck;
    tr.reward += cfg_.reward.stuck;
  } else if (elapsed_ >= episode_.timeout - 1e-9) {
    tr.outcome = Outcome::Timeout;
  }
  tr.done = tr.outcome.has_value();
  done_ = tr.done;
  tr.observation = observe();
  return tr;
}

void serve_protocol(RlSession& session, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json reply;
    try {
      const json req = json::parse(line);
      const std::string op = req.value("op", "");
      if (op == "reset") {
        const Observation o =
            session.reset(req.at("env_id").get<int>(), req.at("task_id").get<int>(), req.value("seed", std::uint64_t{0}));
        reply = {{"ok", true}, {"observation", to_json(o)}};
      } else if (op == "step") {
        reply = {{"ok", true}, {"transition", to_json(session.step(action_from_json(req.at("action"))))}};
      } else if (op == "close") {
        out << json{{"ok", true}}.dump() << '\n' << std::flush;
        return;
      } else {
        throw ProtocolError(fmt::format("unknown op '{}'", op));
      }
    } catch (const std::exception& e) {
      reply = {{"ok", false}, {"error", e.what()}};
    }
    out << reply.dump() << '\n' << std::flush;
  }
}

}  // namespace ridge
