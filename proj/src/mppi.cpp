#include "ridge/mppi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ridge/rng.hpp"

namespace ridge {

using nlohmann::json;

Bicycle2DState bicycle_step(const Bicycle2DState& s, const Action& raw, const BicycleModel& m, double dt) {
  const Action a = raw.clamped();
  const double delta = a.steering * m.max_steer_angle;
  Bicycle2DState n = s;
  n.x += s.speed * std::cos(s.yaw) * dt;
  n.y += s.speed * std::sin(s.yaw) * dt;
  n.yaw = wrap_angle(s.yaw + s.speed / m.wheelbase * std::tan(delta) * dt);
  const double accel = a.throttle * m.max_accel - a.braking * m.max_decel;
  n.speed = std::clamp(s.speed + accel * dt, 0.0, m.max_speed);
  return n;
}

std::vector<double> mppi_weights(std::span<const double> costs, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("mppi: lambda must be positive");
  std::vector<double> w(costs.size(), 0.0);
  if (costs.empty()) return w;
  const double lo = *std::min_element(costs.begin(), costs.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    w[i] = std::exp(-(costs[i] - lo) / lambda);
    sum += w[i];
  }
  for (double& x : w) x /= sum;
  return w;
}

namespace kernels {

namespace {

// Counter-based normal stream for one rollout.
class RolloutNoise {
 public:
  RolloutNoise(const MppiSampling& s, int rollout)
      : state_(derive_seed(s.seed, "mppi-noise", s.iteration * static_cast<std::uint64_t>(s.rollouts) +
                                                     static_cast<std::uint64_t>(rollout))) {}

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * uniform());
  }

 private:
  double uniform() {
    state_ += 0x9E3779B97F4A7C15ull;
    return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
  }
  std::uint64_t state_;
};

void sample_and_cost(const MppiSampling& sampling, std::span<const MppiControl> nominal, const SequenceCost& cost,
                     std::span<MppiControl> samples, std::span<double> costs, int i) {
  const std::size_t h = nominal.size();
  auto seq = samples.subspan(static_cast<std::size_t>(i) * h, h);
  if (i == 0) {
    std::copy(nominal.begin(), nominal.end(), seq.begin());
  } else {
    RolloutNoise noise(sampling, i);
    for (std::size_t t = 0; t < h; ++t) {
      const double ds = noise.normal() * sampling.noise_std.x();
      const double dt = noise.normal() * sampling.noise_std.y();
      seq[t] = MppiControl(std::clamp(nominal[t].x() + ds, -1.0, 1.0), std::clamp(nominal[t].y() + dt, -1.0, 1.0));
    }
  }
  costs[static_cast<std::size_t>(i)] = cost(seq, i);
}

}  // namespace

void mppi_rollouts_serial(const MppiSampling& sampling, std::span<const MppiControl> nominal,
                          const SequenceCost& cost, std::span<MppiControl> samples, std::span<double> costs) {
  for (int i = 0; i < sampling.rollouts; ++i) sample_and_cost(sampling, nominal, cost, samples, costs, i);
}

void mppi_rollouts_parallel(const MppiSampling& sampling, std::span<const MppiControl> nominal,
                            const SequenceCost& cost, std::span<MppiControl> samples, std::span<double> costs) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < sampling.rollouts; ++i) sample_and_cost(sampling, nominal, cost, samples, costs, i);
}

}  // namespace kernels

MppiIterationResult mppi_iterate(const MppiSampling& sampling, std::vector<MppiControl>& nominal,
                                 const SequenceCost& cost, bool parallel) {
  if (sampling.rollouts < 1) throw ConfigError("mppi: rollouts must be >= 1");
  const std::size_t h = nominal.size();
  std::vector<MppiControl> samples(static_cast<std::size_t>(sampling.rollouts) * h);
  MppiIterationResult result;
  result.costs.resize(static_cast<std::size_t>(sampling.rollouts));
  if (parallel) {
    kernels::mppi_rollouts_parallel(sampling, nominal, cost, samples, result.costs);
  } else {
    kernels::mppi_rollouts_serial(sampling, nominal, cost, samples, result.costs);
  }
  result.min_cost = *std::min_element(result.costs.begin(), result.costs.end());
  const auto w = mppi_weights(result.costs, sampling.lambda);
  // Fixed rollout order keeps the average independent of the thread count.
  for (std::size_t t = 0; t < h; ++t) {
    MppiControl acc = MppiControl::Zero();
    for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * samples[i * h + t];
    nominal[t] = acc;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Controller

void MppiParams::validate() const {
  if (horizon_steps < 1) throw ConfigError("mppi: horizon_steps must be >= 1");
  if (rollouts < 1) throw ConfigError("mppi: rollouts must be >= 1");
  if (!(lambda > 0.0)) throw ConfigError("mppi: lambda must be positive");
  if (!(step_dt > 0.0)) throw ConfigError("mppi: step_dt must be positive");
  if (!(steering_noise_std >= 0.0) || !(throttle_noise_std >= 0.0)) throw ConfigError("mppi: noise std must be >= 0");
}

MppiParams MppiParams::from_json(const json& j) {
  MppiParams p;
  auto read = [&](const char* key, auto& v) {
    if (j.contains(key)) v = j.at(key).get<std::decay_t<decltype(v)>>();
  };
  read("horizon_steps", p.horizon_steps);
  read("step_dt", p.step_dt);
  read("rollouts", p.rollouts);
  read("lambda", p.lambda);
  read("steering_noise_std", p.steering_noise_std);
  read("throttle_noise_std", p.throttle_noise_std);
  read("goal_weight", p.goal_weight);
  read("obstacle_weight", p.obstacle_weight);
  read("boundary_weight", p.boundary_weight);
  read("lookahead", p.lookahead);
  read("cruise_speed", p.cruise_speed);
  read("speed_gain", p.speed_gain);
  read("parallel", p.parallel);
  p.validate();
  return p;
}

json MppiParams::to_json() const {
  return {{"horizon_steps", horizon_steps},
          {"step_dt", step_dt},
          {"rollouts", rollouts},
          {"lambda", lambda},
          {"steering_noise_std", steering_noise_std},
          {"throttle_noise_std", throttle_noise_std},
          {"goal_weight", goal_weight},
          {"obstacle_weight", obstacle_weight},
          {"boundary_weight", boundary_weight},
          {"lookahead", lookahead},
          {"cruise_speed", cruise_speed},
          {"speed_gain", speed_gain},
          {"parallel", parallel}};
}

MppiController::MppiController(const ControllerContext& ctx, MppiParams params) : ctx_(ctx), params_(params) {
  params_.validate();
  const auto& v = ctx.vehicle;
  model_.wheelbase = v.wheelbase;
  model_.max_steer_angle = v.max_steer_angle;
  model_.max_accel = v.max_drive_force / v.mass;
  model_.max_decel = std::min(v.max_brake_force / v.mass, 0.6 * kGravity);
  model_.max_speed = params_.cruise_speed * ctx.speed_scale();
  reset();
}

void MppiController::reset() {
  nominal_.assign(static_cast<std::size_t>(params_.horizon_steps), MppiControl(0.0, 0.0));
  tick_ = 0;
  status_ = {};
}

Action MppiController::act(const ControllerInput& in) {
  const VehicleState& vs = in.vehicle_state;
  const Bicycle2DState start{vs.position.x(), vs.position.y(), vs.yaw(), std::max(0.0, vs.forward_speed())};
  Vec2 carrot = in.goal;
  if (!in.global_path.empty()) {
    const auto proj = project_onto_path(in.global_path, vs.planar_position());
    carrot = point_at_arc_length(in.global_path, proj.arc_length + params_.lookahead * ctx_.length_scale);
  }

  const OccupancyGrid* occ = in.occupancy;
  const double extent_x = occ ? (occ->cells_x - 1) * occ->resolution : std::numeric_limits<double>::infinity();
  const double extent_y = occ ? (occ->cells_y - 1) * occ->resolution : std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> collided(static_cast<std::size_t>(params_.rollouts), 0);
  const SequenceCost cost = [&](std::span<const MppiControl> controls, int rollout) {
    Bicycle2DState s = start;
    bool hit = false, outside = false;
    for (const auto& u : controls) {
      s = bicycle_step(s, to_action(u), model_, params_.step_dt);
      if (s.x < 0.0 || s.y < 0.0 || s.x > extent_x || s.y > extent_y) {
        outside = true;
      } else if (occ && occ->occupied_at(s.x, s.y)) {
        hit = true;
      }
    }
    collided[static_cast<std::size_t>(rollout)] = hit ? 1 : 0;
    double c = params_.goal_weight * std::hypot(s.x - carrot.x(), s.y - carrot.y()) / ctx_.length_scale;
    if (hit) c += params_.obstacle_weight;
    if (outside) c += params_.boundary_weight;
    return c;
  };

  MppiSampling sampling;
  sampling.rollouts = params_.rollouts;
  sampling.lambda = params_.lambda;
  sampling.noise_std = Eigen::Vector2d(params_.steering_noise_std, params_.throttle_noise_std);
  sampling.seed = ctx_.seed;
  sampling.iteration = tick_++;
  mppi_iterate(sampling, nominal_, cost, params_.parallel);

  status_.emergency = std::all_of(collided.begin(), collided.end(), [](std::uint8_t c) { return c != 0; });
  const MppiControl u0 = nominal_.front();
  std::rotate(nominal_.begin(), nominal_.begin() + 1, nominal_.end());
  nominal_.back() = nominal_[nominal_.size() >= 2 ? nominal_.size() - 2 : 0];
  if (status_.emergency) return Action{0.0, 0.0, 1.0};

  const double planned = bicycle_step(start, to_action(u0), model_, params_.step_dt).speed;
  Action a = speed_command(planned, vs.forward_speed(), params_.speed_gain / ctx_.speed_scale());
  a.steering = u0.x();
  return a.clamped();
}

}  // namespace ridge
