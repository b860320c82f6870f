#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ridge/controllers.hpp"

namespace ridge {

struct Bicycle2DState {
  double x = 0.0;
  double y = 0.0;
  double yaw = 0.0;
  double speed = 0.0;
};

struct BicycleModel {
  double wheelbase = 3.3;
  double max_steer_angle = 0.5;
  double max_accel = 5.0;   // at full throttle, m/s^2
  double max_decel = 8.0;   // at full brake, m/s^2
  double max_speed = 3.0;
};

/// Kinematic bicycle, explicit Euler. Pose integrates with the speed at the
/// start of the step; speed is clamped to [0, max_speed].
Bicycle2DState bicycle_step(const Bicycle2DState& s, const Action& a, const BicycleModel& model, double dt);

// One MPPI control is (steering, signed throttle): u > 0 throttles, u < 0 brakes.
using MppiControl = Eigen::Vector2d;

inline Action to_action(const MppiControl& u) {
  return Action{u.x(), std::max(u.y(), 0.0), std::max(-u.y(), 0.0)}.clamped();
}

/// Softmin weights w_i = exp(-(S_i - min S) / lambda) / sum. Requires lambda > 0.
std::vector<double> mppi_weights(std::span<const double> costs, double lambda);

struct MppiSampling {
  int rollouts = 512;
  double lambda = 0.1;
  Eigen::Vector2d noise_std{0.3, 0.3};
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;  // selects the noise block; advance per update
};

/// Cost of one sampled sequence; `rollout` is its index. Must be safe to call
/// concurrently for distinct rollouts.
using SequenceCost = std::function<double(std::span<const MppiControl> controls, int rollout)>;

struct MppiIterationResult {
  std::vector<double> costs;
  double min_cost = 0.0;
};

namespace kernels {

/// Samples every rollout's control sequence (nominal + noise, clamped to
/// [-1, 1]; rollout 0 is the noise-free nominal) and evaluates its cost.
/// Noise for rollout i depends only on (seed, iteration, i), so both kernels
/// give bit-identical output.
void mppi_rollouts_serial(const MppiSampling& sampling, std::span<const MppiControl> nominal,
                          const SequenceCost& cost, std::span<MppiControl> samples, std::span<double> costs);
void mppi_rollouts_parallel(const MppiSampling& sampling, std::span<const MppiControl> nominal,
                            const SequenceCost& cost, std::span<MppiControl> samples, std::span<double> costs);

}  // namespace kernels

/// One MPPI update of `nominal` in place: sample, evaluate, reweight, and
/// average in rollout order.
MppiIterationResult mppi_iterate(const MppiSampling& sampling, std::vector<MppiControl>& nominal,
                                 const SequenceCost& cost, bool parallel);

struct MppiParams {
  int horizon_steps = 30;
  double step_dt = 0.1;            // s
  int rollouts = 512;
  double lambda = 0.1;
  double steering_noise_std = 0.3;
  double throttle_noise_std = 0.3;
  double goal_weight = 1.0;        // per meter of terminal distance to the carrot
  double obstacle_weight = 1000.0; // per rollout entering occupied space
  double boundary_weight = 1000.0; // per rollout leaving the world
  double lookahead = 10.0;         // m, full scale: carrot distance along the path
  double cruise_speed = 3.0;       // m/s, full scale: rollout model speed cap
  double speed_gain = 1.0;
  bool parallel = true;

  void validate() const;
  static MppiParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

class MppiController final : public Controller {
 public:
  MppiController(const ControllerContext& ctx, MppiParams params = {});
  std::string_view id() const override { return "mppi"; }
  void reset() override;
  Action act(const ControllerInput& input) override;
  ControllerStatus status() const override { return status_; }

  const std::vector<MppiControl>& nominal() const { return nominal_; }
  const BicycleModel& model() const { return model_; }

 private:
  ControllerContext ctx_;
  MppiParams params_;
  BicycleModel model_;
  std::vector<MppiControl> nominal_;
  std::uint64_t tick_ = 0;
  ControllerStatus status_;
};

}  // namespace ridge
