#pragma once

#include <array>
#include <deque>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ridge/soil.hpp"
#include "ridge/terrain.hpp"

namespace ridge {

inline constexpr int kWheelCount = 4;  // FL, FR, RL, RR
inline constexpr double kDefaultDt = 0.005;
inline constexpr double kMaxDt = 0.02;

struct VehicleParams {
  std::string name = "hmmwv";
  Scale scale = Scale::Full;
  double mass = 0.0;                      // kg
  Vec3 inertia = Vec3::Zero();            // principal, kg·m^2
  double wheelbase = 0.0;                 // m
  double track_width = 0.0;               // m
  double com_height = 0.0;                // above the axle plane, m
  double wheel_radius = 0.0;
  double wheel_width = 0.0;
  double suspension_stiffness = 0.0;      // N/m per wheel
  double suspension_damping = 0.0;        // N·s/m per wheel
  double suspension_travel = 0.0;         // m
  double bump_stop_stiffness = 0.0;       // N/m beyond full travel
  double bump_stop_damping = 0.0;         // N·s/m, extra damping beyond full travel
  double max_steer_angle = 0.0;           // rad
  double max_drive_force = 0.0;           // N, all wheels together
  double max_brake_force = 0.0;           // N, all wheels together
  double max_speed = 0.0;                 // m/s, drive force fades to zero here
  double rolling_resistance = 0.0;        // coefficient on normal load
  double tire_stiffness = 0.0;            // N/m tangential bristle
  double tire_damping = 0.0;              // N·s/m
  double tire_relaxation_length = 0.0;    // m
  Vec3 chassis_half_extents = Vec3::Zero();
  double chassis_center_height = 0.0;     // box centre above the COM, m
  double chassis_contact_stiffness = 0.0; // chassis corners against terrain
  double chassis_contact_damping = 0.0;
  double chassis_friction = 0.5;
  double obstacle_stiffness = 0.0;        // penalty contact against obstacles
  double obstacle_damping = 0.0;

  void validate() const;
  /// Static compression of each spring under a quarter of the weight.
  double static_compression() const;
  /// Distance from ground to COM with the suspension at static compression.
  double ride_height() const;

  nlohmann::json to_json() const;
  static VehicleParams from_json(const nlohmann::json& j);
  /// Every field including the derived contact terms; round-trips exactly.
  nlohmann::json exact_json() const;
  static VehicleParams from_exact_json(const nlohmann::json& j);
};

/// Named presets from the built-in table ("hmmwv"); lengths x s, mass and
/// forces x s^3, inertia x s^5 for scaled variants.
VehicleParams vehicle_preset(std::string_view name, Scale scale);
VehicleParams vehicle_preset(const std::filesystem::path& presets_file, std::string_view name, Scale scale);
std::vector<std::string> vehicle_preset_names();
VehicleParams scale_vehicle(const VehicleParams& full, Scale scale);

struct Action {
  double steering = 0.0;  // [-1, 1], left positive
  double throttle = 0.0;  // [0, 1]
  double braking = 0.0;   // [0, 1]

  Action clamped() const;
  friend bool operator==(const Action&, const Action&) = default;
};

struct WheelContact {
  bool in_contact = false;
  SemanticClass surface = SemanticClass::Dirt;
  friend bool operator==(const WheelContact&, const WheelContact&) = default;
};

struct VehicleState {
  Vec3 position = Vec3::Zero();          // COM, world frame
  Quat orientation = Quat::Identity();   // body -> world
  Vec3 linear_velocity = Vec3::Zero();   // world frame
  Vec3 angular_velocity = Vec3::Zero();  // body frame
  std::array<double, kWheelCount> wheel_compression{};
  std::array<WheelContact, kWheelCount> wheel_contact{};
  std::array<Vec2, kWheelCount> tire_deflection{Vec2::Zero(), Vec2::Zero(), Vec2::Zero(), Vec2::Zero()};
  double sim_time = 0.0;

  double roll() const;
  double pitch() const;
  double yaw() const;
  /// Velocity component along the body x axis.
  double forward_speed() const;
  Vec2 planar_position() const { return position.head<2>(); }
  bool finite() const;

  friend bool operator==(const VehicleState& a, const VehicleState& b);
};

struct WheelDiagnostics {
  double normal_force = 0.0;
  Vec2 tire_force = Vec2::Zero();  // longitudinal, lateral in the contact plane
  double traction_limit = 0.0;     // mu * N
  double sinkage = 0.0;
};

struct StepDiagnostics {
  std::array<WheelDiagnostics, kWheelCount> wheels{};
  double obstacle_force = 0.0;
  double chassis_ground_force = 0.0;
};

class SimulationFault : public Error {
 public:
  SimulationFault(const std::string& what, VehicleState last_valid)
      : Error(what), last_valid_(std::move(last_valid)) {}
  const VehicleState& last_valid() const { return last_valid_; }

 private:
  VehicleState last_valid_;
};

// Surface seen by the vehicle: the environment heightfield lowered by any
// plastic soil sinkage. Queries are clamped to the world.
class TerrainSurface {
 public:
  TerrainSurface(const EnvironmentSpec& env, const SoilState& soil) : env_(env), soil_(soil) {}

  double height(double x, double y) const;
  Vec3 normal(double x, double y) const;
  const PatchSemantics& patch(double x, double y) const;
  int cell_index(double x, double y) const;

 private:
  const EnvironmentSpec& env_;
  const SoilState& soil_;
};

/// Sunk surface height with a bounds check.
double surface_height_at(const EnvironmentSpec& env, const SoilState& soil, double x, double y);

/// Upright state resting on the terrain at (x, y) with the given yaw, body
/// aligned with the plane through the four wheel footprints.
VehicleState spawn_state(const VehicleParams& params, const EnvironmentSpec& env, const SoilState& soil, Vec2 xy,
                         double yaw);

// Fixed-step simulator that owns the mutable vehicle and soil state.
class Simulator {
 public:
  Simulator(const EnvironmentSpec& env, VehicleParams params, VehicleState initial, SoilState soil = {});

  /// Advances one step of length dt in (0, 0.02]. Throws SimulationFault if
  /// the state becomes non-finite; the state is left at the last valid one.
  const StepDiagnostics& step(const Action& action, double dt = kDefaultDt);

  const VehicleState& state() const { return state_; }
  const SoilState& soil() const { return soil_; }
  const VehicleParams& params() const { return params_; }
  const EnvironmentSpec& environment() const { return env_; }
  const StepDiagnostics& diagnostics() const { return diag_; }
  void reset(VehicleState state, SoilState soil = {});

 private:
  const EnvironmentSpec& env_;
  VehicleParams params_;
  VehicleState state_;
  SoilState soil_;
  StepDiagnostics diag_;
};

struct StepResult {
  VehicleState state;
  SoilState soil;
  StepDiagnostics diagnostics;
};

/// Value-semantics form of Simulator::step.
StepResult step(const VehicleState& state, const SoilState& soil, const Action& action, const EnvironmentSpec& env,
                const VehicleParams& params, double dt = kDefaultDt);

inline constexpr double kDefaultRolloverThreshold = 60.0 * kPi / 180.0;

bool detect_rollover(const VehicleState& state, double threshold = kDefaultRolloverThreshold);

struct PoseSample {
  double t = 0.0;
  Vec2 xy = Vec2::Zero();
};

/// True when the window spans at least `window` seconds and the net planar
/// displacement across the last `window` seconds is below epsilon.
bool detect_stuck(const std::deque<PoseSample>& history, double window, double epsilon);

}  // namespace ridge
