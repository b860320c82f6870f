#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ridge/terrain.hpp"
#include "ridge/vehicle.hpp"

namespace ridge {

// Square window of ground-truth heights aligned with the world grid. Cells
// beyond the world edge repeat the border value.
struct ElevationWindow {
  int origin_x = 0;  // world cell of window column 0
  int origin_y = 0;
  int size = 0;      // cells per side
  double resolution = 1.0;
  std::vector<double> heights;  // row-major, size * size

  double at(int col, int row) const { return heights[static_cast<std::size_t>(row) * size + col]; }
  /// World coordinates of a window cell centre.
  Vec2 cell_center(int col, int row) const {
    return {(origin_x + col) * resolution, (origin_y + row) * resolution};
  }
};

/// Window of `2 * half_cells + 1` cells per side centred on the cell nearest to `center`.
ElevationWindow extract_elevation_window(const HeightField& field, Vec2 center, int half_cells);

struct ControllerInput {
  VehicleState vehicle_state;
  ElevationWindow elevation_window;
  const OccupancyGrid* occupancy = nullptr;
  std::span<const Vec2> global_path;
  Vec2 goal = Vec2::Zero();
};

/// Per-episode context shared by every controller.
struct ControllerContext {
  VehicleParams vehicle;
  double length_scale = 1.0;
  double control_period = 0.1;  // s
  std::uint64_t seed = 0;
  /// Speeds scale with the square root of length (Froude similarity).
  double speed_scale() const;
};

struct ControllerStatus {
  bool emergency = false;  // MPPI found no feasible rollout this tick
};

// A controller maps one observation to one action per control tick.
// Implementations may keep warm-start state; reset() clears it.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string_view id() const = 0;
  virtual void reset() = 0;
  virtual Action act(const ControllerInput& input) = 0;
  virtual ControllerStatus status() const { return {}; }
};

// Shared helpers ------------------------------------------------------------

struct PathProjection {
  double arc_length = 0.0;
  double distance = 0.0;  // cross-track
};

/// Closest point on the polyline to p (first one on ties).
PathProjection project_onto_path(std::span<const Vec2> path, Vec2 p);
/// Point at arc length s, clamped to the polyline ends.
Vec2 point_at_arc_length(std::span<const Vec2> path, double s);

/// Proportional speed loop: positive error -> throttle, negative -> brake.
Action speed_command(double target_speed, double current_speed, double gain);

// PID path follower ----------------------------------------------------------

struct PidParams {
  double lookahead = 10.0;     // m, full scale
  double kp = 1.2;
  double ki = 0.0;
  double kd = 0.1;
  double target_speed = 3.0;   // m/s, full scale
  double speed_gain = 1.0;     // throttle per (m/s) of error, full scale

  static PidParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

class PidController final : public Controller {
 public:
  PidController(const ControllerContext& ctx, PidParams params = {});
  std::string_view id() const override { return "pid"; }
  void reset() override;
  Action act(const ControllerInput& input) override;

  /// Local goal for the given input: path point `lookahead` past the projection.
  Vec2 local_goal(const ControllerInput& input) const;

 private:
  ControllerContext ctx_;
  PidParams params_;
  double integral_ = 0.0;
  double previous_error_ = 0.0;
  bool has_previous_ = false;
};

// Elevation heuristic ---------------------------------------------------------

struct EhParams {
  double fan_radius = 12.0;       // m, full scale
  double fan_half_angle = kPi / 3.0;
  int sectors = 5;
  double alpha = 1.0;             // variance weight
  double current_radius = 2.5;    // m, full scale: cells describing the current patch
  double tie_tolerance = 0.5;     // m, full scale: scores this close count as equal
  double kp = 1.2;
  double lookahead = 10.0;        // m, full scale, defines the path direction for ties
  double target_speed = 3.0;
  double speed_gain = 1.0;

  static EhParams from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct SectorStats {
  int count = 0;
  double mean = 0.0;
  double variance = 0.0;  // population variance
  double score = 0.0;
  double bisector = 0.0;  // relative to the vehicle heading, rad
};

struct EhDecision {
  std::vector<SectorStats> sectors;
  double current_mean = 0.0;
  int chosen = -1;
};

/// Sector statistics of the fan in front of a pose, from the window cells
/// whose centres fall inside it. Fan geometry is in world units.
EhDecision evaluate_sectors(const ElevationWindow& window, Vec2 position, double yaw, const EhParams& scaled,
                            double path_bearing);

class ElevationHeuristicController final : public Controller {
 public:
  ElevationHeuristicController(const ControllerContext& ctx, EhParams params = {});
  std::string_view id() const override { return "eh"; }
  void reset() override {}
  Action act(const ControllerInput& input) override;

  /// Parameters with lengths converted to this world's scale.
  const EhParams& scaled_params() const { return scaled_; }
  const EhDecision& last_decision() const { return last_; }

 private:
  ControllerContext ctx_;
  EhParams scaled_;
  EhDecision last_;
};

// Registry --------------------------------------------------------------------

std::vector<std::string> controller_names();

/// Builds a registered controller ("pid", "eh", "mppi"). `params` overrides the
/// defaults of that controller. Unknown names throw LookupError listing the
/// registered ones.
std::unique_ptr<Controller> make_controller(std::string_view name, const ControllerContext& ctx,
                                            const nlohmann::json& params = nlohmann::json::object());

}  // namespace ridge
