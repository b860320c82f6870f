#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "ridge/common.hpp"

namespace ridge {

inline constexpr int kGridCells = 129;
inline constexpr int kPatchesPerAxis = 16;
inline constexpr int kPatchCells = 9;
inline constexpr int kPatchStride = kPatchCells - 1;
inline constexpr int kPatchCount = kPatchesPerAxis * kPatchesPerAxis;
inline constexpr int kTaskCount = 10;
inline constexpr int kFormatVersion = 1;

// Sixteen 9-cell patches sharing one seam cell tile 129 cells per axis.
static_assert(kPatchesPerAxis * kPatchStride + 1 == kGridCells);

enum class SemanticClass : std::uint8_t {
  Grass,
  Wood,
  Gravel,
  Dirt,
  Clay,
  Rock,
  Concrete,
  Snow,
  Mud,
  Sand,
};
inline constexpr int kSemanticClassCount = 10;

enum class SoilLevel : std::uint8_t { Soft, Medium, Hard };

bool is_deformable(SemanticClass c);
std::string_view to_string(SemanticClass c);
std::string_view to_string(SoilLevel level);
SemanticClass parse_semantic_class(std::string_view name);
SoilLevel parse_soil_level(std::string_view name);

/// Bekker-Wong soil constants for one deformability level.
struct ScmParams {
  double k_c = 0.0;        // cohesive modulus, Pa·m^-(n-1)
  double k_phi = 0.0;      // frictional modulus, Pa·m^-n
  double n_exp = 1.0;      // sinkage exponent
  double hardening = 0.0;  // multiplier growth per meter of plastic sinkage
  double damping = 0.0;    // N·s/m, sets the yield rate under excess load
  double traction = 0.5;   // Mohr-Coulomb tan(phi) used as tire traction limit
  SoilLevel level = SoilLevel::Medium;
};

inline constexpr double kRigidRestitution = 0.01;

struct PatchSemantics {
  SemanticClass semantic_class = SemanticClass::Dirt;
  std::optional<double> friction;     // rigid classes only
  std::optional<double> restitution;  // rigid classes only
  std::optional<ScmParams> scm;       // deformable classes only
  int cluster_id = 0;

  bool deformable() const { return scm.has_value(); }
  /// Tangential force limit per unit normal load on this patch.
  double traction() const { return scm ? scm->traction : *friction; }
};

struct HeightField {
  int cells_x = kGridCells;
  int cells_y = kGridCells;
  double resolution = 1.0;
  std::vector<double> elevations;  // row-major: elevations[iy * cells_x + ix]
  ElevationLevel elevation_level = ElevationLevel::High;

  double at(int ix, int iy) const { return elevations[static_cast<std::size_t>(iy) * cells_x + ix]; }
  double& at(int ix, int iy) { return elevations[static_cast<std::size_t>(iy) * cells_x + ix]; }
  double extent_x() const { return (cells_x - 1) * resolution; }
  double extent_y() const { return (cells_y - 1) * resolution; }
  bool contains(double x, double y) const;

  /// Bilinear height; throws BoundsError outside the grid.
  double height_at(double x, double y) const;
  /// Bilinear height with the query clamped into the grid.
  double height_at_clamped(double x, double y) const;
};

struct SemanticsLayer {
  std::vector<PatchSemantics> patches;  // kPatchCount, row-major (row = y)

  const PatchSemantics& patch(int row, int col) const {
    return patches[static_cast<std::size_t>(row) * kPatchesPerAxis + col];
  }
  /// Owning patch of a grid cell; seam cells go to the lower index.
  static int patch_row_of_cell(int cell) { return (cell > 0 ? cell - 1 : 0) / kPatchStride; }
  static int patch_index_of_cell(int ix, int iy) {
    return patch_row_of_cell(iy) * kPatchesPerAxis + patch_row_of_cell(ix);
  }
};

enum class ObstacleKind : std::uint8_t { Boulder, Tree };
std::string_view to_string(ObstacleKind k);

struct Obstacle {
  ObstacleKind kind = ObstacleKind::Boulder;
  Vec2 center = Vec2::Zero();
  double footprint_radius = 1.0;
  double height = 1.0;
};

struct ObstacleSet {
  std::vector<Obstacle> obstacles;
  ObstacleDensity density = ObstacleDensity::Sparse;
};

struct NavigationTask {
  int task_id = 0;
  Vec2 start = Vec2::Zero();
  double start_yaw = 0.0;
  Vec2 goal = Vec2::Zero();
  std::vector<Vec2> global_path;
};

struct EnvironmentSpec {
  std::uint64_t seed = 0;
  int format_version = kFormatVersion;
  Scale scale = Scale::Full;
  HeightField heightfield;
  SemanticsLayer semantics;
  ObstacleSet obstacles;
  std::vector<NavigationTask> tasks;
  double path_clearance = 2.5;       // inflation used by the global planner
  nlohmann::json generator_config;  // opaque record of the generating config

  ElevationLevel elevation_level() const { return heightfield.elevation_level; }
};

double height_at(const EnvironmentSpec& env, double x, double y);
Vec3 surface_normal_at(const EnvironmentSpec& env, double x, double y);
const PatchSemantics& semantics_at(const EnvironmentSpec& env, double x, double y);

/// Normal from a central-difference gradient (step resolution/2, one-sided at
/// the border) of the clamped bilinear surface. No bounds check.
Vec3 surface_normal_clamped(const HeightField& field, double x, double y);

struct OccupancyGrid {
  int cells_x = 0;
  int cells_y = 0;
  double resolution = 1.0;
  std::vector<std::uint8_t> occupied;

  bool at(int ix, int iy) const { return occupied[static_cast<std::size_t>(iy) * cells_x + ix] != 0; }
  /// Nearest-cell lookup; anything outside the grid reports occupied.
  bool occupied_at(double x, double y) const;
  std::size_t count() const;
};

OccupancyGrid rasterize_obstacles(const HeightField& field, const std::vector<Obstacle>& obstacles,
                                  double inflation);

struct GroundTruthMaps {
  HeightField elevation;
  std::vector<std::uint8_t> class_map;  // SemanticClass per cell, row-major
  OccupancyGrid occupancy;
};

GroundTruthMaps export_ground_truth(const EnvironmentSpec& env, double inflation);

/// Checks every structural invariant of a loaded or generated environment and
/// throws FormatError naming the first violation.
void validate_environment(const EnvironmentSpec& env);

}  // namespace ridge
