#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ridge/kernels.hpp"
#include "ridge/semantics_table.hpp"
#include "ridge/terrain.hpp"

namespace ridge {

struct ObstacleSizeRange {
  double radius_min = 1.0;
  double radius_max = 1.0;
  double height_min = 1.0;
  double height_max = 1.0;
};

struct WorldGenConfig {
  std::uint64_t seed = 0;
  std::optional<ElevationLevel> elevation_level;     // nullopt: 1/3 each
  std::optional<ObstacleDensity> obstacle_density;   // nullopt: 1/3 each
  double base_amplitude = 8.0;  // full-scale peak before level scaling, m
  int cluster_count_min = 3;
  int cluster_count_max = 8;
  Scale scale = Scale::Full;
  std::string elevation_generator = "value_noise";  // value_noise | flat
  kernels::NoiseParams noise;
  double vehicle_clearance = 2.5;  // full scale, m
  int obstacle_attempt_budget = 10000;
  ObstacleSizeRange boulder{1.5, 4.0, 1.5, 5.0};
  ObstacleSizeRange tree{0.4, 1.0, 4.0, 10.0};
  SemanticsTable semantics = SemanticsTable::defaults();
  bool parallel = true;  // use the OpenMP noise kernel

  void validate() const;
  ElevationLevel resolved_level() const;
  ObstacleDensity resolved_density() const;
  double length_scale() const { return scale_factor(scale); }

  nlohmann::json to_json() const;
  static WorldGenConfig from_json(const nlohmann::json& j);
};

/// Heightfield of the configured level. Values are normalized to zero mean
/// and +-base_amplitude peak; level scaling is the final multiply.
HeightField generate_elevation(const WorldGenConfig& config);

/// Patch index -> nearest centre index (Euclidean on patch centres; ties go
/// to the lower centre index).
std::vector<int> assign_patches_to_centers(const std::vector<Vec2>& centers, double resolution);

/// Makes every cluster 4-connected on the patch lattice: fragments other than
/// the largest are reassigned to the touching cluster with the nearest centre.
void connect_clusters(std::vector<int>& owner, const std::vector<Vec2>& centers, double resolution);

SemanticsLayer assign_semantics(const WorldGenConfig& config, const HeightField& field);

/// Ten diametrically opposite start/goal pairs on a 120 m circle about the
/// world centre, pair k at k * 18 degrees.
std::vector<NavigationTask> generate_tasks(const WorldGenConfig& config, const HeightField& field);

ObstacleSet place_obstacles(const WorldGenConfig& config, const std::vector<NavigationTask>& tasks,
                            const HeightField& field, std::uint64_t round = 0);

EnvironmentSpec generate_environment(const WorldGenConfig& config);

}  // namespace ridge
