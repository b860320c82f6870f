#pragma once

#include <array>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "ridge/terrain.hpp"

namespace ridge {

struct FrictionDistribution {
  double mean = 0.5;
  double stddev = 0.05;
};

// Physics distributions per semantics class. Defaults ship in
// config/semantics.json; the built-in table mirrors that file.
struct SemanticsTable {
  std::array<double, kSemanticClassCount> class_weights{};                  // sampling weight per class
  std::array<FrictionDistribution, kSemanticClassCount> friction{};        // rigid classes
  std::array<std::array<double, 3>, kSemanticClassCount> soil_level_weights{};  // deformable classes
  std::array<ScmParams, 3> soil_levels{};                                   // Soft, Medium, Hard
  double friction_min = 0.05;
  double friction_max = 1.5;

  static SemanticsTable defaults();
  static SemanticsTable from_json(const nlohmann::json& j);
  static SemanticsTable load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Soil constants for a level, with lengths rescaled for a scaled world.
  ScmParams soil(SoilLevel level, double scale = 1.0) const;
};

}  // namespace ridge
