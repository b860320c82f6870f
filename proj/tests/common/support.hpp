#pragma once

#include <cmath>
#include <functional>

#include "ridge/path_planner.hpp"
#include "ridge/semantics_table.hpp"
#include "ridge/terrain.hpp"
#include "ridge/worldgen.hpp"

namespace ridge::test {

// Hand-built environment with height h(x, y), one surface class everywhere
// and no obstacles. Tasks follow the standard layout.
inline EnvironmentSpec custom_env(const std::function<double(double, double)>& h, double friction = 0.9,
                                  SemanticClass cls = SemanticClass::Concrete, double resolution = 1.0) {
  EnvironmentSpec env;
  env.seed = 7;
  env.heightfield.resolution = resolution;
  env.heightfield.elevation_level = ElevationLevel::Low;
  env.heightfield.elevations.resize(static_cast<std::size_t>(kGridCells) * kGridCells);
  for (int iy = 0; iy < kGridCells; ++iy) {
    for (int ix = 0; ix < kGridCells; ++ix) env.heightfield.at(ix, iy) = h(ix * resolution, iy * resolution);
  }
  PatchSemantics patch;
  patch.semantic_class = cls;
  if (is_deformable(cls)) {
    patch.scm = SemanticsTable::defaults().soil(SoilLevel::Soft);
  } else {
    patch.friction = friction;
    patch.restitution = kRigidRestitution;
  }
  env.semantics.patches.assign(kPatchCount, patch);
  WorldGenConfig cfg;
  env.tasks = generate_tasks(cfg, env.heightfield);
  for (auto& t : env.tasks) {
    t.global_path = plan_global_path(env.heightfield, {}, env.path_clearance, t.start, t.goal);
  }
  return env;
}

inline EnvironmentSpec flat_env(double friction = 0.9, double resolution = 1.0) {
  return custom_env([](double, double) { return 0.0; }, friction, SemanticClass::Concrete, resolution);
}

/// Plane rising along +x at angle theta.
inline EnvironmentSpec incline_env(double theta, double friction) {
  return custom_env([t = std::tan(theta)](double x, double) { return t * x; }, friction);
}

inline EnvironmentSpec generated(std::uint64_t seed, ElevationLevel level,
                                 ObstacleDensity density = ObstacleDensity::Sparse) {
  WorldGenConfig c;
  c.seed = seed;
  c.elevation_level = level;
  c.obstacle_density = density;
  return generate_environment(c);
}

}  // namespace ridge::test
