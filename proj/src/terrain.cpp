#include "ridge/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <string>

namespace ridge {

namespace {

constexpr std::array<std::string_view, kSemanticClassCount> kClassNames = {
    "grass", "wood", "gravel", "dirt", "clay", "rock", "concrete", "snow", "mud", "sand"};

double bilinear(const HeightField& f, double x, double y) {
  const double fx = x / f.resolution;
  const double fy = y / f.resolution;
  const int ix = std::clamp(static_cast<int>(std::floor(fx)), 0, f.cells_x - 2);
  const int iy = std::clamp(static_cast<int>(std::floor(fy)), 0, f.cells_y - 2);
  const double tx = fx - ix;
  const double ty = fy - iy;
  const double h00 = f.at(ix, iy);
  const double h10 = f.at(ix + 1, iy);
  const double h01 = f.at(ix, iy + 1);
  const double h11 = f.at(ix + 1, iy + 1);
  return (h00 * (1.0 - tx) + h10 * tx) * (1.0 - ty) + (h01 * (1.0 - tx) + h11 * tx) * ty;
}

void require_in_bounds(const HeightField& f, double x, double y) {
  if (!f.contains(x, y)) {
    throw BoundsError(fmt::format("query ({}, {}) outside world [0, {}] x [0, {}]", x, y,
                                  f.extent_x(), f.extent_y()));
  }
}

}  // namespace

bool is_deformable(SemanticClass c) {
  return c == SemanticClass::Snow || c == SemanticClass::Mud || c == SemanticClass::Sand;
}

std::string_view to_string(SemanticClass c) { return kClassNames[static_cast<std::size_t>(c)]; }

std::string_view to_string(SoilLevel level) {
  switch (level) {
    case SoilLevel::Soft:
      return "soft";
    case SoilLevel::Medium:
      return "medium";
    case SoilLevel::Hard:
      return "hard";
  }
  return "?";
}

SemanticClass parse_semantic_class(std::string_view name) {
  for (std::size_t i = 0; i < kClassNames.size(); ++i) {
    if (kClassNames[i] == name) return static_cast<SemanticClass>(i);
  }
  throw FormatError("unknown semantics class '" + std::string(name) + "'");
}

SoilLevel parse_soil_level(std::string_view name) {
  if (name == "soft") return SoilLevel::Soft;
  if (name == "medium") return SoilLevel::Medium;
  if (name == "hard") return SoilLevel::Hard;
  throw FormatError("unknown soil level '" + std::string(name) + "'");
}

std::string_view to_string(ObstacleKind k) { return k == ObstacleKind::Boulder ? "boulder" : "tree"; }

bool HeightField::contains(double x, double y) const {
  return x >= 0.0 && y >= 0.0 && x <= extent_x() && y <= extent_y();
}

double HeightField::height_at(double x, double y) const {
  require_in_bounds(*this, x, y);
  return bilinear(*this, x, y);
}

double HeightField::height_at_clamped(double x, double y) const {
  return bilinear(*this, std::clamp(x, 0.0, extent_x()), std::clamp(y, 0.0, extent_y()));
}

double height_at(const EnvironmentSpec& env, double x, double y) {
  return env.heightfield.height_at(x, y);
}

Vec3 surface_normal_clamped(const HeightField& field, double x, double y) {
  const double h = 0.5 * field.resolution;
  const double x0 = std::max(x - h, 0.0), x1 = std::min(x + h, field.extent_x());
  const double y0 = std::max(y - h, 0.0), y1 = std::min(y + h, field.extent_y());
  const double dhdx = (field.height_at_clamped(x1, y) - field.height_at_clamped(x0, y)) / (x1 - x0);
  const double dhdy = (field.height_at_clamped(x, y1) - field.height_at_clamped(x, y0)) / (y1 - y0);
  return Vec3(-dhdx, -dhdy, 1.0).normalized();
}

Vec3 surface_normal_at(const EnvironmentSpec& env, double x, double y) {
  require_in_bounds(env.heightfield, x, y);
  return surface_normal_clamped(env.heightfield, x, y);
}

const PatchSemantics& semantics_at(const EnvironmentSpec& env, double x, double y) {
  const auto& f = env.heightfield;
  require_in_bounds(f, x, y);
  const int ix = std::clamp(static_cast<int>(std::lround(x / f.resolution)), 0, f.cells_x - 1);
  const int iy = std::clamp(static_cast<int>(std::lround(y / f.resolution)), 0, f.cells_y - 1);
  return env.semantics.patches[static_cast<std::size_t>(SemanticsLayer::patch_index_of_cell(ix, iy))];
}

bool OccupancyGrid::occupied_at(double x, double y) const {
  const long ix = std::lround(x / resolution);
  const long iy = std::lround(y / resolution);
  if (ix < 0 || iy < 0 || ix >= cells_x || iy >= cells_y) return true;
  return at(static_cast<int>(ix), static_cast<int>(iy));
}

std::size_t OccupancyGrid::count() const {
  return static_cast<std::size_t>(std::count(occupied.begin(), occupied.end(), std::uint8_t{1}));
}

OccupancyGrid rasterize_obstacles(const HeightField& field, const std::vector<Obstacle>& obstacles,
                                  double inflation) {
  OccupancyGrid grid{field.cells_x, field.cells_y, field.resolution,
                     std::vector<std::uint8_t>(static_cast<std::size_t>(field.cells_x) * field.cells_y, 0)};
  for (const auto& o : obstacles) {
    const double reach = o.footprint_radius + inflation;
    const int ix0 = std::max(0, static_cast<int>(std::floor((o.center.x() - reach) / field.resolution)));
    const int ix1 = std::min(field.cells_x - 1, static_cast<int>(std::ceil((o.center.x() + reach) / field.resolution)));
    const int iy0 = std::max(0, static_cast<int>(std::floor((o.center.y() - reach) / field.resolution)));
    const int iy1 = std::min(field.cells_y - 1, static_cast<int>(std::ceil((o.center.y() + reach) / field.resolution)));
    for (int iy = iy0; iy <= iy1; ++iy) {
      for (int ix = ix0; ix <= ix1; ++ix) {
        const Vec2 c(ix * field.resolution, iy * field.resolution);
        if ((c - o.center).norm() <= reach) {
          grid.occupied[static_cast<std::size_t>(iy) * grid.cells_x + ix] = 1;
        }
      }
    }
  }
  return grid;
}

GroundTruthMaps export_ground_truth(const EnvironmentSpec& env, double inflation) {
  if (!(inflation >= 0.0)) throw ConfigError("inflation must be >= 0");
  const auto& f = env.heightfield;
  GroundTruthMaps maps;
  maps.elevation = f;
  maps.class_map.resize(static_cast<std::size_t>(f.cells_x) * f.cells_y);
  for (int iy = 0; iy < f.cells_y; ++iy) {
    for (int ix = 0; ix < f.cells_x; ++ix) {
      const auto& patch = env.semantics.patches[static_cast<std::size_t>(SemanticsLayer::patch_index_of_cell(ix, iy))];
      maps.class_map[static_cast<std::size_t>(iy) * f.cells_x + ix] = static_cast<std::uint8_t>(patch.semantic_class);
    }
  }
  maps.occupancy = rasterize_obstacles(f, env.obstacles.obstacles, inflation);
  return maps;
}

void validate_environment(const EnvironmentSpec& env) {
  const auto& f = env.heightfield;
  const double s = scale_factor(env.scale);
  if (f.cells_x != kGridCells || f.cells_y != kGridCells) {
    throw FormatError(fmt::format("heightfield is {}x{}, expected {}x{}", f.cells_x, f.cells_y,
                                  kGridCells, kGridCells));
  }
  if (f.elevations.size() != static_cast<std::size_t>(kGridCells) * kGridCells) {
    throw FormatError("elevation buffer has wrong size");
  }
  if (std::abs(f.resolution - s) > 1e-12) {
    throw FormatError(fmt::format("resolution {} does not match scale {}", f.resolution, s));
  }
  for (double h : f.elevations) {
    if (!std::isfinite(h)) throw FormatError("non-finite elevation value");
  }
  if (env.semantics.patches.size() != static_cast<std::size_t>(kPatchCount)) {
    throw FormatError(fmt::format("expected {} semantic patches, found {}", kPatchCount,
                                  env.semantics.patches.size()));
  }
  for (const auto& p : env.semantics.patches) {
    const bool deform = is_deformable(p.semantic_class);
    if (deform != p.scm.has_value() || deform == p.friction.has_value() ||
        deform == p.restitution.has_value()) {
      throw FormatError(fmt::format("patch of class {} carries the wrong physics record",
                                    to_string(p.semantic_class)));
    }
    if (!deform && (!(*p.friction > 0.0) || *p.restitution != kRigidRestitution)) {
      throw FormatError("rigid patch friction must be > 0 and restitution 0.01");
    }
  }
  const auto& obs = env.obstacles.obstacles;
  if (static_cast<int>(obs.size()) != obstacle_count(env.obstacles.density)) {
    throw FormatError(fmt::format("{} obstacles for density {} (expected {})", obs.size(),
                                  to_string(env.obstacles.density), obstacle_count(env.obstacles.density)));
  }
  const double sep = 10.0 * s;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (!(obs[i].footprint_radius > 0.0) || !(obs[i].height > 0.0)) {
      throw FormatError(fmt::format("obstacle {} has non-positive size", i));
    }
    for (std::size_t j = i + 1; j < obs.size(); ++j) {
      if ((obs[i].center - obs[j].center).norm() < sep) {
        throw FormatError(fmt::format("obstacles {} and {} closer than {} m", i, j, sep));
      }
    }
  }
  if (env.tasks.size() != static_cast<std::size_t>(kTaskCount)) {
    throw FormatError(fmt::format("expected {} tasks, found {}", kTaskCount, env.tasks.size()));
  }
  for (const auto& t : env.tasks) {
    const double d = (t.goal - t.start).norm();
    if (std::abs(d - 120.0 * s) > 0.5 * s) {
      throw FormatError(fmt::format("task {} start-goal distance {} m", t.task_id, d));
    }
    for (const auto& o : obs) {
      if ((o.center - t.start).norm() < sep || (o.center - t.goal).norm() < sep) {
        throw FormatError(fmt::format("obstacle within {} m of task {} endpoint", sep, t.task_id));
      }
    }
    if (t.global_path.size() < 2 || (t.global_path.front() - t.start).norm() > 1e-9 ||
        (t.global_path.back() - t.goal).norm() > 1e-9) {
      throw FormatError(fmt::format("task {} global path does not join start and goal", t.task_id));
    }
    for (const auto& v : t.global_path) {
      for (const auto& o : obs) {
        if ((v - o.center).norm() < o.footprint_radius + env.path_clearance - 1e-9) {
          throw FormatError(fmt::format("task {} path vertex inside inflated obstacle", t.task_id));
        }
      }
    }
  }
}

}  // namespace ridge
