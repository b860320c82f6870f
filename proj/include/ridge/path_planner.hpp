#pragma once

#include <optional>
#include <vector>

#include "ridge/terrain.hpp"

namespace ridge {

struct GridCell {
  int x = 0;
  int y = 0;
  friend bool operator==(const GridCell&, const GridCell&) = default;
};

struct GridPath {
  std::vector<GridCell> cells;  // start..goal inclusive
  int straight_steps = 0;
  int diagonal_steps = 0;
  std::size_t expanded = 0;

  /// Path length in cell units, evaluated from the step counts so equal-cost
  /// paths compare exactly.
  double cost() const;
};

/// 8-connected A* with an octile heuristic over free cells. Diagonal moves
/// require both orthogonal neighbours to be free. Returns nullopt when the
/// goal is unreachable.
std::optional<GridPath> astar(const OccupancyGrid& blocked, GridCell start, GridCell goal);

/// Cells reachable from start (used to explain planning failures).
std::vector<std::uint8_t> reachable_region(const OccupancyGrid& blocked, GridCell start);

/// Blocking grid for the holonomic global planner: inflation plus half a cell
/// diagonal, so every segment between adjacent free cells clears the
/// inflated footprints.
OccupancyGrid planning_grid(const HeightField& field, const std::vector<Obstacle>& obstacles,
                            double clearance);

/// True when segment ab keeps at least footprint + clearance from every obstacle centre.
bool segment_clear(Vec2 a, Vec2 b, const std::vector<Obstacle>& obstacles, double clearance);

/// Greedy line-of-sight shortcutting: from each kept vertex jump to the
/// farthest later vertex reachable by a clear segment.
std::vector<Vec2> shortcut_path(const std::vector<Vec2>& polyline, const std::vector<Obstacle>& obstacles,
                                double clearance);

/// Drops interior vertices that are collinear with their neighbours.
std::vector<Vec2> simplify_collinear(const std::vector<Vec2>& polyline);

/// Global path for one task; endpoints coincide with start and goal.
/// Throws PlanningError naming the obstacles that enclose the start region.
std::vector<Vec2> plan_global_path(const EnvironmentSpec& env, int task_id);
std::vector<Vec2> plan_global_path(const HeightField& field, const std::vector<Obstacle>& obstacles,
                                   double clearance, Vec2 start, Vec2 goal);

double polyline_length(const std::vector<Vec2>& polyline);

}  // namespace ridge
