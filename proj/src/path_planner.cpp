#include "ridge/path_planner.hpp"

#include <cmath>
#include <deque>
#include <queue>

#include <fmt/format.h>

namespace ridge {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr std::array<int, 8> kDx = {1, -1, 0, 0, 1, 1, -1, -1};
constexpr std::array<int, 8> kDy = {0, 0, 1, -1, 1, -1, 1, -1};

bool free_cell(const OccupancyGrid& g, int x, int y) {
  return x >= 0 && y >= 0 && x < g.cells_x && y < g.cells_y && !g.at(x, y);
}

double octile(GridCell a, GridCell b) {
  const int dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y);
  return std::max(dx, dy) + (kSqrt2 - 1.0) * std::min(dx, dy);
}

GridCell nearest_cell(const HeightField& f, Vec2 p) {
  return {std::clamp(static_cast<int>(std::lround(p.x() / f.resolution)), 0, f.cells_x - 1),
          std::clamp(static_cast<int>(std::lround(p.y() / f.resolution)), 0, f.cells_y - 1)};
}

}  // namespace

double GridPath::cost() const { return straight_steps + diagonal_steps * kSqrt2; }

std::optional<GridPath> astar(const OccupancyGrid& blocked, GridCell start, GridCell goal) {
  if (!free_cell(blocked, start.x, start.y) || !free_cell(blocked, goal.x, goal.y)) return std::nullopt;
  const int nx = blocked.cells_x;
  const std::size_t n = static_cast<std::size_t>(nx) * blocked.cells_y;
  auto index = [nx](int x, int y) { return static_cast<std::size_t>(y) * nx + x; };

  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<std::int32_t> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  g[index(start.x, start.y)] = 0.0;
  open.emplace(octile(start, goal), index(start.x, start.y));
  GridPath result;
  const std::size_t goal_idx = index(goal.x, goal.y);

  while (!open.empty()) {
    const auto [f, cur] = open.top();
    open.pop();
    if (closed[cur]) continue;
    closed[cur] = 1;
    ++result.expanded;
    if (cur == goal_idx) break;
    const int cx = static_cast<int>(cur % nx), cy = static_cast<int>(cur / nx);
    for (int k = 0; k < 8; ++k) {
      const int x = cx + kDx[k], y = cy + kDy[k];
      if (!free_cell(blocked, x, y)) continue;
      const bool diagonal = k >= 4;
      if (diagonal && (!free_cell(blocked, cx + kDx[k], cy) || !free_cell(blocked, cx, cy + kDy[k]))) continue;
      const std::size_t nb = index(x, y);
      if (closed[nb]) continue;
      const double cand = g[cur] + (diagonal ? kSqrt2 : 1.0);
      if (cand < g[nb]) {
        g[nb] = cand;
        parent[nb] = static_cast<std::int32_t>(cur);
        open.emplace(cand + octile({x, y}, goal), nb);
      }
    }
  }
  if (!closed[goal_idx]) return std::nullopt;

  for (std::int64_t c = static_cast<std::int64_t>(goal_idx); c >= 0; c = parent[static_cast<std::size_t>(c)]) {
    result.cells.push_back({static_cast<int>(c % nx), static_cast<int>(c / nx)});
  }
  std::reverse(result.cells.begin(), result.cells.end());
  for (std::size_t i = 1; i < result.cells.size(); ++i) {
    const bool diagonal = result.cells[i].x != result.cells[i - 1].x && result.cells[i].y != result.cells[i - 1].y;
    (diagonal ? result.diagonal_steps : result.straight_steps) += 1;
  }
  return result;
}

std::vector<std::uint8_t> reachable_region(const OccupancyGrid& blocked, GridCell start) {
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(blocked.cells_x) * blocked.cells_y, 0);
  if (!free_cell(blocked, start.x, start.y)) return seen;
  std::deque<GridCell> queue{start};
  seen[static_cast<std::size_t>(start.y) * blocked.cells_x + start.x] = 1;
  while (!queue.empty()) {
    const auto c = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      const int x = c.x + kDx[k], y = c.y + kDy[k];
      if (!free_cell(blocked, x, y)) continue;
      auto& s = seen[static_cast<std::size_t>(y) * blocked.cells_x + x];
      if (!s) {
        s = 1;
        queue.push_back({x, y});
      }
    }
  }
  return seen;
}

OccupancyGrid planning_grid(const HeightField& field, const std::vector<Obstacle>& obstacles,
                            double clearance) {
  return rasterize_obstacles(field, obstacles, clearance + 0.5 * kSqrt2 * field.resolution);
}

std::vector<Vec2> simplify_collinear(const std::vector<Vec2>& polyline) {
  if (polyline.size() < 3) return polyline;
  std::vector<Vec2> out{polyline.front()};
  for (std::size_t i = 1; i + 1 < polyline.size(); ++i) {
    const Vec2 a = polyline[i] - out.back();
    const Vec2 b = polyline[i + 1] - polyline[i];
    const double cross = a.x() * b.y() - a.y() * b.x();
    const double scale = a.norm() * b.norm();
    if (std::abs(cross) > 1e-9 * std::max(scale, 1e-12) || a.dot(b) < 0.0) out.push_back(polyline[i]);
  }
  out.push_back(polyline.back());
  return out;
}

std::vector<Vec2> plan_global_path(const HeightField& field, const std::vector<Obstacle>& obstacles,
                                   double clearance, Vec2 start, Vec2 goal) {
  const OccupancyGrid blocked = planning_grid(field, obstacles, clearance);
  const GridCell s = nearest_cell(field, start);
  const GridCell g = nearest_cell(field, goal);
  auto plan = astar(blocked, s, g);
  if (!plan) {
    const auto region = reachable_region(blocked, s);
    std::string names;
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      const auto& o = obstacles[i];
      const double reach = o.footprint_radius + clearance + field.resolution * 1.5;
      bool touches = false;
      for (int y = 0; y < field.cells_y && !touches; ++y) {
        for (int x = 0; x < field.cells_x && !touches; ++x) {
          if (region[static_cast<std::size_t>(y) * field.cells_x + x] &&
              (Vec2(x * field.resolution, y * field.resolution) - o.center).norm() <= reach) {
            touches = true;
          }
        }
      }
      if (touches) names += fmt::format("{}#{} at ({:.1f}, {:.1f}) ", to_string(o.kind), i, o.center.x(), o.center.y());
    }
    throw PlanningError(fmt::format(
        "no obstacle-free path from ({:.2f}, {:.2f}) to ({:.2f}, {:.2f}); the start region is enclosed by {}",
        start.x(), start.y(), goal.x(), goal.y(), names.empty() ? std::string("the world boundary") : names));
  }
  std::vector<Vec2> poly;
  poly.reserve(plan->cells.size() + 2);
  poly.push_back(start);
  for (const auto& c : plan->cells) poly.emplace_back(c.x * field.resolution, c.y * field.resolution);
  poly.push_back(goal);
  // Drop duplicated endpoints when start/goal sit exactly on a cell centre;
  // the exact goal wins over its cell.
  std::vector<Vec2> dedup;
  for (const auto& p : poly) {
    if (dedup.empty() || (p - dedup.back()).norm() > 1e-9) {
      dedup.push_back(p);
    } else if (&p == &poly.back()) {
      dedup.back() = p;
    }
  }
  return simplify_collinear(shortcut_path(dedup, obstacles, clearance));
}

bool segment_clear(Vec2 a, Vec2 b, const std::vector<Obstacle>& obstacles, double clearance) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  for (const auto& o : obstacles) {
    const double t = len2 > 0.0 ? std::clamp((o.center - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    if ((a + t * ab - o.center).norm() < o.footprint_radius + clearance) return false;
  }
  return true;
}

std::vector<Vec2> shortcut_path(const std::vector<Vec2>& polyline, const std::vector<Obstacle>& obstacles,
                                double clearance) {
  if (polyline.size() < 3) return polyline;
  std::vector<Vec2> out{polyline.front()};
  std::size_t anchor = 0;
  while (anchor + 1 < polyline.size()) {
    std::size_t next = anchor + 1;
    for (std::size_t j = polyline.size() - 1; j > anchor + 1; --j) {
      if (segment_clear(polyline[anchor], polyline[j], obstacles, clearance)) {
        next = j;
        break;
      }
    }
    out.push_back(polyline[next]);
    anchor = next;
  }
  return out;
}

std::vector<Vec2> plan_global_path(const EnvironmentSpec& env, int task_id) {
  if (task_id < 0 || task_id >= static_cast<int>(env.tasks.size())) {
    throw LookupError(fmt::format("task id {} out of range", task_id));
  }
  const auto& t = env.tasks[static_cast<std::size_t>(task_id)];
  return plan_global_path(env.heightfield, env.obstacles.obstacles, env.path_clearance, t.start, t.goal);
}

double polyline_length(const std::vector<Vec2>& polyline) {
  double len = 0.0;
  for (std::size_t i = 1; i < polyline.size(); ++i) len += (polyline[i] - polyline[i - 1]).norm();
  return len;
}

}  // namespace ridge
