#pragma once

// Independent reference computations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "ridge/path_planner.hpp"

namespace ridge::test {

// Plain Dijkstra with the planner's move rules, as an oracle for A*.
inline double dijkstra_cost(const OccupancyGrid& g, GridCell s, GridCell t) {
  const int n = g.cells_x * g.cells_y;
  std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[static_cast<std::size_t>(s.y * g.cells_x + s.x)] = 0.0;
  pq.push({0.0, s.y * g.cells_x + s.x});
  while (!pq.empty()) {
    auto [d, id] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(id)]) continue;
    const int x = id % g.cells_x, y = id / g.cells_x;
    if (x == t.x && y == t.y) return d;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int nx = x + dx, ny = y + dy;
        if (nx < 0 || ny < 0 || nx >= g.cells_x || ny >= g.cells_y || g.at(nx, ny)) continue;
        if (dx != 0 && dy != 0 && (g.at(x + dx, y) || g.at(x, y + dy))) continue;
        const double nd = d + ((dx != 0 && dy != 0) ? std::sqrt(2.0) : 1.0);
        auto& slot = dist[static_cast<std::size_t>(ny * g.cells_x + nx)];
        if (nd < slot) {
          slot = nd;
          pq.push({nd, ny * g.cells_x + nx});
        }
      }
    }
  }
  return std::numeric_limits<double>::infinity();
}

inline double segment_point_distance(Vec2 a, Vec2 b, Vec2 p) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}


}  // namespace ridge::test
