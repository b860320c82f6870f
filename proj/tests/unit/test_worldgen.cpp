#include <doctest.h>

#include <array>
#include <map>
#include <queue>

#include "ridge/kernels.hpp"
#include "ridge/path_planner.hpp"
#include "ridge/rng.hpp"
#include "ridge/worldgen.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace ridge;
using test::dijkstra_cost;
using test::segment_point_distance;

namespace {

double variance(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("generation is deterministic") {
  for (std::uint64_t seed : {0ull, 17ull, 123456789ull}) {
    WorldGenConfig c;
    c.seed = seed;
    const auto a = generate_environment(c);
    const auto b = generate_environment(c);
    CHECK(a.heightfield.elevations == b.heightfield.elevations);
    CHECK(a.obstacles.obstacles.size() == b.obstacles.obstacles.size());
    for (std::size_t i = 0; i < a.obstacles.obstacles.size(); ++i) {
      CHECK(a.obstacles.obstacles[i].center == b.obstacles.obstacles[i].center);
      CHECK(a.obstacles.obstacles[i].footprint_radius == b.obstacles.obstacles[i].footprint_radius);
    }
    for (int t = 0; t < kTaskCount; ++t) CHECK(a.tasks[t].global_path == b.tasks[t].global_path);
    CHECK(a.generator_config == b.generator_config);
  }
}

TEST_CASE("serial and parallel noise kernels are bit-identical") {
  kernels::NoiseParams p;
  std::vector<double> a(129 * 129), b(129 * 129);
  for (std::uint64_t seed : {1ull, 99ull, 0xDEADBEEFull}) {
    kernels::value_noise_serial(p, seed, 129, 129, a);
    kernels::value_noise_parallel(p, seed, 129, 129, b);
    CHECK(a == b);
    CHECK(a[129 * 40 + 17] == kernels::value_noise_at(p, seed, 17.0, 40.0));
  }
  WorldGenConfig c;
  c.seed = 5;
  c.parallel = false;
  const auto serial = generate_elevation(c);
  c.parallel = true;
  CHECK(generate_elevation(c).elevations == serial.elevations);
}

TEST_CASE("elevation is zero-mean, peak-normalized and level-scaled last") {
  WorldGenConfig c;
  c.seed = 21;
  c.elevation_level = ElevationLevel::High;
  const auto high = generate_elevation(c);
  double mean = 0.0, peak = 0.0;
  for (double z : high.elevations) {
    mean += z;
    peak = std::max(peak, std::abs(z));
  }
  CHECK(std::abs(mean / high.elevations.size()) < 1e-9);
  CHECK(peak == doctest::Approx(c.base_amplitude).epsilon(1e-12));

  c.elevation_level = ElevationLevel::Low;
  const auto low = generate_elevation(c);
  for (std::size_t i = 0; i < low.elevations.size(); ++i) {
    if (std::abs(low.elevations[i]) < 1e-6) continue;
    REQUIRE(std::abs(high.elevations[i] / low.elevations[i] - 10.0 / 3.0) < 1e-9);
  }

  c.elevation_generator = "flat";
  for (double z : generate_elevation(c).elevations) REQUIRE(z == 0.0);
}

TEST_CASE("variance grows with elevation level on matched seeds") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::array<double, 3> var{};
    for (int i = 0; i < 3; ++i) {
      WorldGenConfig c;
      c.seed = seed;
      c.elevation_level = kElevationLevels[static_cast<std::size_t>(i)];
      var[static_cast<std::size_t>(i)] = variance(generate_elevation(c).elevations);
    }
    CHECK(var[2] > var[1]);
    CHECK(var[1] > var[0]);
  }
}

TEST_CASE("task layout") {
  WorldGenConfig c;
  HeightField f;
  f.elevations.assign(129 * 129, 0.0);
  const auto tasks = generate_tasks(c, f);
  REQUIRE(tasks.size() == 10);
  CHECK(tasks[0].start.x() == doctest::Approx(124.0));
  CHECK(tasks[0].start.y() == doctest::Approx(64.0));
  CHECK(tasks[0].goal.x() == doctest::Approx(4.0));
  CHECK(tasks[0].goal.y() == doctest::Approx(64.0));
  std::vector<Vec2> ends;
  for (const auto& t : tasks) {
    CHECK((t.goal - t.start).norm() == doctest::Approx(120.0).epsilon(1e-12));
    const Vec2 d = t.goal - t.start;
    CHECK(std::abs(wrap_angle(t.start_yaw - std::atan2(d.y(), d.x()))) < 1e-12);
    ends.push_back(t.start);
    ends.push_back(t.goal);
  }
  for (std::size_t i = 0; i < ends.size(); ++i) {
    CHECK(f.contains(ends[i].x(), ends[i].y()));
    for (std::size_t j = i + 1; j < ends.size(); ++j) CHECK((ends[i] - ends[j]).norm() > 1.0);
  }

  c.scale = Scale::OneTenth;
  HeightField small = f;
  small.resolution = 0.1;
  for (const auto& t : generate_tasks(c, small)) CHECK((t.goal - t.start).norm() == doctest::Approx(12.0));
}

TEST_CASE("obstacle placement honours counts and spacing") {
  for (auto d : {ObstacleDensity::Sparse, ObstacleDensity::Medium, ObstacleDensity::Dense}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto env = test::generated(seed, ElevationLevel::Low, d);
      const auto& obs = env.obstacles.obstacles;
      CHECK(static_cast<int>(obs.size()) == obstacle_count(d));
      for (std::size_t i = 0; i < obs.size(); ++i) {
        for (std::size_t j = i + 1; j < obs.size(); ++j) CHECK((obs[i].center - obs[j].center).norm() >= 10.0);
        for (const auto& t : env.tasks) {
          CHECK((obs[i].center - t.start).norm() >= 10.0);
          CHECK((obs[i].center - t.goal).norm() >= 10.0);
        }
      }
    }
  }
  WorldGenConfig c;
  c.seed = 3;
  c.obstacle_density = ObstacleDensity::Dense;
  c.obstacle_attempt_budget = 1;
  c.boulder = {30.0, 30.0, 1.0, 1.0};
  c.tree = {30.0, 30.0, 1.0, 1.0};
  CHECK_THROWS_AS(generate_environment(c), GenerationError);
}

TEST_CASE("patch assignment equals a brute-force nearest-centre sweep") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec2> centers;
    const int k = rng.uniform_int(1, 8);
    for (int i = 0; i < k; ++i) centers.emplace_back(rng.uniform(0, 128), rng.uniform(0, 128));
    if (trial == 0) centers = {Vec2(0, 0), Vec2(128, 128)};
    const auto owner = assign_patches_to_centers(centers, 1.0);
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        const Vec2 pc(c * 8 + 4, r * 8 + 4);
        int best = 0;
        for (int i = 1; i < static_cast<int>(centers.size()); ++i) {
          if ((centers[static_cast<std::size_t>(i)] - pc).norm() < (centers[static_cast<std::size_t>(best)] - pc).norm()) best = i;
        }
        REQUIRE(owner[static_cast<std::size_t>(r * 16 + c)] == best);
      }
    }
  }
}

TEST_CASE("single cluster shares one class with sampled physics") {
  WorldGenConfig c;
  c.seed = 4;
  c.cluster_count_min = c.cluster_count_max = 1;
  HeightField f;
  f.elevations.assign(129 * 129, 0.0);
  bool saw_varied_friction = false;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    c.seed = seed;
    const auto layer = assign_semantics(c, f);
    for (const auto& p : layer.patches) REQUIRE(p.semantic_class == layer.patches[0].semantic_class);
    if (!layer.patches[0].deformable()) {
      saw_varied_friction = saw_varied_friction || *layer.patches[0].friction != *layer.patches[1].friction;
    }
  }
  CHECK(saw_varied_friction);
}

TEST_CASE("clusters are connected in the patch adjacency graph") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    WorldGenConfig c;
    c.seed = seed;
    HeightField f;
    f.elevations.assign(129 * 129, 0.0);
    const auto layer = assign_semantics(c, f);
    std::map<int, std::vector<int>> members;
    for (int p = 0; p < kPatchCount; ++p) members[layer.patches[static_cast<std::size_t>(p)].cluster_id].push_back(p);
    for (const auto& [cluster, list] : members) {
      std::vector<char> seen(kPatchCount, 0);
      std::vector<int> stack{list.front()};
      seen[static_cast<std::size_t>(list.front())] = 1;
      std::size_t reached = 0;
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        ++reached;
        const int r = p / 16, col = p % 16;
        const int nbr[4][2] = {{r - 1, col}, {r + 1, col}, {r, col - 1}, {r, col + 1}};
        for (auto [nr, nc] : nbr) {
          if (nr < 0 || nc < 0 || nr >= 16 || nc >= 16) continue;
          const int q = nr * 16 + nc;
          if (seen[static_cast<std::size_t>(q)] || layer.patches[static_cast<std::size_t>(q)].cluster_id != cluster) continue;
          seen[static_cast<std::size_t>(q)] = 1;
          stack.push_back(q);
        }
      }
      CHECK(reached == list.size());
    }
  }
}

TEST_CASE("rigid patches carry friction, deformable patches carry soil") {
  const auto env = test::generated(31, ElevationLevel::Medium);
  for (const auto& p : env.semantics.patches) {
    CHECK(p.deformable() == is_deformable(p.semantic_class));
    if (p.deformable()) {
      CHECK_FALSE(p.friction.has_value());
    } else {
      CHECK(*p.restitution == kRigidRestitution);
      CHECK(*p.friction >= 0.05);
    }
  }
}

TEST_CASE("elevation levels are drawn with equal probability") {
  std::array<int, 3> counts{};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    WorldGenConfig c;
    c.seed = seed;
    ++counts[static_cast<std::size_t>(c.resolved_level())];
  }
  for (int n : counts) CHECK(std::abs(n / 100.0 - 1.0 / 3.0) <= 0.15);
}

TEST_CASE("A* cost equals the Dijkstra oracle and paths clear inflated obstacles") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto env = test::generated(seed, ElevationLevel::Low, ObstacleDensity::Dense);
    const auto grid = planning_grid(env.heightfield, env.obstacles.obstacles, env.path_clearance);
    for (const auto& t : env.tasks) {
      const GridCell s{static_cast<int>(std::lround(t.start.x())), static_cast<int>(std::lround(t.start.y()))};
      const GridCell g{static_cast<int>(std::lround(t.goal.x())), static_cast<int>(std::lround(t.goal.y()))};
      const auto path = astar(grid, s, g);
      REQUIRE(path.has_value());
      CHECK(path->cost() == doctest::Approx(dijkstra_cost(grid, s, g)).epsilon(1e-12));

      REQUIRE(t.global_path.size() >= 2);
      CHECK(t.global_path.front() == t.start);
      CHECK(t.global_path.back() == t.goal);
      for (std::size_t i = 0; i + 1 < t.global_path.size(); ++i) {
        for (const auto& o : env.obstacles.obstacles) {
          CHECK(segment_point_distance(t.global_path[i], t.global_path[i + 1], o.center) >=
                o.footprint_radius + env.path_clearance - 1e-9);
        }
      }
    }
  }
}

TEST_CASE("unobstructed path is the straight line") {
  const auto env = test::flat_env();
  for (const auto& t : env.tasks) {
    const double len = polyline_length(t.global_path);
    CHECK(len >= 120.0 - 1e-9);
    CHECK(len <= 120.0 + std::sqrt(2.0));
  }
  CHECK(env.tasks[0].global_path.size() == 2);
}

TEST_CASE("one obstacle on the straight segment forces a detour") {
  HeightField f;
  f.elevations.assign(129 * 129, 0.0);
  const std::vector<Obstacle> obs{{ObstacleKind::Boulder, Vec2(64, 64), 3.0, 2.0}};
  const auto path = plan_global_path(f, obs, 2.5, Vec2(124, 64), Vec2(4, 64));
  CHECK(polyline_length(path) > 120.0);
  for (const auto& v : path) CHECK((v - obs[0].center).norm() >= 5.5);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) CHECK(segment_point_distance(path[i], path[i + 1], obs[0].center) >= 5.5);

  const auto grid = planning_grid(f, obs, 2.5);
  const auto a = astar(grid, {124, 64}, {4, 64});
  REQUIRE(a);
  CHECK(a->cost() == doctest::Approx(dijkstra_cost(grid, {124, 64}, {4, 64})).epsilon(1e-12));
}

TEST_CASE("enclosed start raises a planning error naming the obstacles") {
  HeightField f;
  f.elevations.assign(129 * 129, 0.0);
  std::vector<Obstacle> ring;
  for (int k = 0; k < 12; ++k) {
    const double a = 2.0 * kPi * k / 12.0;
    ring.push_back({ObstacleKind::Tree, Vec2(120, 64) + 8.0 * Vec2(std::cos(a), std::sin(a)), 2.0, 5.0});
  }
  try {
    plan_global_path(f, ring, 2.5, Vec2(120, 64), Vec2(4, 64));
    FAIL("expected PlanningError");
  } catch (const PlanningError& e) {
    CHECK(std::string(e.what()).find("obstacle") != std::string::npos);
  }
}

TEST_CASE("collinear simplification") {
  const std::vector<Vec2> p{{0, 0}, {1, 1}, {2, 2}, {3, 2}, {4, 2}, {4, 3}};
  const auto s = simplify_collinear(p);
  CHECK(s == std::vector<Vec2>{{0, 0}, {2, 2}, {4, 2}, {4, 3}});
}

TEST_CASE("config validation and json round trip") {
  WorldGenConfig c;
  c.base_amplitude = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.cluster_count_min = 5;
  c.cluster_count_max = 4;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.seed = 77;
  c.elevation_level = ElevationLevel::Medium;
  c.scale = Scale::OneSixth;
  const auto back = WorldGenConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
}
