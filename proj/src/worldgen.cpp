#include "ridge/worldgen.hpp"

#include <map>
#include <cmath>

#include <fmt/format.h>

#include "ridge/environment_io.hpp"
#include "ridge/path_planner.hpp"
#include "ridge/rng.hpp"

namespace ridge {

using nlohmann::json;

namespace {

constexpr double kTaskSeparation = 120.0;   // full scale, m
constexpr double kObstacleSpacing = 10.0;   // full scale, m
constexpr double kBoundaryMargin = 2.0;     // full scale, m
constexpr int kObstacleRounds = 16;

json range_json(const ObstacleSizeRange& r) {
  return {{"radius", {r.radius_min, r.radius_max}}, {"height", {r.height_min, r.height_max}}};
}

ObstacleSizeRange range_from(const json& j) {
  return {j.at("radius").at(0).get<double>(), j.at("radius").at(1).get<double>(),
          j.at("height").at(0).get<double>(), j.at("height").at(1).get<double>()};
}

std::size_t sample_weighted(Rng& rng, std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i;
    u -= weights[i];
  }
  return weights.size() - 1;
}

}  // namespace

void WorldGenConfig::validate() const {
  if (!(base_amplitude > 0.0)) throw ConfigError("base_amplitude must be > 0");
  if (cluster_count_min < 1 || cluster_count_max < cluster_count_min) {
    throw ConfigError(fmt::format("cluster_count_range [{}, {}] is empty", cluster_count_min, cluster_count_max));
  }
  if (elevation_generator != "value_noise" && elevation_generator != "flat") {
    throw ConfigError("unknown elevation generator '" + elevation_generator + "' (value_noise|flat)");
  }
  if (noise.octaves < 1 || !(noise.base_wavelength > 0.0)) throw ConfigError("invalid noise parameters");
  if (!(vehicle_clearance >= 0.0)) throw ConfigError("vehicle_clearance must be >= 0");
  if (obstacle_attempt_budget < 1) throw ConfigError("obstacle_attempt_budget must be >= 1");
}

ElevationLevel WorldGenConfig::resolved_level() const {
  if (elevation_level) return *elevation_level;
  Rng rng(seed, "elevation-level");
  return kElevationLevels[static_cast<std::size_t>(rng.uniform_int(0, 2))];
}

ObstacleDensity WorldGenConfig::resolved_density() const {
  if (obstacle_density) return *obstacle_density;
  Rng rng(seed, "obstacle-density");
  return static_cast<ObstacleDensity>(rng.uniform_int(0, 2));
}

json WorldGenConfig::to_json() const {
  return {{"seed", seed},
          {"elevation_level", elevation_level ? json(to_string(*elevation_level)) : json("random")},
          {"obstacle_density", obstacle_density ? json(to_string(*obstacle_density)) : json("random")},
          {"base_amplitude", base_amplitude},
          {"cluster_count_range", {cluster_count_min, cluster_count_max}},
          {"scale", to_string(scale)},
          {"elevation_generator", elevation_generator},
          {"noise", {{"octaves", noise.octaves}, {"persistence", noise.persistence}, {"base_wavelength", noise.base_wavelength}}},
          {"vehicle_clearance", vehicle_clearance},
          {"obstacle_attempt_budget", obstacle_attempt_budget},
          {"boulder", range_json(boulder)},
          {"tree", range_json(tree)},
          {"semantics", semantics.to_json()}};
}

WorldGenConfig WorldGenConfig::from_json(const json& j) {
  WorldGenConfig c;
  try {
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("elevation_level") && j["elevation_level"] != "random") {
      c.elevation_level = parse_elevation_level(j["elevation_level"].get<std::string>());
    }
    if (j.contains("obstacle_density") && j["obstacle_density"] != "random") {
      c.obstacle_density = parse_obstacle_density(j["obstacle_density"].get<std::string>());
    }
    c.base_amplitude = j.value("base_amplitude", c.base_amplitude);
    if (j.contains("cluster_count_range")) {
      c.cluster_count_min = j["cluster_count_range"].at(0).get<int>();
      c.cluster_count_max = j["cluster_count_range"].at(1).get<int>();
    }
    if (j.contains("scale")) c.scale = parse_scale(j["scale"].get<std::string>());
    c.elevation_generator = j.value("elevation_generator", c.elevation_generator);
    if (j.contains("noise")) {
      c.noise.octaves = j["noise"].value("octaves", c.noise.octaves);
      c.noise.persistence = j["noise"].value("persistence", c.noise.persistence);
      c.noise.base_wavelength = j["noise"].value("base_wavelength", c.noise.base_wavelength);
    }
    c.vehicle_clearance = j.value("vehicle_clearance", c.vehicle_clearance);
    c.obstacle_attempt_budget = j.value("obstacle_attempt_budget", c.obstacle_attempt_budget);
    if (j.contains("boulder")) c.boulder = range_from(j["boulder"]);
    if (j.contains("tree")) c.tree = range_from(j["tree"]);
    if (j.contains("semantics")) c.semantics = SemanticsTable::from_json(j["semantics"]);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("worldgen config: ") + e.what());
  }
  c.validate();
  return c;
}

HeightField generate_elevation(const WorldGenConfig& config) {
  config.validate();
  HeightField field;
  field.resolution = config.length_scale();
  field.elevation_level = config.resolved_level();
  const std::size_t n = static_cast<std::size_t>(field.cells_x) * field.cells_y;
  field.elevations.assign(n, 0.0);
  if (config.elevation_generator == "flat") return field;

  std::vector<double> raw(n);
  const std::uint64_t seed = derive_seed(config.seed, "elevation");
  if (config.parallel) {
    kernels::value_noise_parallel(config.noise, seed, field.cells_x, field.cells_y, raw);
  } else {
    kernels::value_noise_serial(config.noise, seed, field.cells_x, field.cells_y, raw);
  }
  double mean = 0.0;
  for (double v : raw) mean += v;
  mean /= static_cast<double>(n);
  double peak = 0.0;
  for (double& v : raw) {
    v -= mean;
    peak = std::max(peak, std::abs(v));
  }
  const double amplitude = config.base_amplitude * config.length_scale();
  const double factor = level_factor(field.elevation_level);
  for (std::size_t i = 0; i < n; ++i) {
    const double normalized = raw[i] / peak * amplitude;
    field.elevations[i] = normalized * factor;
  }
  return field;
}

std::vector<int> assign_patches_to_centers(const std::vector<Vec2>& centers, double resolution) {
  std::vector<int> owner(kPatchCount, 0);
  for (int r = 0; r < kPatchesPerAxis; ++r) {
    for (int c = 0; c < kPatchesPerAxis; ++c) {
      const Vec2 pc((c * kPatchStride + kPatchStride / 2) * resolution, (r * kPatchStride + kPatchStride / 2) * resolution);
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < centers.size(); ++k) {
        const double d = (centers[k] - pc).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(k);
        }
      }
      owner[static_cast<std::size_t>(r) * kPatchesPerAxis + c] = best;
    }
  }
  return owner;
}

void connect_clusters(std::vector<int>& owner, const std::vector<Vec2>& centers, double resolution) {
  constexpr int n = kPatchesPerAxis;
  auto patch_center = [&](int p) {
    return Vec2(((p % n) * kPatchStride + kPatchStride / 2) * resolution, ((p / n) * kPatchStride + kPatchStride / 2) * resolution);
  };
  auto neighbours = [](int p) {
    std::vector<int> out;
    const int r = p / n, c = p % n;
    if (r > 0) out.push_back(p - n);
    if (r + 1 < n) out.push_back(p + n);
    if (c > 0) out.push_back(p - 1);
    if (c + 1 < n) out.push_back(p + 1);
    return out;
  };
  // A centre-sampled Voronoi cell can split into lattice fragments. Keep the
  // largest fragment of each cluster and hand the rest to a touching cluster.
  for (;;) {
    std::vector<int> component(kPatchCount, -1), size;
    for (int p = 0; p < kPatchCount; ++p) {
      if (component[p] >= 0) continue;
      const int id = static_cast<int>(size.size());
      size.push_back(0);
      std::vector<int> stack{p};
      component[p] = id;
      while (!stack.empty()) {
        const int q = stack.back();
        stack.pop_back();
        ++size[id];
        for (int m : neighbours(q)) {
          if (component[m] < 0 && owner[m] == owner[q]) {
            component[m] = id;
            stack.push_back(m);
          }
        }
      }
    }
    std::map<int, int> main_component;
    for (int p = 0; p < kPatchCount; ++p) {
      auto [it, fresh] = main_component.try_emplace(owner[p], component[p]);
      if (!fresh && size[component[p]] > size[it->second]) it->second = component[p];
    }
    std::vector<char> stray(kPatchCount, 0);
    bool any = false;
    for (int p = 0; p < kPatchCount; ++p) {
      stray[p] = component[p] != main_component[owner[p]];
      any = any || stray[p];
    }
    if (!any) return;
    for (int p = 0; p < kPatchCount; ++p) {
      if (!stray[p]) continue;
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (int m : neighbours(p)) {
        if (stray[m]) continue;
        const double d = (centers[static_cast<std::size_t>(owner[m])] - patch_center(p)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = owner[m];
        }
      }
      if (best >= 0) owner[p] = best;
    }
  }
}

SemanticsLayer assign_semantics(const WorldGenConfig& config, const HeightField& field) {
  Rng rng(config.seed, "semantics");
  const int k = rng.uniform_int(config.cluster_count_min, config.cluster_count_max);
  std::vector<Vec2> centers;
  std::vector<SemanticClass> classes;
  for (int i = 0; i < k; ++i) {
    centers.emplace_back(rng.uniform(0.0, field.extent_x()), rng.uniform(0.0, field.extent_y()));
  }
  for (int i = 0; i < k; ++i) {
    classes.push_back(static_cast<SemanticClass>(sample_weighted(rng, config.semantics.class_weights)));
  }
  auto owner = assign_patches_to_centers(centers, field.resolution);
  connect_clusters(owner, centers, field.resolution);
  const auto& table = config.semantics;
  SemanticsLayer layer;
  layer.patches.resize(kPatchCount);
  for (std::size_t p = 0; p < layer.patches.size(); ++p) {
    auto& patch = layer.patches[p];
    patch.cluster_id = owner[p];
    patch.semantic_class = classes[static_cast<std::size_t>(owner[p])];
    const auto ci = static_cast<std::size_t>(patch.semantic_class);
    if (is_deformable(patch.semantic_class)) {
      const auto level = static_cast<SoilLevel>(sample_weighted(rng, table.soil_level_weights[ci]));
      patch.scm = table.soil(level, config.length_scale());
    } else {
      const auto& dist = table.friction[ci];
      patch.friction = std::clamp(rng.normal(dist.mean, dist.stddev), table.friction_min, table.friction_max);
      patch.restitution = kRigidRestitution;
    }
  }
  return layer;
}

std::vector<NavigationTask> generate_tasks(const WorldGenConfig& config, const HeightField& field) {
  const double s = config.length_scale();
  const Vec2 center(0.5 * field.extent_x(), 0.5 * field.extent_y());
  const double radius = 0.5 * kTaskSeparation * s;
  const double margin = std::min({center.x() - radius, center.y() - radius});
  if (margin < kBoundaryMargin * s) {
    throw ConfigError(fmt::format("task circle of radius {} m leaves {} m to the world edge (need {} m)", radius,
                                  margin, kBoundaryMargin * s));
  }
  std::vector<NavigationTask> tasks;
  for (int k = 0; k < kTaskCount; ++k) {
    const double angle = k * kPi / kTaskCount;
    const Vec2 dir(std::cos(angle), std::sin(angle));
    NavigationTask t;
    t.task_id = k;
    t.start = center + radius * dir;
    t.goal = center - radius * dir;
    t.start_yaw = std::atan2(t.goal.y() - t.start.y(), t.goal.x() - t.start.x());
    tasks.push_back(std::move(t));
  }
  return tasks;
}

ObstacleSet place_obstacles(const WorldGenConfig& config, const std::vector<NavigationTask>& tasks,
                            const HeightField& field, std::uint64_t round) {
  const double s = config.length_scale();
  const double spacing = kObstacleSpacing * s;
  ObstacleSet set;
  set.density = config.resolved_density();
  const int count = obstacle_count(set.density);
  std::vector<Vec2> endpoints;
  for (const auto& t : tasks) {
    endpoints.push_back(t.start);
    endpoints.push_back(t.goal);
  }
  Rng rng(config.seed, "obstacles", round);
  for (int i = 0; i < count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < config.obstacle_attempt_budget && !placed; ++attempt) {
      Obstacle o;
      o.kind = rng.uniform() < 0.5 ? ObstacleKind::Boulder : ObstacleKind::Tree;
      const auto& range = o.kind == ObstacleKind::Boulder ? config.boulder : config.tree;
      o.footprint_radius = rng.uniform(range.radius_min, range.radius_max) * s;
      o.height = rng.uniform(range.height_min, range.height_max) * s;
      o.center = Vec2(rng.uniform(o.footprint_radius, field.extent_x() - o.footprint_radius),
                      rng.uniform(o.footprint_radius, field.extent_y() - o.footprint_radius));
      bool ok = true;
      for (const auto& p : set.obstacles) ok = ok && (p.center - o.center).norm() >= spacing;
      for (const auto& e : endpoints) ok = ok && (e - o.center).norm() >= spacing;
      if (ok) {
        set.obstacles.push_back(o);
        placed = true;
      }
    }
    if (!placed) {
      throw GenerationError(fmt::format(
          "could not place obstacle {} of {} after {} attempts; use a larger world or a lower obstacle density",
          i + 1, count, config.obstacle_attempt_budget));
    }
  }
  return set;
}

EnvironmentSpec generate_environment(const WorldGenConfig& config) {
  config.validate();
  EnvironmentSpec env;
  env.seed = config.seed;
  env.scale = config.scale;
  env.path_clearance = config.vehicle_clearance * config.length_scale();

  WorldGenConfig resolved = config;
  resolved.elevation_level = config.resolved_level();
  resolved.obstacle_density = config.resolved_density();
  env.generator_config = resolved.to_json();

  env.heightfield = generate_elevation(resolved);
  quantize_elevations(env.heightfield);
  env.tasks = generate_tasks(resolved, env.heightfield);

  std::string last_failure;
  for (int round = 0; round < kObstacleRounds; ++round) {
    env.obstacles = place_obstacles(resolved, env.tasks, env.heightfield, static_cast<std::uint64_t>(round));
    try {
      for (auto& t : env.tasks) {
        t.global_path = plan_global_path(env.heightfield, env.obstacles.obstacles, env.path_clearance, t.start, t.goal);
      }
      last_failure.clear();
      break;
    } catch (const PlanningError& e) {
      last_failure = e.what();
    }
  }
  if (!last_failure.empty()) {
    throw GenerationError(fmt::format("seed {}: no obstacle layout admits all global paths: {}", config.seed, last_failure));
  }
  env.semantics = assign_semantics(resolved, env.heightfield);
  return env;
}

}  // namespace ridge
