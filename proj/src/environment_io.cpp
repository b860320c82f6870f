#include "ridge/environment_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

namespace ridge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("missing " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

json scm_json(const ScmParams& p) {
  return {{"k_c", p.k_c},         {"k_phi", p.k_phi},     {"n_exp", p.n_exp},
          {"hardening", p.hardening}, {"damping", p.damping}, {"traction", p.traction}};
}

ScmParams scm_from(const json& j, SoilLevel level) {
  return {j.at("k_c").get<double>(),     j.at("k_phi").get<double>(),   j.at("n_exp").get<double>(),
          j.at("hardening").get<double>(), j.at("damping").get<double>(), j.at("traction").get<double>(),
          level};
}

Vec2 vec2_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

void quantize_elevations(HeightField& field) {
  for (double& h : field.elevations) h = static_cast<double>(static_cast<float>(h));
}

json environment_meta(const EnvironmentSpec& env) {
  return {{"seed", env.seed},
          {"format_version", env.format_version},
          {"elevation_level", to_string(env.heightfield.elevation_level)},
          {"obstacle_density", to_string(env.obstacles.density)},
          {"scale", to_string(env.scale)},
          {"path_clearance", env.path_clearance},
          {"generator", env.generator_config}};
}

void write_environment(const EnvironmentSpec& env, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(fmt::format("cannot create {}: {}", dir.string(), ec.message()));

  write_text(dir / "meta.json", environment_meta(env));

  {
    const auto& f = env.heightfield;
    std::vector<unsigned char> bytes(f.elevations.size() * 4);
    for (std::size_t i = 0; i < f.elevations.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(f.elevations[i]));
      for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
    std::ofstream out(dir / "elevation.f32", std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for elevation.f32");
  }

  {
    json patches = json::array();
    json levels = json::object();
    for (int r = 0; r < kPatchesPerAxis; ++r) {
      for (int c = 0; c < kPatchesPerAxis; ++c) {
        const auto& p = env.semantics.patch(r, c);
        json rec = {{"row", r}, {"col", c}, {"class", to_string(p.semantic_class)}, {"cluster_id", p.cluster_id}};
        if (p.scm) {
          rec["scm_level"] = to_string(p.scm->level);
          levels[std::string(to_string(p.scm->level))] = scm_json(*p.scm);
        } else {
          rec["friction"] = *p.friction;
          rec["restitution"] = *p.restitution;
        }
        patches.push_back(std::move(rec));
      }
    }
    write_text(dir / "semantics.json", {{"patches", patches}, {"soil_levels", levels}});
  }

  {
    json list = json::array();
    for (const auto& o : env.obstacles.obstacles) {
      list.push_back({{"kind", to_string(o.kind)},
                      {"center", {o.center.x(), o.center.y()}},
                      {"footprint_radius", o.footprint_radius},
                      {"height", o.height}});
    }
    write_text(dir / "obstacles.json", {{"density", to_string(env.obstacles.density)}, {"obstacles", list}});
  }

  {
    json list = json::array();
    for (const auto& t : env.tasks) {
      json path = json::array();
      for (const auto& v : t.global_path) path.push_back({v.x(), v.y()});
      list.push_back({{"task_id", t.task_id},
                      {"start", {t.start.x(), t.start.y(), t.start_yaw}},
                      {"goal", {t.goal.x(), t.goal.y()}},
                      {"global_path", path}});
    }
    write_text(dir / "tasks.json", {{"tasks", list}});
  }
}

EnvironmentSpec read_environment(const fs::path& dir) {
  EnvironmentSpec env;
  try {
    const json meta = read_json(dir / "meta.json");
    env.seed = meta.at("seed").get<std::uint64_t>();
    env.format_version = meta.at("format_version").get<int>();
    if (env.format_version != kFormatVersion) {
      throw FormatError(fmt::format("unsupported format_version {}", env.format_version));
    }
    env.scale = parse_scale(meta.at("scale").get<std::string>());
    env.path_clearance = meta.at("path_clearance").get<double>();
    env.generator_config = meta.value("generator", json::object());
    env.heightfield.elevation_level = parse_elevation_level(meta.at("elevation_level").get<std::string>());
    env.obstacles.density = parse_obstacle_density(meta.at("obstacle_density").get<std::string>());

    auto& f = env.heightfield;
    f.cells_x = f.cells_y = kGridCells;
    f.resolution = scale_factor(env.scale);
    {
      std::ifstream in(dir / "elevation.f32", std::ios::binary);
      if (!in) throw FormatError("missing elevation.f32");
      std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      const std::size_t n = static_cast<std::size_t>(kGridCells) * kGridCells;
      if (bytes.size() != n * 4) {
        throw FormatError(fmt::format("elevation.f32 holds {} bytes, expected {}", bytes.size(), n * 4));
      }
      f.elevations.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
        f.elevations[i] = static_cast<double>(std::bit_cast<float>(bits));
      }
    }

    {
      const json sem = read_json(dir / "semantics.json");
      const json& levels = sem.at("soil_levels");
      env.semantics.patches.resize(kPatchCount);
      const auto& list = sem.at("patches");
      if (list.size() != static_cast<std::size_t>(kPatchCount)) {
        throw FormatError(fmt::format("semantics.json holds {} patches", list.size()));
      }
      for (const auto& rec : list) {
        const int r = rec.at("row").get<int>();
        const int c = rec.at("col").get<int>();
        if (r < 0 || c < 0 || r >= kPatchesPerAxis || c >= kPatchesPerAxis) throw FormatError("patch index out of range");
        PatchSemantics p;
        p.semantic_class = parse_semantic_class(rec.at("class").get<std::string>());
        p.cluster_id = rec.at("cluster_id").get<int>();
        if (rec.contains("scm_level")) {
          const auto name = rec["scm_level"].get<std::string>();
          p.scm = scm_from(levels.at(name), parse_soil_level(name));
        } else {
          p.friction = rec.at("friction").get<double>();
          p.restitution = rec.at("restitution").get<double>();
        }
        env.semantics.patches[static_cast<std::size_t>(r) * kPatchesPerAxis + c] = std::move(p);
      }
    }

    {
      const json obs = read_json(dir / "obstacles.json");
      for (const auto& rec : obs.at("obstacles")) {
        Obstacle o;
        o.kind = rec.at("kind").get<std::string>() == "tree" ? ObstacleKind::Tree : ObstacleKind::Boulder;
        o.center = vec2_from(rec.at("center"));
        o.footprint_radius = rec.at("footprint_radius").get<double>();
        o.height = rec.at("height").get<double>();
        env.obstacles.obstacles.push_back(o);
      }
    }

    {
      const json tasks = read_json(dir / "tasks.json");
      for (const auto& rec : tasks.at("tasks")) {
        NavigationTask t;
        t.task_id = rec.at("task_id").get<int>();
        t.start = vec2_from(rec.at("start"));
        t.start_yaw = rec.at("start").at(2).get<double>();
        t.goal = vec2_from(rec.at("goal"));
        for (const auto& v : rec.at("global_path")) t.global_path.push_back(vec2_from(v));
        env.tasks.push_back(std::move(t));
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(fmt::format("{}: {}", dir.string(), e.what()));
  } catch (const ConfigError& e) {
    throw FormatError(fmt::format("{}: {}", dir.string(), e.what()));
  }
  validate_environment(env);
  return env;
}

std::vector<fs::path> list_environment_dirs(const fs::path& root) {
  std::vector<fs::path> dirs;
  if (!fs::is_directory(root)) throw Error("not a directory: " + root.string());
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

}  // namespace ridge
