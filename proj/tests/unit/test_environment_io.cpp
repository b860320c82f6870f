#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ridge/environment_io.hpp"
#include "support.hpp"

using namespace ridge;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ridge_io_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("write then read round-trips bit-exactly") {
  const auto dir = scratch_dir("roundtrip");
  const auto env = test::generated(44, ElevationLevel::High, ObstacleDensity::Medium);
  write_environment(env, dir / "a");
  const auto back = read_environment(dir / "a");
  CHECK(back.seed == env.seed);
  CHECK(back.scale == env.scale);
  CHECK(back.heightfield.elevations == env.heightfield.elevations);
  CHECK(back.heightfield.elevation_level == env.heightfield.elevation_level);
  CHECK(back.obstacles.density == env.obstacles.density);
  REQUIRE(back.obstacles.obstacles.size() == env.obstacles.obstacles.size());
  for (std::size_t i = 0; i < env.obstacles.obstacles.size(); ++i) {
    CHECK(back.obstacles.obstacles[i].center == env.obstacles.obstacles[i].center);
    CHECK(back.obstacles.obstacles[i].height == env.obstacles.obstacles[i].height);
  }
  for (int t = 0; t < kTaskCount; ++t) {
    CHECK(back.tasks[t].start == env.tasks[t].start);
    CHECK(back.tasks[t].global_path == env.tasks[t].global_path);
  }
  for (int p = 0; p < kPatchCount; ++p) {
    const auto& a = env.semantics.patches[p];
    const auto& b = back.semantics.patches[p];
    CHECK(a.semantic_class == b.semantic_class);
    CHECK(a.friction == b.friction);
    CHECK(a.cluster_id == b.cluster_id);
    CHECK(a.deformable() == b.deformable());
    if (a.deformable()) CHECK(a.scm->k_phi == b.scm->k_phi);
  }

  write_environment(back, dir / "b");
  for (const char* f : {"meta.json", "elevation.f32", "semantics.json", "obstacles.json", "tasks.json"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }
  CHECK(fs::file_size(dir / "a" / "elevation.f32") == 129u * 129u * 4u);
  fs::remove_all(dir);
}

TEST_CASE("corrupt directories raise format errors") {
  const auto dir = scratch_dir("corrupt");
  const auto env = test::generated(45, ElevationLevel::Low);
  write_environment(env, dir);

  fs::resize_file(dir / "elevation.f32", 1000);
  CHECK_THROWS_AS(read_environment(dir), FormatError);
  write_environment(env, dir);

  std::ofstream(dir / "tasks.json") << "{ not json";
  CHECK_THROWS_AS(read_environment(dir), FormatError);
  write_environment(env, dir);

  fs::remove(dir / "obstacles.json");
  CHECK_THROWS_AS(read_environment(dir), FormatError);
  CHECK_THROWS_AS(read_environment(dir / "nothing"), FormatError);
  fs::remove_all(dir);
}

TEST_CASE("environment listing is sorted and skips non-environments") {
  const auto root = scratch_dir("list");
  for (std::uint64_t s : {3ull, 1ull, 2ull}) write_environment(test::generated(s, ElevationLevel::Low), root / ("env_" + std::to_string(s)));
  fs::create_directories(root / "notes");
  const auto dirs = list_environment_dirs(root);
  REQUIRE(dirs.size() == 3);
  CHECK(dirs[0].filename() == "env_1");
  CHECK(dirs[2].filename() == "env_3");
  fs::remove_all(root);
}

TEST_CASE("generated elevations are already float32-representable") {
  const auto env = test::generated(46, ElevationLevel::Medium);
  for (double z : env.heightfield.elevations) REQUIRE(static_cast<double>(static_cast<float>(z)) == z);
}
