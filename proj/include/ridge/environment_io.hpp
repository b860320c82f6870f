#pragma once

#include <filesystem>
#include <vector>

#include "ridge/terrain.hpp"

namespace ridge {

// Environment directory layout (format_version 1):
//   meta.json       seed, format_version, elevation_level, obstacle_density, scale
//   elevation.f32   129*129 little-endian float32, row-major
//   semantics.json  one record per patch plus the soil constants in use
//   obstacles.json
//   tasks.json      ten tasks with their global paths
void write_environment(const EnvironmentSpec& env, const std::filesystem::path& dir);

/// Loads and validates an environment directory; throws FormatError.
EnvironmentSpec read_environment(const std::filesystem::path& dir);

/// Environment subdirectories (those holding a meta.json), sorted by name.
std::vector<std::filesystem::path> list_environment_dirs(const std::filesystem::path& root);

nlohmann::json environment_meta(const EnvironmentSpec& env);

/// Rounds elevations to float32 precision so the binary file is lossless.
void quantize_elevations(HeightField& field);

}  // namespace ridge
