#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ridge {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kGravity = 9.81;
inline constexpr double kPi = 3.14159265358979323846;

// Error hierarchy. Every failure the library reports derives from ridge::Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};

class PlanningError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

enum class ElevationLevel { Low, Medium, High };
enum class ObstacleDensity { Sparse, Medium, Dense };
enum class Scale { Full, OneSixth, OneTenth };

inline constexpr std::array<ElevationLevel, 3> kElevationLevels = {
    ElevationLevel::Low, ElevationLevel::Medium, ElevationLevel::High};

/// Multiplier applied to a normalized heightfield: 30 %, 60 %, 100 %.
double level_factor(ElevationLevel level);
int obstacle_count(ObstacleDensity density);
double scale_factor(Scale scale);

std::string_view to_string(ElevationLevel level);
std::string_view to_string(ObstacleDensity density);
std::string_view to_string(Scale scale);

ElevationLevel parse_elevation_level(std::string_view name);
ObstacleDensity parse_obstacle_density(std::string_view name);
Scale parse_scale(std::string_view name);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

}  // namespace ridge
