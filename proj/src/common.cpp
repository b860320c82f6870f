#include "ridge/common.hpp"

#include <cmath>

namespace ridge {

double level_factor(ElevationLevel level) {
  switch (level) {
    case ElevationLevel::Low:
      return 0.3;
    case ElevationLevel::Medium:
      return 0.6;
    case ElevationLevel::High:
      return 1.0;
  }
  throw ConfigError("invalid elevation level");
}

int obstacle_count(ObstacleDensity density) {
  switch (density) {
    case ObstacleDensity::Sparse:
      return 10;
    case ObstacleDensity::Medium:
      return 20;
    case ObstacleDensity::Dense:
      return 40;
  }
  throw ConfigError("invalid obstacle density");
}

double scale_factor(Scale scale) {
  switch (scale) {
    case Scale::Full:
      return 1.0;
    case Scale::OneSixth:
      return 1.0 / 6.0;
    case Scale::OneTenth:
      return 0.1;
  }
  throw ConfigError("invalid scale");
}

std::string_view to_string(ElevationLevel level) {
  switch (level) {
    case ElevationLevel::Low:
      return "low";
    case ElevationLevel::Medium:
      return "medium";
    case ElevationLevel::High:
      return "high";
  }
  return "?";
}

std::string_view to_string(ObstacleDensity density) {
  switch (density) {
    case ObstacleDensity::Sparse:
      return "sparse";
    case ObstacleDensity::Medium:
      return "medium";
    case ObstacleDensity::Dense:
      return "dense";
  }
  return "?";
}

std::string_view to_string(Scale scale) {
  switch (scale) {
    case Scale::Full:
      return "full";
    case Scale::OneSixth:
      return "1/6";
    case Scale::OneTenth:
      return "1/10";
  }
  return "?";
}

ElevationLevel parse_elevation_level(std::string_view name) {
  if (name == "low") return ElevationLevel::Low;
  if (name == "medium") return ElevationLevel::Medium;
  if (name == "high") return ElevationLevel::High;
  throw ConfigError("unknown elevation level '" + std::string(name) +
                    "' (expected low|medium|high)");
}

ObstacleDensity parse_obstacle_density(std::string_view name) {
  if (name == "sparse") return ObstacleDensity::Sparse;
  if (name == "medium") return ObstacleDensity::Medium;
  if (name == "dense") return ObstacleDensity::Dense;
  throw ConfigError("unknown obstacle density '" + std::string(name) +
                    "' (expected sparse|medium|dense)");
}

Scale parse_scale(std::string_view name) {
  if (name == "full" || name == "1") return Scale::Full;
  if (name == "1/6" || name == "one_sixth") return Scale::OneSixth;
  if (name == "1/10" || name == "one_tenth") return Scale::OneTenth;
  throw ConfigError("unknown scale '" + std::string(name) +
                    "' (expected full|1/6|1/10)");
}

double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

}  // namespace ridge
