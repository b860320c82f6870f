#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ridge/vehicle.hpp"

namespace ridge {

using nlohmann::json;

namespace {

// Contact stiffnesses are set from natural frequencies so the explicit
// integrator stays stable at the default 5 ms step for any scale.
constexpr double kTireFrequency = 40.0;     // rad/s, per quarter mass
constexpr double kTireDampingRatio = 0.7;
constexpr double kChassisFrequency = 30.0;  // rad/s
constexpr double kObstacleDampingRatio = 0.5;

VehicleParams hmmwv_full() {
  VehicleParams p;
  p.name = "hmmwv";
  p.scale = Scale::Full;
  p.mass = 2300.0;
  p.wheelbase = 3.3;
  p.track_width = 1.8;
  p.com_height = 0.35;
  p.wheel_radius = 0.47;
  p.wheel_width = 0.32;
  p.suspension_travel = 0.25;
  p.max_steer_angle = 0.5;
  p.max_drive_force = 12000.0;
  p.max_brake_force = 2.0 * p.mass * kGravity;
  p.max_speed = 12.0;
  p.rolling_resistance = 0.015;
  p.tire_relaxation_length = 0.6;
  p.chassis_half_extents = Vec3(2.285, 1.08, 0.5);
  p.chassis_center_height = 0.1;
  p.chassis_friction = 0.5;
  p.obstacle_stiffness = 1.0e6;
  // Solid box approximation of the 4.57 x 2.16 x 1.0 m body.
  const double l = 2.0 * p.chassis_half_extents.x(), wd = 2.0 * p.chassis_half_extents.y(),
               h = 2.0 * p.chassis_half_extents.z();
  p.inertia = Vec3(p.mass / 12.0 * (wd * wd + h * h), p.mass / 12.0 * (l * l + h * h), p.mass / 12.0 * (l * l + wd * wd));
  return p;
}

/// Fills the stiffness/damping fields that follow from mass and geometry.
void derive_contact_terms(VehicleParams& p, double length_scale) {
  const double quarter = p.mass / kWheelCount;
  // Springs sit at mid-travel under static load.
  p.suspension_stiffness = p.mass * kGravity / (kWheelCount * 0.5 * p.suspension_travel);
  p.suspension_damping = 2.0 * 0.35 * std::sqrt(p.suspension_stiffness * quarter);
  p.bump_stop_stiffness = 10.0 * p.suspension_stiffness;
  p.bump_stop_damping = 2.0 * 0.5 * std::sqrt(p.bump_stop_stiffness * quarter);
  p.tire_stiffness = quarter * kTireFrequency * kTireFrequency;
  p.tire_damping = 2.0 * kTireDampingRatio * std::sqrt(p.tire_stiffness * quarter);
  p.chassis_contact_stiffness = p.mass * kChassisFrequency * kChassisFrequency;
  p.chassis_contact_damping = p.mass * kChassisFrequency;
  p.obstacle_stiffness = 1.0e6 * length_scale * length_scale;
  p.obstacle_damping = 2.0 * kObstacleDampingRatio * std::sqrt(p.obstacle_stiffness * p.mass);
}

VehicleParams builtin(std::string_view name) {
  if (name == "hmmwv") {
    auto p = hmmwv_full();
    derive_contact_terms(p, 1.0);
    return p;
  }
  throw LookupError(fmt::format("unknown vehicle preset '{}'; available: {}", name,
                                fmt::join(vehicle_preset_names(), ", ")));
}

}  // namespace

std::vector<std::string> vehicle_preset_names() { return {"hmmwv"}; }

VehicleParams scale_vehicle(const VehicleParams& full, Scale scale) {
  const double s = scale_factor(scale);
  VehicleParams p = full;
  p.scale = scale;
  if (s == 1.0) return p;
  const double s3 = s * s * s;
  p.mass *= s3;
  p.inertia *= s3 * s * s;
  p.wheelbase *= s;
  p.track_width *= s;
  p.com_height *= s;
  p.wheel_radius *= s;
  p.wheel_width *= s;
  p.suspension_travel *= s;
  p.max_drive_force *= s3;
  p.max_brake_force *= s3;
  p.max_speed *= std::sqrt(s);
  p.tire_relaxation_length *= s;
  p.chassis_half_extents *= s;
  p.chassis_center_height *= s;
  derive_contact_terms(p, s);
  return p;
}

VehicleParams vehicle_preset(std::string_view name, Scale scale) {
  return scale_vehicle(builtin(name), scale);
}

VehicleParams vehicle_preset(const std::filesystem::path& presets_file, std::string_view name, Scale scale) {
  std::ifstream in(presets_file);
  if (!in) throw ConfigError("cannot open vehicle presets " + presets_file.string());
  const json j = json::parse(in);
  const auto& presets = j.at("presets");
  if (!presets.contains(std::string(name))) {
    std::vector<std::string> names;
    for (const auto& [k, v] : presets.items()) names.push_back(k);
    throw LookupError(fmt::format("unknown vehicle preset '{}'; available: {}", name, fmt::join(names, ", ")));
  }
  VehicleParams full = VehicleParams::from_json(presets.at(std::string(name)));
  full.name = std::string(name);
  return scale_vehicle(full, scale);
}

json VehicleParams::to_json() const {
  return {{"mass", mass},
          {"inertia", {inertia.x(), inertia.y(), inertia.z()}},
          {"wheelbase", wheelbase},
          {"track_width", track_width},
          {"com_height", com_height},
          {"wheel_radius", wheel_radius},
          {"wheel_width", wheel_width},
          {"suspension_travel", suspension_travel},
          {"max_steer_angle", max_steer_angle},
          {"max_drive_force", max_drive_force},
          {"max_brake_force", max_brake_force},
          {"max_speed", max_speed},
          {"rolling_resistance", rolling_resistance},
          {"tire_relaxation_length", tire_relaxation_length},
          {"chassis_half_extents", {chassis_half_extents.x(), chassis_half_extents.y(), chassis_half_extents.z()}},
          {"chassis_center_height", chassis_center_height},
          {"chassis_friction", chassis_friction}};
}

VehicleParams VehicleParams::from_json(const json& j) {
  VehicleParams p;
  try {
    p.mass = j.at("mass").get<double>();
    p.inertia = Vec3(j.at("inertia").at(0).get<double>(), j.at("inertia").at(1).get<double>(),
                     j.at("inertia").at(2).get<double>());
    p.wheelbase = j.at("wheelbase").get<double>();
    p.track_width = j.at("track_width").get<double>();
    p.com_height = j.at("com_height").get<double>();
    p.wheel_radius = j.at("wheel_radius").get<double>();
    p.wheel_width = j.at("wheel_width").get<double>();
    p.suspension_travel = j.at("suspension_travel").get<double>();
    p.max_steer_angle = j.at("max_steer_angle").get<double>();
    p.max_drive_force = j.at("max_drive_force").get<double>();
    p.max_brake_force = j.at("max_brake_force").get<double>();
    p.max_speed = j.at("max_speed").get<double>();
    p.rolling_resistance = j.at("rolling_resistance").get<double>();
    p.tire_relaxation_length = j.at("tire_relaxation_length").get<double>();
    const auto& he = j.at("chassis_half_extents");
    p.chassis_half_extents = Vec3(he.at(0).get<double>(), he.at(1).get<double>(), he.at(2).get<double>());
    p.chassis_center_height = j.at("chassis_center_height").get<double>();
    p.chassis_friction = j.value("chassis_friction", 0.5);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("vehicle preset: ") + e.what());
  }
  derive_contact_terms(p, 1.0);
  p.validate();
  return p;
}

json VehicleParams::exact_json() const {
  json j;
  j["name"] = name;
  j["scale"] = std::string(to_string(scale));
  j["mass"] = mass;
  j["inertia"] = {inertia.x(), inertia.y(), inertia.z()};
  j["wheelbase"] = wheelbase;
  j["track_width"] = track_width;
  j["com_height"] = com_height;
  j["wheel_radius"] = wheel_radius;
  j["wheel_width"] = wheel_width;
  j["suspension_stiffness"] = suspension_stiffness;
  j["suspension_damping"] = suspension_damping;
  j["suspension_travel"] = suspension_travel;
  j["bump_stop_stiffness"] = bump_stop_stiffness;
  j["bump_stop_damping"] = bump_stop_damping;
  j["max_steer_angle"] = max_steer_angle;
  j["max_drive_force"] = max_drive_force;
  j["max_brake_force"] = max_brake_force;
  j["max_speed"] = max_speed;
  j["rolling_resistance"] = rolling_resistance;
  j["tire_stiffness"] = tire_stiffness;
  j["tire_damping"] = tire_damping;
  j["tire_relaxation_length"] = tire_relaxation_length;
  j["chassis_half_extents"] = {chassis_half_extents.x(), chassis_half_extents.y(), chassis_half_extents.z()};
  j["chassis_center_height"] = chassis_center_height;
  j["chassis_contact_stiffness"] = chassis_contact_stiffness;
  j["chassis_contact_damping"] = chassis_contact_damping;
  j["chassis_friction"] = chassis_friction;
  j["obstacle_stiffness"] = obstacle_stiffness;
  j["obstacle_damping"] = obstacle_damping;
  return j;
}

VehicleParams VehicleParams::from_exact_json(const json& j) {
  VehicleParams p;
  try {
    p.name = j.at("name").get<std::string>();
    p.scale = parse_scale(j.at("scale").get<std::string>());
    p.mass = j.at("mass").get<double>();
    p.inertia = Vec3(j.at("inertia").at(0).get<double>(), j.at("inertia").at(1).get<double>(), j.at("inertia").at(2).get<double>());
    p.wheelbase = j.at("wheelbase").get<double>();
    p.track_width = j.at("track_width").get<double>();
    p.com_height = j.at("com_height").get<double>();
    p.wheel_radius = j.at("wheel_radius").get<double>();
    p.wheel_width = j.at("wheel_width").get<double>();
    p.suspension_stiffness = j.at("suspension_stiffness").get<double>();
    p.suspension_damping = j.at("suspension_damping").get<double>();
    p.suspension_travel = j.at("suspension_travel").get<double>();
    p.bump_stop_stiffness = j.at("bump_stop_stiffness").get<double>();
    p.bump_stop_damping = j.at("bump_stop_damping").get<double>();
    p.max_steer_angle = j.at("max_steer_angle").get<double>();
    p.max_drive_force = j.at("max_drive_force").get<double>();
    p.max_brake_force = j.at("max_brake_force").get<double>();
    p.max_speed = j.at("max_speed").get<double>();
    p.rolling_resistance = j.at("rolling_resistance").get<double>();
    p.tire_stiffness = j.at("tire_stiffness").get<double>();
    p.tire_damping = j.at("tire_damping").get<double>();
    p.tire_relaxation_length = j.at("tire_relaxation_length").get<double>();
    p.chassis_half_extents = Vec3(j.at("chassis_half_extents").at(0).get<double>(), j.at("chassis_half_extents").at(1).get<double>(), j.at("chassis_half_extents").at(2).get<double>());
    p.chassis_center_height = j.at("chassis_center_height").get<double>();
    p.chassis_contact_stiffness = j.at("chassis_contact_stiffness").get<double>();
    p.chassis_contact_damping = j.at("chassis_contact_damping").get<double>();
    p.chassis_friction = j.at("chassis_friction").get<double>();
    p.obstacle_stiffness = j.at("obstacle_stiffness").get<double>();
    p.obstacle_damping = j.at("obstacle_damping").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("vehicle parameters: ") + e.what());
  }
  p.validate();
  return p;
}

}  // namespace ridge
