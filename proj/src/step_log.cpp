#include "ridge/step_log.hpp"

#include <istream>
#include <string>

#include <fmt/format.h>

namespace ridge {

using nlohmann::json;

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json contacts_json(const std::array<WheelContact, kWheelCount>& contacts) {
  json out = json::array();
  for (const auto& c : contacts) {
    out.push_back(c.in_contact ? json(std::string(to_string(c.surface))) : json(nullptr));
  }
  return out;
}

}  // namespace

json state_to_json(const VehicleState& s) {
  json compression = json::array(), deflection = json::array();
  for (int w = 0; w < kWheelCount; ++w) {
    compression.push_back(s.wheel_compression[static_cast<std::size_t>(w)]);
    const Vec2& d = s.tire_deflection[static_cast<std::size_t>(w)];
    deflection.push_back({d.x(), d.y()});
  }
  return {{"position", vec(s.position)},
          {"quaternion", {s.orientation.w(), s.orientation.x(), s.orientation.y(), s.orientation.z()}},
          {"linear_velocity", vec(s.linear_velocity)},
          {"angular_velocity", vec(s.angular_velocity)},
          {"wheel_compression", compression},
          {"tire_deflection", deflection},
          {"contacts", contacts_json(s.wheel_contact)},
          {"sim_time", s.sim_time}};
}

VehicleState state_from_json(const json& j) {
  VehicleState s;
  try {
    s.position = vec3(j.at("position"));
    const auto& q = j.at("quaternion");
    s.orientation = Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(), q.at(3).get<double>());
    s.linear_velocity = vec3(j.at("linear_velocity"));
    s.angular_velocity = vec3(j.at("angular_velocity"));
    for (int w = 0; w < kWheelCount; ++w) {
      const auto wi = static_cast<std::size_t>(w);
      s.wheel_compression[wi] = j.at("wheel_compression").at(wi).get<double>();
      const auto& d = j.at("tire_deflection").at(wi);
      s.tire_deflection[wi] = Vec2(d.at(0).get<double>(), d.at(1).get<double>());
      const auto& c = j.at("contacts").at(wi);
      s.wheel_contact[wi] = c.is_null() ? WheelContact{} : WheelContact{true, parse_semantic_class(c.get<std::string>())};
    }
    s.sim_time = j.at("sim_time").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("vehicle state: ") + e.what());
  }
  return s;
}

json action_to_json(const Action& a) { return json::array({a.steering, a.throttle, a.braking}); }

Action action_from_json(const json& j) {
  try {
    return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
  } catch (const json::exception& e) {
    throw FormatError(std::string("action: ") + e.what());
  }
}

json step_record_json(std::size_t step, double t, const VehicleState& s, const Action& a) {
  return {{"type", "step"},
          {"step", step},
          {"t", t},
          {"position", vec(s.position)},
          {"quaternion", {s.orientation.w(), s.orientation.x(), s.orientation.y(), s.orientation.z()}},
          {"linear_velocity", vec(s.linear_velocity)},
          {"angular_velocity", vec(s.angular_velocity)},
          {"roll", s.roll()},
          {"pitch", s.pitch()},
          {"action", action_to_json(a)},
          {"contacts", contacts_json(s.wheel_contact)}};
}

std::vector<json> read_log_lines(std::istream& in) {
  std::vector<json> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError(fmt::format("line {}: {}", number, e.what()));
    }
    if (!out.back().is_object() || !out.back().contains("type")) {
      throw FormatError(fmt::format("line {}: record without a type field", number));
    }
  }
  return out;
}

}  // namespace ridge
