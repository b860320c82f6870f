#pragma once

// Line-delimited JSON step records shared by episode logs, exploration
// streams and failure clips. Doubles are written with round-trip precision so
// logged states reload bit-exactly.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include <nlohmann/json.hpp>

#include "ridge/vehicle.hpp"

namespace ridge {

inline constexpr int kStepLogVersion = 1;

nlohmann::json state_to_json(const VehicleState& s);
VehicleState state_from_json(const nlohmann::json& j);

nlohmann::json action_to_json(const Action& a);
Action action_from_json(const nlohmann::json& j);

/// {type: step, step, t, position, quaternion [w x y z], linear_velocity,
///  angular_velocity, roll, pitch, action [steer throttle brake], contacts}
nlohmann::json step_record_json(std::size_t step, double t, const VehicleState& s, const Action& a);

/// Parses every non-empty line; a malformed line throws FormatError naming it.
std::vector<nlohmann::json> read_log_lines(std::istream& in);

}  // namespace ridge
