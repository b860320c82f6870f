#include "ridge/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ridge/mppi.hpp"

namespace ridge {

using nlohmann::json;

ElevationWindow extract_elevation_window(const HeightField& field, Vec2 center, int half_cells) {
  ElevationWindow w;
  w.resolution = field.resolution;
  w.size = 2 * half_cells + 1;
  w.origin_x = static_cast<int>(std::lround(center.x() / field.resolution)) - half_cells;
  w.origin_y = static_cast<int>(std::lround(center.y() / field.resolution)) - half_cells;
  w.heights.resize(static_cast<std::size_t>(w.size) * w.size);
  for (int r = 0; r < w.size; ++r) {
    const int iy = std::clamp(w.origin_y + r, 0, field.cells_y - 1);
    for (int c = 0; c < w.size; ++c) {
      const int ix = std::clamp(w.origin_x + c, 0, field.cells_x - 1);
      w.heights[static_cast<std::size_t>(r) * w.size + c] = field.at(ix, iy);
    }
  }
  return w;
}

double ControllerContext::speed_scale() const { return std::sqrt(length_scale); }

PathProjection project_onto_path(std::span<const Vec2> path, Vec2 p) {
  PathProjection best{0.0, std::numeric_limits<double>::infinity()};
  if (path.empty()) return best;
  if (path.size() == 1) return {0.0, (p - path[0]).norm()};
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Vec2 a = path[i], d = path[i + 1] - path[i];
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    const double dist = (a + t * d - p).norm();
    const double len = std::sqrt(len2);
    if (dist < best.distance) best = {s + t * len, dist};
    s += len;
  }
  return best;
}

Vec2 point_at_arc_length(std::span<const Vec2> path, double s) {
  if (path.empty()) return Vec2::Zero();
  if (s <= 0.0) return path.front();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const double len = (path[i + 1] - path[i]).norm();
    if (s <= len && len > 0.0) return path[i] + (path[i + 1] - path[i]) * (s / len);
    s -= len;
  }
  return path.back();
}

Action speed_command(double target_speed, double current_speed, double gain) {
  const double u = gain * (target_speed - current_speed);
  return Action{0.0, std::clamp(u, 0.0, 1.0), std::clamp(-u, 0.0, 1.0)};
}

namespace {

double bearing_error(const VehicleState& s, Vec2 target) {
  const Vec2 d = target - s.planar_position();
  if (d.squaredNorm() == 0.0) return 0.0;
  return wrap_angle(std::atan2(d.y(), d.x()) - s.yaw());
}

template <typename T>
void read_if(const json& j, const char* key, T& value) {
  if (j.contains(key)) value = j.at(key).get<T>();
}

}  // namespace

// ---------------------------------------------------------------------------
// PID

PidParams PidParams::from_json(const json& j) {
  PidParams p;
  read_if(j, "lookahead", p.lookahead);
  read_if(j, "kp", p.kp);
  read_if(j, "ki", p.ki);
  read_if(j, "kd", p.kd);
  read_if(j, "target_speed", p.target_speed);
  read_if(j, "speed_gain", p.speed_gain);
  return p;
}

json PidParams::to_json() const {
  return {{"lookahead", lookahead}, {"kp", kp}, {"ki", ki}, {"kd", kd}, {"target_speed", target_speed},
          {"speed_gain", speed_gain}};
}

PidController::PidController(const ControllerContext& ctx, PidParams params) : ctx_(ctx), params_(params) {}

void PidController::reset() {
  integral_ = 0.0;
  previous_error_ = 0.0;
  has_previous_ = false;
}

Vec2 PidController::local_goal(const ControllerInput& in) const {
  const auto proj = project_onto_path(in.global_path, in.vehicle_state.planar_position());
  return point_at_arc_length(in.global_path, proj.arc_length + params_.lookahead * ctx_.length_scale);
}

Action PidController::act(const ControllerInput& in) {
  const double v_scale = ctx_.speed_scale();
  Action a = speed_command(params_.target_speed * v_scale, in.vehicle_state.forward_speed(),
                           params_.speed_gain / v_scale);
  if (in.global_path.size() < 2) return a.clamped();

  const double error = bearing_error(in.vehicle_state, local_goal(in));
  integral_ += error * ctx_.control_period;
  const double derivative = has_previous_ ? (error - previous_error_) / ctx_.control_period : 0.0;
  previous_error_ = error;
  has_previous_ = true;
  a.steering = params_.kp * error + params_.ki * integral_ + params_.kd * derivative;
  return a.clamped();
}

// ---------------------------------------------------------------------------
// Elevation heuristic

EhParams EhParams::from_json(const json& j) {
  EhParams p;
  read_if(j, "fan_radius", p.fan_radius);
  read_if(j, "fan_half_angle", p.fan_half_angle);
  read_if(j, "sectors", p.sectors);
  read_if(j, "alpha", p.alpha);
  read_if(j, "current_radius", p.current_radius);
  read_if(j, "tie_tolerance", p.tie_tolerance);
  read_if(j, "kp", p.kp);
  read_if(j, "lookahead", p.lookahead);
  read_if(j, "target_speed", p.target_speed);
  read_if(j, "speed_gain", p.speed_gain);
  if (p.sectors < 1 || !(p.fan_radius > 0.0) || !(p.fan_half_angle > 0.0)) {
    throw ConfigError("eh: sectors >= 1, fan_radius > 0 and fan_half_angle > 0 required");
  }
  return p;
}

json EhParams::to_json() const {
  return {{"fan_radius", fan_radius}, {"fan_half_angle", fan_half_angle}, {"sectors", sectors},
          {"alpha", alpha},           {"current_radius", current_radius}, {"tie_tolerance", tie_tolerance},
          {"kp", kp},                 {"lookahead", lookahead},           {"target_speed", target_speed},
          {"speed_gain", speed_gain}};
}

EhDecision evaluate_sectors(const ElevationWindow& window, Vec2 position, double yaw, const EhParams& p,
                            double path_bearing) {
  EhDecision out;
  out.sectors.resize(static_cast<std::size_t>(p.sectors));
  const double width = 2.0 * p.fan_half_angle / p.sectors;
  for (int i = 0; i < p.sectors; ++i) out.sectors[static_cast<std::size_t>(i)].bisector = -p.fan_half_angle + (i + 0.5) * width;

  // Membership: -1 for the current patch, sector index otherwise, -2 unused.
  std::vector<int> member(window.heights.size(), -2);
  double current_sum = 0.0;
  int current_count = 0;
  for (int r = 0; r < window.size; ++r) {
    for (int c = 0; c < window.size; ++c) {
      const auto k = static_cast<std::size_t>(r) * window.size + c;
      const Vec2 d = window.cell_center(c, r) - position;
      const double dist = d.norm();
      if (dist <= p.current_radius) {
        member[k] = -1;
        current_sum += window.heights[k];
        ++current_count;
      }
      if (dist == 0.0 || dist > p.fan_radius) continue;
      const double rel = wrap_angle(std::atan2(d.y(), d.x()) - yaw);
      if (std::abs(rel) > p.fan_half_angle) continue;
      const int idx = std::min(static_cast<int>(std::floor((rel + p.fan_half_angle) / width)), p.sectors - 1);
      if (member[k] == -1) {
        // Cells close to the vehicle describe the current patch only.
        continue;
      }
      member[k] = idx;
      auto& st = out.sectors[static_cast<std::size_t>(idx)];
      st.mean += window.heights[k];
      ++st.count;
    }
  }
  if (current_count == 0) {
    const int c = std::clamp(window.size / 2, 0, window.size - 1);
    out.current_mean = window.heights.empty() ? 0.0 : window.at(c, c);
  } else {
    out.current_mean = current_sum / current_count;
  }
  for (auto& st : out.sectors) {
    if (st.count > 0) st.mean /= st.count;
  }
  for (std::size_t k = 0; k < member.size(); ++k) {
    if (member[k] < 0) continue;
    auto& st = out.sectors[static_cast<std::size_t>(member[k])];
    const double e = window.heights[k] - st.mean;
    st.variance += e * e;
  }
  double best = std::numeric_limits<double>::infinity();
  for (auto& st : out.sectors) {
    if (st.count == 0) {
      st.score = std::numeric_limits<double>::infinity();
      continue;
    }
    st.variance /= st.count;
    st.score = std::abs(st.mean - out.current_mean) + p.alpha * st.variance;
    best = std::min(best, st.score);
  }
  if (!std::isfinite(best)) return out;
  double best_alignment = std::numeric_limits<double>::infinity();
  for (int i = 0; i < p.sectors; ++i) {
    const auto& st = out.sectors[static_cast<std::size_t>(i)];
    if (!(st.score <= best + p.tie_tolerance)) continue;
    const double alignment = std::abs(wrap_angle(st.bisector - path_bearing));
    if (alignment < best_alignment) {
      best_alignment = alignment;
      out.chosen = i;
    }
  }
  return out;
}

ElevationHeuristicController::ElevationHeuristicController(const ControllerContext& ctx, EhParams params)
    : ctx_(ctx), scaled_(params) {
  const double s = ctx.length_scale;
  scaled_.fan_radius *= s;
  scaled_.current_radius *= s;
  scaled_.tie_tolerance *= s;
  scaled_.lookahead *= s;
  // Heights enter the score squared through the variance; keep alpha in
  // full-scale units so the ranking is scale invariant.
  scaled_.alpha /= s;
}

Action ElevationHeuristicController::act(const ControllerInput& in) {
  const double v_scale = ctx_.speed_scale();
  Action a = speed_command(scaled_.target_speed * v_scale, in.vehicle_state.forward_speed(),
                           scaled_.speed_gain / v_scale);
  const Vec2 pos = in.vehicle_state.planar_position();
  double path_bearing = 0.0;
  if (!in.global_path.empty()) {
    const auto proj = project_onto_path(in.global_path, pos);
    path_bearing = bearing_error(in.vehicle_state, point_at_arc_length(in.global_path, proj.arc_length + scaled_.lookahead));
  } else {
    path_bearing = bearing_error(in.vehicle_state, in.goal);
  }
  last_ = evaluate_sectors(in.elevation_window, pos, in.vehicle_state.yaw(), scaled_, path_bearing);
  double heading = last_.chosen >= 0 ? last_.sectors[static_cast<std::size_t>(last_.chosen)].bisector : path_bearing;
  // No sector points anywhere near the path: turn back toward it first.
  if (std::abs(path_bearing) > scaled_.fan_half_angle) heading = path_bearing;
  a.steering = scaled_.kp * heading;
  return a.clamped();
}

// ---------------------------------------------------------------------------
// Registry

std::vector<std::string> controller_names() { return {"pid", "eh", "mppi"}; }

std::unique_ptr<Controller> make_controller(std::string_view name, const ControllerContext& ctx, const json& params) {
  const json& p = params.is_null() ? json::object() : params;
  try {
    if (name == "pid") return std::make_unique<PidController>(ctx, PidParams::from_json(p));
    if (name == "eh") return std::make_unique<ElevationHeuristicController>(ctx, EhParams::from_json(p));
    if (name == "mppi") return std::make_unique<MppiController>(ctx, MppiParams::from_json(p));
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("controller '{}': {}", name, e.what()));
  }
  throw LookupError(fmt::format("unknown controller '{}'; registered: {}", name, fmt::join(controller_names(), ", ")));
}

}  // namespace ridge
