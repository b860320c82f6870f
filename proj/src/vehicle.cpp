#include "ridge/vehicle.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace ridge {

namespace {

constexpr std::array<double, kWheelCount> kWheelSideX = {1.0, 1.0, -1.0, -1.0};
constexpr std::array<double, kWheelCount> kWheelSideY = {1.0, -1.0, 1.0, -1.0};
constexpr double kRollingSpeedScale = 0.1;  // m/s, smooths rolling resistance sign

Vec3 hardpoint_body(const VehicleParams& p, int w) {
  return {0.5 * p.wheelbase * kWheelSideX[w], 0.5 * p.track_width * kWheelSideY[w], -p.com_height};
}

/// Front wheels steer with Ackermann geometry; rear wheels are fixed.
double wheel_steer(const VehicleParams& p, int w, double steer) {
  if (w >= 2 || steer == 0.0) return 0.0;
  const double turn_radius = p.wheelbase / std::tan(std::abs(steer));
  const bool inner = (steer > 0.0) == (kWheelSideY[w] > 0.0);
  const double r = inner ? turn_radius - 0.5 * p.track_width : turn_radius + 0.5 * p.track_width;
  return std::copysign(std::atan(p.wheelbase / std::max(r, 1e-6)), steer);
}

struct WheelGround {
  double height = 0.0;  // highest point of the terrain seen by the wheel rim
  Vec2 at = Vec2::Zero();
};

// Envelope of a rigid wheel over the terrain: the surface sampled on a disc
// around the wheel bottom, each sample lowered by the rim's drop at that
// offset. Steps shorter than the wheel are ridden over instead of hit.
WheelGround wheel_ground(const TerrainSurface& surface, double x, double y, double radius) {
  constexpr int kRing = 8;
  constexpr double kRingFraction = 0.6;
  const double rho = kRingFraction * radius;
  const double drop = radius - std::sqrt(radius * radius - rho * rho);
  WheelGround g{surface.height(x, y), Vec2(x, y)};
  for (int i = 0; i < kRing; ++i) {
    const double a = 2.0 * kPi * i / kRing;
    const Vec2 q(x + rho * std::cos(a), y + rho * std::sin(a));
    const double h = surface.height(q.x(), q.y()) - drop;
    if (h > g.height) g = {h, q};
  }
  return g;
}

}  // namespace

// ---------------------------------------------------------------------------
// Parameters and state

void VehicleParams::validate() const {
  const std::array<double, 14> positive = {mass, wheelbase, track_width, com_height, wheel_radius, wheel_width,
                                           suspension_stiffness, suspension_damping, suspension_travel,
                                           max_steer_angle, max_drive_force, max_brake_force, max_speed,
                                           tire_stiffness};
  for (double v : positive) {
    if (!(v > 0.0)) throw ConfigError("vehicle '" + name + "': all parameters must be positive");
  }
  if (!(inertia.minCoeff() > 0.0)) throw ConfigError("vehicle '" + name + "': inertia must be positive");
  if (!(com_height < 2.0 * wheel_radius + suspension_travel)) {
    throw ConfigError("vehicle '" + name + "': com_height must be below 2*wheel_radius + suspension_travel");
  }
}

double VehicleParams::static_compression() const {
  return std::min(mass * kGravity / (kWheelCount * suspension_stiffness), suspension_travel);
}

double VehicleParams::ride_height() const {
  return com_height + (suspension_travel - static_compression()) + wheel_radius;
}

Action Action::clamped() const {
  auto finite_or_zero = [](double v) { return std::isfinite(v) ? v : 0.0; };
  return {std::clamp(finite_or_zero(steering), -1.0, 1.0), std::clamp(finite_or_zero(throttle), 0.0, 1.0),
          std::clamp(finite_or_zero(braking), 0.0, 1.0)};
}

double VehicleState::roll() const {
  const auto r = orientation.toRotationMatrix();
  return std::atan2(r(2, 1), r(2, 2));
}

double VehicleState::pitch() const {
  const auto r = orientation.toRotationMatrix();
  return -std::asin(std::clamp(r(2, 0), -1.0, 1.0));
}

double VehicleState::yaw() const {
  const auto r = orientation.toRotationMatrix();
  return std::atan2(r(1, 0), r(0, 0));
}

double VehicleState::forward_speed() const {
  return linear_velocity.dot(orientation * Vec3::UnitX());
}

bool VehicleState::finite() const {
  return position.allFinite() && orientation.coeffs().allFinite() && linear_velocity.allFinite() &&
         angular_velocity.allFinite();
}

bool operator==(const VehicleState& a, const VehicleState& b) {
  return a.position == b.position && a.orientation.coeffs() == b.orientation.coeffs() &&
         a.linear_velocity == b.linear_velocity && a.angular_velocity == b.angular_velocity &&
         a.wheel_compression == b.wheel_compression && a.wheel_contact == b.wheel_contact &&
         a.tire_deflection == b.tire_deflection && a.sim_time == b.sim_time;
}

// ---------------------------------------------------------------------------
// Terrain surface

double TerrainSurface::height(double x, double y) const {
  const auto& f = env_.heightfield;
  if (soil_.empty()) return f.height_at_clamped(x, y);
  x = std::clamp(x, 0.0, f.extent_x());
  y = std::clamp(y, 0.0, f.extent_y());
  const double fx = x / f.resolution, fy = y / f.resolution;
  const int ix = std::clamp(static_cast<int>(std::floor(fx)), 0, f.cells_x - 2);
  const int iy = std::clamp(static_cast<int>(std::floor(fy)), 0, f.cells_y - 2);
  const double tx = fx - ix, ty = fy - iy;
  auto h = [&](int cx, int cy) { return f.at(cx, cy) - soil_.sinkage(cy * f.cells_x + cx); };
  return (h(ix, iy) * (1.0 - tx) + h(ix + 1, iy) * tx) * (1.0 - ty) +
         (h(ix, iy + 1) * (1.0 - tx) + h(ix + 1, iy + 1) * tx) * ty;
}

Vec3 TerrainSurface::normal(double x, double y) const {
  if (soil_.empty()) return surface_normal_clamped(env_.heightfield, x, y);
  const auto& f = env_.heightfield;
  const double h = 0.5 * f.resolution;
  const double x0 = std::max(x - h, 0.0), x1 = std::min(x + h, f.extent_x());
  const double y0 = std::max(y - h, 0.0), y1 = std::min(y + h, f.extent_y());
  if (!(x1 > x0) || !(y1 > y0)) return Vec3::UnitZ();
  const double dhdx = (height(x1, y) - height(x0, y)) / (x1 - x0);
  const double dhdy = (height(x, y1) - height(x, y0)) / (y1 - y0);
  return Vec3(-dhdx, -dhdy, 1.0).normalized();
}

int TerrainSurface::cell_index(double x, double y) const {
  const auto& f = env_.heightfield;
  const int ix = std::clamp(static_cast<int>(std::lround(x / f.resolution)), 0, f.cells_x - 1);
  const int iy = std::clamp(static_cast<int>(std::lround(y / f.resolution)), 0, f.cells_y - 1);
  return iy * f.cells_x + ix;
}

const PatchSemantics& TerrainSurface::patch(double x, double y) const {
  const int idx = cell_index(x, y);
  const int cx = env_.heightfield.cells_x;
  return env_.semantics.patches[static_cast<std::size_t>(SemanticsLayer::patch_index_of_cell(idx % cx, idx / cx))];
}

double surface_height_at(const EnvironmentSpec& env, const SoilState& soil, double x, double y) {
  if (!env.heightfield.contains(x, y)) {
    throw BoundsError(fmt::format("query ({}, {}) outside world [0, {}] x [0, {}]", x, y, env.heightfield.extent_x(),
                                  env.heightfield.extent_y()));
  }
  return TerrainSurface(env, soil).height(x, y);
}

VehicleState spawn_state(const VehicleParams& p, const EnvironmentSpec& env, const SoilState& soil, Vec2 xy,
                         double yaw) {
  const TerrainSurface surface(env, soil);
  const Vec2 fwd(std::cos(yaw), std::sin(yaw));
  const Vec2 left(-fwd.y(), fwd.x());
  std::array<double, kWheelCount> z{};
  for (int w = 0; w < kWheelCount; ++w) {
    const Vec2 q = xy + fwd * (0.5 * p.wheelbase * kWheelSideX[w]) + left * (0.5 * p.track_width * kWheelSideY[w]);
    z[static_cast<std::size_t>(w)] = surface.height(q.x(), q.y());
  }
  const double mean = 0.25 * (z[0] + z[1] + z[2] + z[3]);
  const double slope_fwd = ((z[0] + z[1]) - (z[2] + z[3])) / (2.0 * p.wheelbase);
  const double slope_left = ((z[0] + z[2]) - (z[1] + z[3])) / (2.0 * p.track_width);
  const Vec3 ex = Vec3(fwd.x(), fwd.y(), slope_fwd).normalized();
  const Vec3 ey0 = Vec3(left.x(), left.y(), slope_left);
  const Vec3 ez = ex.cross(ey0).normalized();
  const Vec3 ey = ez.cross(ex);
  Eigen::Matrix3d rot;
  rot.col(0) = ex;
  rot.col(1) = ey;
  rot.col(2) = ez;

  // Four footprints rarely share a plane; lift the body so the wheel standing
  // highest above the fitted plane starts at static compression.
  double lift = 0.0;
  for (int w = 0; w < kWheelCount; ++w) {
    const double plane = mean + 0.5 * kWheelSideX[w] * slope_fwd * p.wheelbase +
                         0.5 * kWheelSideY[w] * slope_left * p.track_width;
    lift = std::max(lift, z[static_cast<std::size_t>(w)] - plane);
  }

  VehicleState s;
  s.orientation = Quat(rot).normalized();
  s.position = Vec3(xy.x(), xy.y(), mean + lift) + ez * p.ride_height();
  s.wheel_compression.fill(p.static_compression());
  return s;
}

// ---------------------------------------------------------------------------
// Dynamics

Simulator::Simulator(const EnvironmentSpec& env, VehicleParams params, VehicleState initial, SoilState soil)
    : env_(env), params_(std::move(params)), state_(std::move(initial)), soil_(std::move(soil)) {
  params_.validate();
}

void Simulator::reset(VehicleState state, SoilState soil) {
  state_ = std::move(state);
  soil_ = std::move(soil);
  diag_ = {};
}

const StepDiagnostics& Simulator::step(const Action& raw_action, double dt) {
  if (!(dt > 0.0) || dt > kMaxDt) throw ConfigError(fmt::format("dt {} outside (0, {}]", dt, kMaxDt));
  const Action a = raw_action.clamped();
  const VehicleParams& p = params_;
  const TerrainSurface surface(env_, soil_);
  const VehicleState prev = state_;
  VehicleState& s = state_;

  const Eigen::Matrix3d rot = s.orientation.toRotationMatrix();
  const Vec3 omega_w = rot * s.angular_velocity;
  const Vec3 down = -rot.col(2);
  Vec3 force(0.0, 0.0, -p.mass * kGravity);
  Vec3 torque = Vec3::Zero();
  diag_ = {};

  auto apply = [&](const Vec3& f, const Vec3& at) {
    force += f;
    torque += (at - s.position).cross(f);
  };
  auto point_velocity = [&](const Vec3& at) { return Vec3(s.linear_velocity + omega_w.cross(at - s.position)); };

  const double steer = a.steering * p.max_steer_angle;
  const double reach = p.suspension_travel + p.wheel_radius;
  const double wheel_drive = a.throttle * p.max_drive_force / kWheelCount;
  const double wheel_brake = a.braking * p.max_brake_force / kWheelCount;
  std::array<Vec3, kWheelCount> wheel_centers{};

  for (int w = 0; w < kWheelCount; ++w) {
    const auto wi = static_cast<std::size_t>(w);
    auto& diag = diag_.wheels[wi];
    const Vec3 hp = s.position + rot * hardpoint_body(p, w);
    wheel_centers[wi] = hp + down * (p.suspension_travel - s.wheel_compression[wi]);

    auto lose_contact = [&] {
      s.wheel_compression[wi] = 0.0;
      s.wheel_contact[wi] = WheelContact{};
      s.tire_deflection[wi].setZero();
      wheel_centers[wi] = hp + down * p.suspension_travel;
    };
    if (down.z() > -0.2) {
      lose_contact();
      continue;
    }
    // Vertical probe below the body-fixed wheel bottom at full extension. The
    // penalty depends on that point's position only, so the spring part is
    // conservative and the damper only dissipates.
    const Vec3 contact = hp + down * reach;
    const WheelGround ground = wheel_ground(surface, contact.x(), contact.y(), p.wheel_radius);
    const double compression = ground.height - contact.z();
    if (!(compression > 0.0)) {
      lose_contact();
      continue;
    }
    const Vec3 n = surface.normal(ground.at.x(), ground.at.y());
    const PatchSemantics& patch = surface.patch(ground.at.x(), ground.at.y());
    const double compression_rate = -n.dot(point_velocity(contact)) / n.z();

    double load = p.suspension_stiffness * std::min(compression, p.suspension_travel) +
                  p.suspension_damping * compression_rate;
    if (compression > p.suspension_travel) {
      load += p.bump_stop_stiffness * (compression - p.suspension_travel) + p.bump_stop_damping * compression_rate;
    }
    // `load` is the vertical component; the force itself acts along n.
    const double normal = std::max(0.0, load) / n.z();
    s.wheel_compression[wi] = std::min(compression, p.suspension_travel);
    s.wheel_contact[wi] = {true, patch.semantic_class};
    wheel_centers[wi] = hp + down * (p.suspension_travel - s.wheel_compression[wi]);

    double compaction = 0.0;
    if (patch.scm) {
      const int cell = surface.cell_index(ground.at.x(), ground.at.y());
      soil_.press(cell, normal, *patch.scm, p.wheel_width, p.wheel_radius, dt);
      const SoilCell* c = soil_.find(cell);
      const double pass_depth = c ? c->sinkage - c->pass_start : 0.0;
      compaction = scm_compaction_resistance(pass_depth, *patch.scm, p.wheel_width);
      diag.sinkage = c ? c->sinkage : 0.0;
    }

    // Contact frame: rolling direction projected into the tangent plane.
    const double wheel_angle = wheel_steer(p, w, steer);
    Vec3 heading = rot * Vec3(std::cos(wheel_angle), std::sin(wheel_angle), 0.0);
    heading -= heading.dot(n) * n;
    if (heading.squaredNorm() < 1e-12) {
      lose_contact();
      continue;
    }
    heading.normalize();
    const Vec3 lateral = n.cross(heading);
    const Vec3 vc = point_velocity(contact);
    const double v_long = vc.dot(heading);
    const double v_lat = vc.dot(lateral);

    Vec2& deflection = s.tire_deflection[wi];
    deflection.y() = (deflection.y() + v_lat * dt) / (1.0 + std::abs(v_long) * dt / p.tire_relaxation_length);
    double f_lat = -p.tire_stiffness * deflection.y() - p.tire_damping * v_lat;

    const double fade = std::clamp(1.0 - v_long / p.max_speed, 0.0, 1.0);
    const double roll_sign = std::tanh(v_long / kRollingSpeedScale);
    double f_long = wheel_drive * fade - (p.rolling_resistance * normal + compaction) * roll_sign;
    if (wheel_brake > 0.0) {
      deflection.x() += v_long * dt;
      double f_brake = -p.tire_stiffness * deflection.x() - p.tire_damping * v_long;
      if (std::abs(f_brake) > wheel_brake) {
        f_brake = std::copysign(wheel_brake, f_brake);
        deflection.x() = -f_brake / p.tire_stiffness;
      }
      f_long += f_brake;
    } else {
      deflection.x() = 0.0;
    }

    const double limit = patch.traction() * normal;
    const double magnitude = std::hypot(f_long, f_lat);
    if (magnitude > limit) {
      const double k = magnitude > 0.0 ? limit / magnitude : 0.0;
      f_long *= k;
      f_lat *= k;
      deflection.y() = -f_lat / p.tire_stiffness;
      if (wheel_brake > 0.0) deflection.x() = -f_long / p.tire_stiffness;
    }

    apply(normal * n + f_long * heading + f_lat * lateral, contact);
    diag.normal_force = normal;
    diag.tire_force = Vec2(f_long, f_lat);
    diag.traction_limit = limit;
  }

  // Chassis box corners against the terrain.
  for (int c = 0; c < 8; ++c) {
    const Vec3 local((c & 1 ? 1.0 : -1.0) * p.chassis_half_extents.x(), (c & 2 ? 1.0 : -1.0) * p.chassis_half_extents.y(),
                     p.chassis_center_height + (c & 4 ? 1.0 : -1.0) * p.chassis_half_extents.z());
    const Vec3 corner = s.position + rot * local;
    const double ground = surface.height(corner.x(), corner.y());
    const double depth = ground - corner.z();
    if (depth <= 0.0) continue;
    const Vec3 n = surface.normal(corner.x(), corner.y());
    const Vec3 v = point_velocity(corner);
    const double fn = std::max(0.0, p.chassis_contact_stiffness * depth * n.z() - p.chassis_contact_damping * v.dot(n));
    const Vec3 vt = v - v.dot(n) * n;
    const double vt_norm = vt.norm();
    Vec3 ft = Vec3::Zero();
    if (vt_norm > 0.0) ft = -p.chassis_friction * fn * vt / std::max(vt_norm, 0.05);
    apply(fn * n + ft, corner);
    diag_.chassis_ground_force += fn;
  }

  // Penalty contact of wheel spheres and a chassis sphere with obstacles.
  if (!env_.obstacles.obstacles.empty()) {
    std::array<std::pair<Vec3, double>, kWheelCount + 1> spheres{};
    for (int w = 0; w < kWheelCount; ++w) spheres[static_cast<std::size_t>(w)] = {wheel_centers[static_cast<std::size_t>(w)], p.wheel_radius};
    spheres[kWheelCount] = {s.position + rot * Vec3(0.0, 0.0, p.chassis_center_height),
                            std::max(p.chassis_half_extents.x(), p.chassis_half_extents.y())};
    for (const auto& o : env_.obstacles.obstacles) {
      for (const auto& [center, radius] : spheres) {
        const Vec2 d = center.head<2>() - o.center;
        const double dist = d.norm();
        const double depth = o.footprint_radius + radius - dist;
        if (depth <= 0.0 || dist < 1e-9) continue;
        const double base = env_.heightfield.height_at_clamped(o.center.x(), o.center.y());
        if (center.z() - radius > base + o.height) continue;
        const Vec3 n(d.x() / dist, d.y() / dist, 0.0);
        const Vec3 at = center - radius * n;
        const double fn = std::max(0.0, p.obstacle_stiffness * depth - p.obstacle_damping * point_velocity(at).dot(n));
        apply(fn * n, at);
        diag_.obstacle_force += fn;
      }
    }
  }

  // Semi-implicit Euler.
  s.linear_velocity += force / p.mass * dt;
  const Vec3 torque_b = rot.transpose() * torque;
  const Vec3& w = s.angular_velocity;
  const Vec3 gyro = w.cross(p.inertia.cwiseProduct(w));
  s.angular_velocity += ((torque_b - gyro).cwiseQuotient(p.inertia)) * dt;
  s.position += s.linear_velocity * dt;
  const double angle = s.angular_velocity.norm() * dt;
  if (angle > 0.0) {
    s.orientation = s.orientation * Quat(Eigen::AngleAxisd(angle, s.angular_velocity.normalized()));
  }
  s.orientation.normalize();
  s.sim_time += dt;
  soil_.advance();

  if (!s.finite()) {
    state_ = prev;
    throw SimulationFault(fmt::format("non-finite vehicle state at t = {:.3f} s", prev.sim_time + dt), prev);
  }
  return diag_;
}

StepResult step(const VehicleState& state, const SoilState& soil, const Action& action, const EnvironmentSpec& env,
                const VehicleParams& params, double dt) {
  Simulator sim(env, params, state, soil);
  sim.step(action, dt);
  return {sim.state(), sim.soil(), sim.diagnostics()};
}

// ---------------------------------------------------------------------------
// Failure detection

bool detect_rollover(const VehicleState& state, double threshold) {
  return std::abs(state.roll()) > threshold || std::abs(state.pitch()) > threshold;
}

bool detect_stuck(const std::deque<PoseSample>& history, double window, double epsilon) {
  if (history.size() < 2) return false;
  const auto& now = history.back();
  if (now.t - history.front().t < window - 1e-9) return false;
  // Latest sample at least `window` seconds old.
  const PoseSample* ref = &history.front();
  for (const auto& h : history) {
    if (now.t - h.t >= window - 1e-9) ref = &h;
    else break;
  }
  return (now.xy - ref->xy).norm() < epsilon;
}

}  // namespace ridge
