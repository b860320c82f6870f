#include "ridge/soil.hpp"

#include <algorithm>
#include <cmath>

namespace ridge {

double scm_pressure(double sinkage, const ScmParams& params, double contact_width, double multiplier) {
  const double z = std::max(sinkage, 0.0);
  if (z == 0.0) return 0.0;
  const double b = std::max(contact_width, 1e-9);
  return multiplier * (params.k_c / b + params.k_phi) * std::pow(z, params.n_exp);
}

double scm_bearing_force(double sinkage, const ScmParams& params, double wheel_width, double wheel_radius,
                         double multiplier) {
  const double z = std::clamp(sinkage, 0.0, wheel_radius);
  const double chord = 2.0 * std::sqrt(std::max(0.0, 2.0 * wheel_radius * z - z * z));
  return scm_pressure(z, params, wheel_width, multiplier) * wheel_width * chord;
}

double scm_compaction_resistance(double sinkage, const ScmParams& params, double wheel_width) {
  const double z = std::max(sinkage, 0.0);
  const double b = std::max(wheel_width, 1e-9);
  return b * (params.k_c / b + params.k_phi) * std::pow(z, params.n_exp + 1.0) / (params.n_exp + 1.0);
}

double SoilState::sinkage(int cell) const {
  const auto it = cells_.find(cell);
  return it == cells_.end() ? 0.0 : it->second.sinkage;
}

const SoilCell* SoilState::find(int cell) const {
  const auto it = cells_.find(cell);
  return it == cells_.end() ? nullptr : &it->second;
}

double SoilState::press(int cell, double load, const ScmParams& params, double wheel_width, double wheel_radius,
                        double dt) {
  auto& c = cells_[cell];
  if (c.last_step < step_ - 1) {
    c.pass_start = c.sinkage;
    c.multiplier = 1.0 + params.hardening * c.sinkage;
  }
  c.last_step = step_;
  if (!(load > 0.0)) return 0.0;

  const double depth = c.sinkage - c.pass_start;
  auto bearing = [&](double z) { return scm_bearing_force(z, params, wheel_width, wheel_radius, c.multiplier); };
  const double support = bearing(depth);
  if (load <= support) return 0.0;

  // Equilibrium depth of this pass, capped at one wheel radius.
  double lo = depth, hi = wheel_radius;
  if (bearing(hi) > load) {
    for (int i = 0; i < 50; ++i) {
      const double mid = 0.5 * (lo + hi);
      (bearing(mid) < load ? lo : hi) = mid;
    }
  }
  const double target = hi;
  const double added = std::min(dt * (load - support) / params.damping, std::max(0.0, target - depth));
  c.sinkage += added;
  return added;
}

bool operator==(const SoilState& a, const SoilState& b) {
  if (a.step_ != b.step_ || a.cells_.size() != b.cells_.size()) return false;
  for (const auto& [k, v] : a.cells_) {
    const auto it = b.cells_.find(k);
    if (it == b.cells_.end()) return false;
    const auto& w = it->second;
    if (v.sinkage != w.sinkage || v.pass_start != w.pass_start || v.multiplier != w.multiplier ||
        v.last_step != w.last_step) {
      return false;
    }
  }
  return true;
}

}  // namespace ridge
