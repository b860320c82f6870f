#pragma once

#include <cstdint>
#include <unordered_map>

#include "ridge/terrain.hpp"

namespace ridge {

/// Bekker pressure-sinkage: p = (k_c / b + k_phi) * z^n, times the cell's
/// hardening multiplier. Negative inputs are clamped.
double scm_pressure(double sinkage, const ScmParams& params, double contact_width, double multiplier = 1.0);

/// Bearing force of a wheel of the given radius/width sunk by `sinkage`:
/// Bekker pressure over a width x chord contact patch.
double scm_bearing_force(double sinkage, const ScmParams& params, double wheel_width, double wheel_radius,
                         double multiplier = 1.0);

/// Bekker compaction resistance per wheel: b * (k_c/b + k_phi) * z^(n+1) / (n+1).
double scm_compaction_resistance(double sinkage, const ScmParams& params, double wheel_width);

struct SoilCell {
  double sinkage = 0.0;     // plastic, below the undisturbed surface, m
  double pass_start = 0.0;  // sinkage when the current loading pass began
  double multiplier = 1.0;  // hardening multiplier of the current pass
  std::int64_t last_step = -2;
};

// Vertical-only soil deformation on deformable cells. A cell is loaded in
// passes: contact on consecutive steps continues a pass; a gap starts a new
// one whose stiffness multiplier is 1 + hardening * accumulated sinkage.
class SoilState {
 public:
  /// Sinkage of a grid cell (0 when never touched).
  double sinkage(int cell) const;
  const SoilCell* find(int cell) const;
  bool empty() const { return cells_.empty(); }
  std::size_t touched_cells() const { return cells_.size(); }
  std::int64_t step_index() const { return step_; }

  /// Applies a normal load for one step of length dt. The cell yields at a
  /// rate (load - bearing) / damping until bearing capacity meets the load.
  /// Returns the sinkage added this step.
  double press(int cell, double load, const ScmParams& params, double wheel_width, double wheel_radius,
               double dt);

  /// Marks the end of one simulation step.
  void advance() { ++step_; }

  friend bool operator==(const SoilState& a, const SoilState& b);

 private:
  std::unordered_map<int, SoilCell> cells_;
  std::int64_t step_ = 0;
};

}  // namespace ridge
