#pragma once

// Data-parallel kernels. Each has a serial reference implementation and an
// OpenMP implementation that must produce bit-identical output; the tests
// compare them and bench/ times them against each other.

#include <cstdint>
#include <span>

namespace ridge::kernels {

struct NoiseParams {
  int octaves = 5;
  double persistence = 0.5;
  double base_wavelength = 32.0;  // in cells
};

/// Multi-octave value noise sampled at integer cell coordinates, row-major.
void value_noise_serial(const NoiseParams& params, std::uint64_t seed, int cells_x, int cells_y,
                        std::span<double> out);
void value_noise_parallel(const NoiseParams& params, std::uint64_t seed, int cells_x, int cells_y,
                          std::span<double> out);

/// Single noise sample; both kernels are built from this.
double value_noise_at(const NoiseParams& params, std::uint64_t seed, double x, double y);

}  // namespace ridge::kernels
