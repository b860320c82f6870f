#include <cmath>

#include "ridge/kernels.hpp"
#include "ridge/rng.hpp"

namespace ridge::kernels {

namespace {

double lattice_value(std::uint64_t octave_seed, std::int64_t i, std::int64_t j) {
  const std::uint64_t h = splitmix64(octave_seed ^ splitmix64(static_cast<std::uint64_t>(i) * 0x9E3779B1ull +
                                                              (static_cast<std::uint64_t>(j) << 32)));
  return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

double octave_sample(std::uint64_t octave_seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto i = static_cast<std::int64_t>(fx);
  const auto j = static_cast<std::int64_t>(fy);
  const double u = fade(x - fx), v = fade(y - fy);
  const double a = lattice_value(octave_seed, i, j);
  const double b = lattice_value(octave_seed, i + 1, j);
  const double c = lattice_value(octave_seed, i, j + 1);
  const double d = lattice_value(octave_seed, i + 1, j + 1);
  return (a + (b - a) * u) * (1.0 - v) + (c + (d - c) * u) * v;
}

}  // namespace

double value_noise_at(const NoiseParams& params, std::uint64_t seed, double x, double y) {
  double sum = 0.0;
  double amplitude = 1.0;
  double wavelength = params.base_wavelength;
  for (int o = 0; o < params.octaves; ++o) {
    const std::uint64_t os = derive_seed(seed, "noise-octave", static_cast<std::uint64_t>(o));
    // Per-octave offset keeps lattice corners from lining up at the origin.
    const double ox = static_cast<double>(os & 0xFFFF) / 65536.0 * 97.0;
    const double oy = static_cast<double>((os >> 16) & 0xFFFF) / 65536.0 * 97.0;
    sum += amplitude * octave_sample(os, x / wavelength + ox, y / wavelength + oy);
    amplitude *= params.persistence;
    wavelength *= 0.5;
  }
  return sum;
}

void value_noise_serial(const NoiseParams& params, std::uint64_t seed, int cells_x, int cells_y,
                        std::span<double> out) {
  for (int iy = 0; iy < cells_y; ++iy) {
    for (int ix = 0; ix < cells_x; ++ix) {
      out[static_cast<std::size_t>(iy) * cells_x + ix] = value_noise_at(params, seed, ix, iy);
    }
  }
}

void value_noise_parallel(const NoiseParams& params, std::uint64_t seed, int cells_x, int cells_y,
                          std::span<double> out) {
#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < cells_y; ++iy) {
    for (int ix = 0; ix < cells_x; ++ix) {
      out[static_cast<std::size_t>(iy) * cells_x + ix] = value_noise_at(params, seed, ix, iy);
    }
  }
}

}  // namespace ridge::kernels
