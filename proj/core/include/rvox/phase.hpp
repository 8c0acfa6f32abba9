#pragma once

#include <cstddef>

#include "rvox/common.hpp"
#include "rvox/types.hpp"

namespace rvox {

// Single source of truth for the signal phase model. The simulator emits
// exp(-j * (range_phase + steering_phase)) per reflector and the
// reconstruction kernels correlate with the exact conjugate,
// exp(+j * (range_phase + steering_phase)), so a matched voxel sums
// coherently by construction.

/// Beat phase accumulated by sample t for a reflector at range r:
/// 2*pi * (slope * r / c) * t_sec.
inline double range_phase(const ChirpConfig& chirp, double r_m, std::size_t t) {
  return 2.0 * kPi * (chirp.slope_hz_per_s() * r_m / kSpeedOfLight) *
         chirp.sample_time_s(t);
}

/// Per-element steering phase for direction (theta, phi) at tx element m,
/// rx element n: (2*pi/lambda) * cos(theta) * (n*dy*sin(phi) + m*dx*cos(phi)).
inline double steering_phase(const ArrayGeometry& geom, double lambda_m,
                             double theta_rad, double phi_rad, std::size_t m,
                             std::size_t n) {
  double cos_theta = std::cos(theta_rad);
  double proj = static_cast<double>(n) * geom.dy_m * std::sin(phi_rad) +
                static_cast<double>(m) * geom.dx_m * std::cos(phi_rad);
  return (2.0 * kPi / lambda_m) * cos_theta * proj;
}

}  // namespace rvox
