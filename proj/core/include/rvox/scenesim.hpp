#pragma once

#include <cstdint>
#include <vector>

#include "rvox/types.hpp"

namespace rvox::sim {

// Angular limits of the simulated panel: reflectors must sit in the forward
// half space, |theta| <= pi/2 and |phi| <= pi/2, with r > 0.
bool within_limits(const SphericalPos& pos);

/// Throws std::domain_error if the reflector violates the simulator limits
/// or has a negative amplitude.
void validate_reflector(const Reflector& r);

struct SimOptions {
  double noise_amplitude = 0.0;  // std-dev of per-component Gaussian noise
  std::uint64_t seed = 0;
  /// When set, reflector amplitudes are additionally scaled by 1/r^2.
  bool path_loss = false;
  /// Frame size guard in bytes; synthesis refuses frames larger than this.
  std::size_t memory_budget_bytes = std::size_t{1} << 30;
};

/// Superimposes every reflector's return into one complex frame.
/// Reflectors are accumulated in list order with plain sequential adds, so
/// synthesizing a concatenated scene equals adding the per-scene frames
/// elementwise with no rounding difference.
RawFrame synthesize_frame(const Scene& scene, const ArrayGeometry& geom,
                          const ChirpConfig& chirp, const SimOptions& opts = {});

/// Adds a ghost return modelling a detour path: the ghost sits at
/// (r + detour_extra, theta + d_theta, phi + d_phi) with a fraction of the
/// source amplitude. `source` must be a reflector already in the scene and
/// detour_extra must be > 0 (a zero detour is the true path).
Scene inject_ghost(const Scene& scene, const Reflector& source,
                   double detour_extra_m, double d_theta_rad, double d_phi_rad,
                   double amplitude_fraction = 0.5);

/// Positions every trajectory at the given epoch by piecewise-linear
/// interpolation in (r, theta, phi). The epoch must lie within every
/// trajectory's span; reflectors come out in trajectory order.
Scene scene_at_epoch(const std::vector<Trajectory>& trajectories,
                     std::int64_t epoch);

}  // namespace rvox::sim
