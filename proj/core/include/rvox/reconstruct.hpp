#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rvox/common.hpp"
#include "rvox/types.hpp"

namespace rvox::recon {

struct Dims3 {
  std::size_t x = 0, y = 0, z = 0;
  bool operator==(const Dims3&) const = default;
};

/// Scan volume in spherical coordinates with per-axis resolution.
struct GridSpec {
  double r_min_m = 0.0;
  double r_max_m = 10.0;
  double r_res_m = 0.1;
  double theta_min_rad = -kPi / 4;  // -45 deg
  double theta_max_rad = kPi / 4;   // +45 deg
  double theta_res_rad = deg_to_rad(5.0);
  double phi_min_rad = -kPi / 2;  // -90 deg
  double phi_max_rad = kPi / 2;   // +90 deg
  double phi_res_rad = deg_to_rad(5.0);

  void validate() const;  // throws std::invalid_argument

  /// Voxel centers sit at min + (index + 0.5) * res on each axis.
  double r_center(std::size_t i) const { return r_min_m + (static_cast<double>(i) + 0.5) * r_res_m; }
  double theta_center(std::size_t j) const {
    return theta_min_rad + (static_cast<double>(j) + 0.5) * theta_res_rad;
  }
  double phi_center(std::size_t k) const {
    return phi_min_rad + (static_cast<double>(k) + 0.5) * phi_res_rad;
  }

  bool contains(const SphericalPos& p) const;

  bool operator==(const GridSpec&) const = default;
};

/// Ceiling quotients of span over resolution per axis, so every range is
/// fully covered. A tiny slack absorbs representation error on divisions
/// that are exact in real arithmetic.
Dims3 grid_dims(const GridSpec& spec);

/// Real-valued reflection power per voxel, stored R-major, then theta,
/// then phi.
struct PowerGrid {
  GridSpec spec;
  std::int64_t epoch = 0;
  std::size_t nx = 0, ny = 0, nz = 0;
  std::vector<double> values;

  static PowerGrid zeros(const GridSpec& spec, std::int64_t epoch = 0);

  std::size_t linear(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * ny + j) * nz + k;
  }
  double& at(std::size_t i, std::size_t j, std::size_t k) { return values[linear(i, j, k)]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const { return values[linear(i, j, k)]; }
  std::size_t size() const { return nx * ny * nz; }
};

/// FMCW range from a transmit/receive frequency shift: c*|df| / (2*slope).
double range_from_freq_shift(double delta_f_hz, double slope_hz_per_s);

/// Power of one steering direction phi for a row of antenna signals:
/// |sum_n s[n] * exp(-j*2*pi*n*d*sin(phi)/lambda)|.
double direction_power(std::span<const std::complex<double>> row_signals,
                       double d_m, double lambda_m, double phi_rad);

/// Power of one candidate range r over an [n][t] signal block, correlating
/// with the conjugate of the emission beat phase.
double distance_power(const std::vector<std::vector<std::complex<double>>>& signals,
                      double slope_hz_per_s, double r_m, const ChirpConfig& chirp);

/// Steered coherent sum of a full frame at one voxel (direct evaluation).
double voxel_power(const RawFrame& frame, const ArrayGeometry& geom,
                   const ChirpConfig& chirp, const SphericalPos& voxel);

inline constexpr std::size_t kDefaultMemoryBudget = std::size_t{1} << 30;  // 1 GiB

/// Precomputed phasor tables for one (geometry, chirp, grid) combination:
/// range phasors per (range bin, sample) and steering phasors per
/// (angle pair, element). Reusable across frames.
class ReconstructionPlan {
 public:
  ReconstructionPlan(const ArrayGeometry& geom, const ChirpConfig& chirp,
                     const GridSpec& spec,
                     std::size_t memory_budget_bytes = kDefaultMemoryBudget);

  /// Evaluates every voxel of the grid. Voxels may be computed in parallel
  /// (jobs > 1); each voxel's sum runs in a fixed order, so the result is
  /// bit-identical regardless of the job count.
  PowerGrid reconstruct(const RawFrame& frame, int jobs = 1) const;

  const GridSpec& spec() const { return spec_; }
  const Dims3& dims() const { return dims_; }

 private:
  ArrayGeometry geom_;
  ChirpConfig chirp_;
  GridSpec spec_;
  Dims3 dims_;
  std::vector<std::complex<double>> range_phasors_;     // [i][t]
  std::vector<std::complex<double>> steering_phasors_;  // [j][k][m][n]
};

/// One-shot reconstruction through a freshly built plan.
PowerGrid reconstruct_grid(const RawFrame& frame, const ArrayGeometry& geom,
                           const ChirpConfig& chirp, const GridSpec& spec,
                           int jobs = 1);

/// Reference path: voxel_power evaluated voxel by voxel with no tables.
/// Optimized reconstruction must agree with this within 1e-9 relative.
PowerGrid reconstruct_grid_naive(const RawFrame& frame, const ArrayGeometry& geom,
                                 const ChirpConfig& chirp, const GridSpec& spec);

}  // namespace rvox::recon
