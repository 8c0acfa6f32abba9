#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rvox/reconstruct.hpp"

namespace rvox::imaging {

struct VoxelIndex {
  std::size_t i = 0;  // R
  std::size_t j = 0;  // theta
  std::size_t k = 0;  // phi
  bool operator==(const VoxelIndex&) const = default;
};

/// Fixed-theta slab of a power grid: values[i][k] over (R, phi).
struct HeatMap2D {
  std::size_t n_r = 0;
  std::size_t n_phi = 0;
  std::size_t theta_index = 0;
  recon::GridSpec spec;
  std::vector<double> values;  // R-major

  double& at(std::size_t i, std::size_t k) { return values[i * n_phi + k]; }
  double at(std::size_t i, std::size_t k) const { return values[i * n_phi + k]; }
};

struct Mesh {
  std::vector<std::array<double, 3>> vertices;          // Cartesian (x, y, z)
  std::vector<std::array<std::uint32_t, 3>> faces;      // vertex index triples
};

/// x = r cos(theta) sin(phi), y = r sin(theta), z = r cos(theta) cos(phi).
std::array<double, 3> spherical_to_cartesian(const SphericalPos& p);

/// Index of the maximum voxel; ties break to the smallest linear index in
/// R-major order.
VoxelIndex peak_voxel(const recon::PowerGrid& grid);

HeatMap2D heatmap_slice(const recon::PowerGrid& grid, std::size_t theta_index);

/// Zeroes every voxel below keep_fraction * global max; the rest pass
/// through unchanged. keep_fraction must be in (0, 1].
recon::PowerGrid threshold_normalize(const recon::PowerGrid& grid,
                                     double keep_fraction);

/// Classic 256-entry-table marching cubes over the voxel-center lattice with
/// linear edge interpolation. The grid is embedded in a zero-valued boundary
/// shell so every surface closes; interpolated vertices are shared between
/// neighboring cells, which makes each mesh edge belong to exactly two faces.
/// iso_level must be > 0 and every grid axis must have size >= 2.
Mesh marching_cubes(const recon::PowerGrid& grid, double iso_level);

}  // namespace rvox::imaging
