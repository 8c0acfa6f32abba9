#include "rvox/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>

#include "mc_tables.hpp"

namespace rvox::imaging {

std::array<double, 3> spherical_to_cartesian(const SphericalPos& p) {
  double ct = std::cos(p.theta_rad);
  return {p.r_m * ct * std::sin(p.phi_rad), p.r_m * std::sin(p.theta_rad),
          p.r_m * ct * std::cos(p.phi_rad)};
}

VoxelIndex peak_voxel(const recon::PowerGrid& grid) {
  if (grid.values.empty()) {
    throw std::invalid_argument("peak_voxel: empty grid");
  }
  std::size_t best = 0;
  for (std::size_t v = 1; v < grid.values.size(); ++v) {
    if (grid.values[v] > grid.values[best]) best = v;
  }
  VoxelIndex idx;
  idx.k = best % grid.nz;
  idx.j = (best / grid.nz) % grid.ny;
  idx.i = best / (grid.nz * grid.ny);
  return idx;
}

HeatMap2D heatmap_slice(const recon::PowerGrid& grid, std::size_t theta_index) {
  if (theta_index >= grid.ny) {
    throw std::out_of_range("heatmap_slice: theta index out of range");
  }
  HeatMap2D map;
  map.n_r = grid.nx;
  map.n_phi = grid.nz;
  map.theta_index = theta_index;
  map.spec = grid.spec;
  map.values.resize(map.n_r * map.n_phi);
  for (std::size_t i = 0; i < grid.nx; ++i) {
    for (std::size_t k = 0; k < grid.nz; ++k) {
      map.at(i, k) = grid.at(i, theta_index, k);
    }
  }
  return map;
}

recon::PowerGrid threshold_normalize(const recon::PowerGrid& grid,
                                     double keep_fraction) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
    throw std::invalid_argument("threshold_normalize: keep_fraction not in (0, 1]");
  }
  double peak = 0.0;
  for (double v : grid.values) {
    if (v > peak) peak = v;
  }
  double cutoff = keep_fraction * peak;
  recon::PowerGrid out = grid;
  for (double& v : out.values) {
    if (v < cutoff) v = 0.0;
  }
  return out;
}

namespace {

// Cube corners in (i, j, k) offsets; corners 0..3 wind around the k = 0
// face, corners 4..7 repeat them at k = 1.
constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};

// Cell edges as corner pairs, in the order the triangle table indexes them.
constexpr int kEdgeCorner[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0},
                                    {4, 5}, {5, 6}, {6, 7}, {7, 4},
                                    {0, 4}, {1, 5}, {2, 6}, {3, 7}};

struct Lattice {
  const recon::PowerGrid& grid;
  // Padded lattice point (a, b, c) maps to voxel index (a-1, b-1, c-1);
  // the outer shell rows read as zero power.
  double value(std::size_t a, std::size_t b, std::size_t c) const {
    if (a == 0 || b == 0 || c == 0 || a > grid.nx || b > grid.ny ||
        c > grid.nz) {
      return 0.0;
    }
    return grid.at(a - 1, b - 1, c - 1);
  }
  // Spherical position of a (possibly fractional) padded lattice index.
  SphericalPos position(double a, double b, double c) const {
    SphericalPos p;
    p.r_m = grid.spec.r_min_m + (a - 0.5) * grid.spec.r_res_m;
    p.theta_rad = grid.spec.theta_min_rad + (b - 0.5) * grid.spec.theta_res_rad;
    p.phi_rad = grid.spec.phi_min_rad + (c - 0.5) * grid.spec.phi_res_rad;
    return p;
  }
};

}  // namespace

Mesh marching_cubes(const recon::PowerGrid& grid, double iso_level) {
  if (!(iso_level > 0.0)) {
    throw std::invalid_argument("marching_cubes: iso level must be positive");
  }
  if (grid.nx < 2 || grid.ny < 2 || grid.nz < 2) {
    throw std::invalid_argument("marching_cubes: every axis needs >= 2 voxels");
  }

  Lattice lat{grid};
  std::size_t pa = grid.nx + 2, pb = grid.ny + 2, pc = grid.nz + 2;

  Mesh mesh;
  // One shared vertex per cut lattice edge, keyed by the edge's lower
  // endpoint and axis. Sharing is what closes the mesh: both cells on a cut
  // edge resolve to the same vertex index.
  std::unordered_map<std::uint64_t, std::uint32_t> edge_vertex;

  auto vertex_on_edge = [&](std::size_t a0, std::size_t b0, std::size_t c0,
                            int axis) -> std::uint32_t {
    std::uint64_t key =
        ((static_cast<std::uint64_t>(a0) * pb + b0) * pc + c0) * 3 +
        static_cast<std::uint64_t>(axis);
    auto it = edge_vertex.find(key);
    if (it != edge_vertex.end()) return it->second;

    std::size_t a1 = a0 + (axis == 0), b1 = b0 + (axis == 1),
                c1 = c0 + (axis == 2);
    double v0 = lat.value(a0, b0, c0);
    double v1 = lat.value(a1, b1, c1);
    // Interpolating from the low endpoint regardless of which cell asked
    // first keeps the vertex bit-identical across the four sharing cells.
    double u = (iso_level - v0) / (v1 - v0);
    double fa = static_cast<double>(a0) + (axis == 0 ? u : 0.0);
    double fb = static_cast<double>(b0) + (axis == 1 ? u : 0.0);
    double fc = static_cast<double>(c0) + (axis == 2 ? u : 0.0);
    auto idx = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.push_back(spherical_to_cartesian(lat.position(fa, fb, fc)));
    edge_vertex.emplace(key, idx);
    return idx;
  };

  for (std::size_t a = 0; a + 1 < pa; ++a) {
    for (std::size_t b = 0; b + 1 < pb; ++b) {
      for (std::size_t c = 0; c + 1 < pc; ++c) {
        unsigned config = 0;
        for (int corner = 0; corner < 8; ++corner) {
          double v = lat.value(a + kCorner[corner][0], b + kCorner[corner][1],
                               c + kCorner[corner][2]);
          if (v < iso_level) config |= 1u << corner;
        }
        if (detail::kEdgeTable[config] == 0) continue;

        std::uint32_t cell_vertex[12];
        for (int e = 0; e < 12; ++e) {
          if (!(detail::kEdgeTable[config] & (1u << e))) continue;
          const int* ca = kCorner[kEdgeCorner[e][0]];
          const int* cb = kCorner[kEdgeCorner[e][1]];
          int axis = ca[0] != cb[0] ? 0 : (ca[1] != cb[1] ? 1 : 2);
          std::size_t a0 = a + static_cast<std::size_t>(std::min(ca[0], cb[0]));
          std::size_t b0 = b + static_cast<std::size_t>(std::min(ca[1], cb[1]));
          std::size_t c0 = c + static_cast<std::size_t>(std::min(ca[2], cb[2]));
          cell_vertex[e] = vertex_on_edge(a0, b0, c0, axis);
        }

        const std::int8_t* tri = &detail::kTriTable[config * 16];
        for (int s = 0; tri[s] != -1; s += 3) {
          mesh.faces.push_back({cell_vertex[tri[s]], cell_vertex[tri[s + 1]],
                                cell_vertex[tri[s + 2]]});
        }
      }
    }
  }
  return mesh;
}

}  // namespace rvox::imaging
