#pragma once

#include <array>
#include <cstdint>

namespace rvox::imaging::detail {

// Classic marching cubes lookup tables. kEdgeTable maps an 8-bit corner
// configuration to the set of cut cell edges; kTriTable lists, per
// configuration, up to five triangles as edge-index triples terminated
// by -1 (16 slots per configuration).
extern const std::array<std::uint16_t, 256> kEdgeTable;
extern const std::array<std::int8_t, 4096> kTriTable;

}  // namespace rvox::imaging::detail
