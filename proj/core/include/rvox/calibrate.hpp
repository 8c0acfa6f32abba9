#pragma once

#include <cstddef>
#include <vector>

#include "rvox/reconstruct.hpp"

namespace rvox::calib {

/// Static-environment power recorded during a human-free sensing pass.
struct BackgroundModel {
  recon::PowerGrid mean_grid;
  std::size_t frame_count = 0;
};

/// Elementwise arithmetic mean of the given grids. All grids must share one
/// GridSpec; the list must not be empty.
BackgroundModel accumulate_background(const std::vector<recon::PowerGrid>& frames);

/// out[v] = max(0, live[v] - background[v]); the live epoch is preserved.
recon::PowerGrid subtract_background(const recon::PowerGrid& live,
                                     const BackgroundModel& bg);

}  // namespace rvox::calib
