#include "rvox/calibrate.hpp"

#include <stdexcept>

namespace rvox::calib {

BackgroundModel accumulate_background(const std::vector<recon::PowerGrid>& frames) {
  if (frames.empty()) {
    throw std::invalid_argument("background needs at least one frame");
  }
  const recon::PowerGrid& first = frames.front();
  BackgroundModel model;
  model.mean_grid = recon::PowerGrid::zeros(first.spec, first.epoch);
  model.frame_count = frames.size();

  // Incremental mean, m += (x - m)/k. Unlike a sum-then-divide mean this is
  // exactly idempotent: identical frames keep the update term at zero.
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const recon::PowerGrid& g = frames[f];
    if (g.spec != first.spec || g.size() != first.size()) {
      throw std::invalid_argument("background frames must share one grid spec");
    }
    double k = static_cast<double>(f + 1);
    for (std::size_t v = 0; v < g.values.size(); ++v) {
      double& m = model.mean_grid.values[v];
      m += (g.values[v] - m) / k;
    }
  }
  return model;
}

recon::PowerGrid subtract_background(const recon::PowerGrid& live,
                                     const BackgroundModel& bg) {
  if (live.spec != bg.mean_grid.spec || live.size() != bg.mean_grid.size()) {
    throw std::invalid_argument("live grid does not match the background spec");
  }
  recon::PowerGrid out = live;
  for (std::size_t v = 0; v < out.values.size(); ++v) {
    double d = live.values[v] - bg.mean_grid.values[v];
    out.values[v] = d > 0.0 ? d : 0.0;
  }
  return out;
}

}  // namespace rvox::calib
