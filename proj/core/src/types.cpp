#include "rvox/types.hpp"

#include <stdexcept>

namespace rvox {

void ChirpConfig::validate() const {
  if (!(f_stop_hz > f_start_hz)) {
    throw std::invalid_argument("chirp: f_stop must exceed f_start");
  }
  if (!(f_start_hz > 0.0)) {
    throw std::invalid_argument("chirp: f_start must be positive");
  }
  if (!(duration_s > 0.0)) {
    throw std::invalid_argument("chirp: duration must be positive");
  }
  if (samples_per_chirp < 2) {
    throw std::invalid_argument("chirp: need at least 2 samples per chirp");
  }
}

void ArrayGeometry::validate() const {
  if (tx_count < 1 || rx_count < 1) {
    throw std::invalid_argument("geometry: need at least one tx and one rx element");
  }
  if (!(dx_m > 0.0) || !(dy_m > 0.0)) {
    throw std::invalid_argument("geometry: element spacings must be positive");
  }
}

RawFrame RawFrame::zeros(const ArrayGeometry& geom, const ChirpConfig& chirp,
                         std::int64_t epoch) {
  RawFrame f;
  f.tx_count = geom.tx_count;
  f.rx_count = geom.rx_count;
  f.samples_per_chirp = chirp.samples_per_chirp;
  f.epoch = epoch;
  f.samples.assign(f.tx_count * f.rx_count * f.samples_per_chirp, {0.0, 0.0});
  return f;
}

}  // namespace rvox
