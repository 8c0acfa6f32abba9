#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "rvox/common.hpp"

namespace rvox {

enum class ReflectorTag : std::uint8_t { Target = 0, Background = 1, Ghost = 2 };

struct SphericalPos {
  double r_m = 0.0;        // range
  double theta_rad = 0.0;  // elevation
  double phi_rad = 0.0;    // azimuth
  bool operator==(const SphericalPos&) const = default;
};

struct Reflector {
  SphericalPos pos;
  double amplitude = 1.0;
  ReflectorTag tag = ReflectorTag::Target;
  bool operator==(const Reflector&) const = default;
};

struct Scene {
  std::vector<Reflector> reflectors;
  std::int64_t epoch = 0;
};

struct Waypoint {
  std::int64_t epoch = 0;
  SphericalPos pos;
};

/// Piecewise-linear path of one reflector across epochs.
struct Trajectory {
  std::vector<Waypoint> waypoints;  // epochs strictly increasing
  double amplitude = 1.0;
  ReflectorTag tag = ReflectorTag::Target;
};

/// FMCW sweep parameters. Slope and carrier wavelength are derived so they
/// cannot drift out of sync with the band edges.
struct ChirpConfig {
  double f_start_hz = 3.3e9;
  double f_stop_hz = 10.0e9;
  double duration_s = 1e-3;
  std::size_t samples_per_chirp = 128;

  double slope_hz_per_s() const { return (f_stop_hz - f_start_hz) / duration_s; }
  double center_freq_hz() const { return 0.5 * (f_start_hz + f_stop_hz); }
  /// Wavelength at band center; the steering phases use this single lambda.
  double carrier_lambda_m() const { return kSpeedOfLight / center_freq_hz(); }
  /// Time into the sweep of sample t, t in [0, samples_per_chirp).
  double sample_time_s(std::size_t t) const {
    return static_cast<double>(t) * duration_s / static_cast<double>(samples_per_chirp);
  }

  void validate() const;  // throws std::invalid_argument
};

/// 2D antenna panel: tx elements step along x with spacing dx, rx elements
/// along y with spacing dy.
struct ArrayGeometry {
  std::size_t tx_count = 4;  // M
  std::size_t rx_count = 4;  // N
  double dx_m = 0.0225;
  double dy_m = 0.0225;

  void validate() const;  // throws std::invalid_argument
};

/// Complex baseband samples of one chirp epoch, indexed [m][n][t] m-major.
struct RawFrame {
  std::size_t tx_count = 0;
  std::size_t rx_count = 0;
  std::size_t samples_per_chirp = 0;
  std::int64_t epoch = 0;
  std::vector<std::complex<double>> samples;

  std::size_t linear(std::size_t m, std::size_t n, std::size_t t) const {
    return (m * rx_count + n) * samples_per_chirp + t;
  }
  std::complex<double>& at(std::size_t m, std::size_t n, std::size_t t) {
    return samples[linear(m, n, t)];
  }
  const std::complex<double>& at(std::size_t m, std::size_t n, std::size_t t) const {
    return samples[linear(m, n, t)];
  }

  static RawFrame zeros(const ArrayGeometry& geom, const ChirpConfig& chirp,
                        std::int64_t epoch = 0);
};

}  // namespace rvox
