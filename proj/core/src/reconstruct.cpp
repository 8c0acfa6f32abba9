#include "rvox/reconstruct.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "rvox/phase.hpp"

namespace rvox::recon {

void GridSpec::validate() const {
  if (!(r_max_m > r_min_m) || !(theta_max_rad > theta_min_rad) ||
      !(phi_max_rad > phi_min_rad)) {
    throw std::invalid_argument("grid: each axis max must exceed its min");
  }
  if (!(r_res_m > 0.0) || !(theta_res_rad > 0.0) || !(phi_res_rad > 0.0)) {
    throw std::invalid_argument("grid: resolutions must be positive");
  }
  if (r_min_m < 0.0) {
    throw std::invalid_argument("grid: ranges must be non-negative");
  }
}

bool GridSpec::contains(const SphericalPos& p) const {
  return p.r_m >= r_min_m && p.r_m <= r_max_m && p.theta_rad >= theta_min_rad &&
         p.theta_rad <= theta_max_rad && p.phi_rad >= phi_min_rad &&
         p.phi_rad <= phi_max_rad;
}

namespace {

std::size_t axis_bins(double min, double max, double res) {
  return static_cast<std::size_t>(std::ceil((max - min) / res - 1e-9));
}

}  // namespace

Dims3 grid_dims(const GridSpec& spec) {
  spec.validate();
  Dims3 d;
  d.x = axis_bins(spec.r_min_m, spec.r_max_m, spec.r_res_m);
  d.y = axis_bins(spec.theta_min_rad, spec.theta_max_rad, spec.theta_res_rad);
  d.z = axis_bins(spec.phi_min_rad, spec.phi_max_rad, spec.phi_res_rad);
  return d;
}

PowerGrid PowerGrid::zeros(const GridSpec& spec, std::int64_t epoch) {
  Dims3 d = grid_dims(spec);
  PowerGrid g;
  g.spec = spec;
  g.epoch = epoch;
  g.nx = d.x;
  g.ny = d.y;
  g.nz = d.z;
  g.values.assign(g.size(), 0.0);
  return g;
}

double range_from_freq_shift(double delta_f_hz, double slope_hz_per_s) {
  if (!(slope_hz_per_s != 0.0)) {
    throw std::invalid_argument("range_from_freq_shift: slope must be non-zero");
  }
  return kSpeedOfLight * std::abs(delta_f_hz) / (2.0 * std::abs(slope_hz_per_s));
}

double direction_power(std::span<const std::complex<double>> row_signals,
                       double d_m, double lambda_m, double phi_rad) {
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t n = 0; n < row_signals.size(); ++n) {
    double phase = 2.0 * kPi * static_cast<double>(n) * d_m *
                   std::sin(phi_rad) / lambda_m;
    acc += row_signals[n] * std::complex<double>{std::cos(phase), -std::sin(phase)};
  }
  return complex_mag(acc);
}

double distance_power(const std::vector<std::vector<std::complex<double>>>& signals,
                      double slope_hz_per_s, double r_m, const ChirpConfig& chirp) {
  double beat_hz = slope_hz_per_s * r_m / kSpeedOfLight;
  std::complex<double> acc{0.0, 0.0};
  for (const auto& row : signals) {
    for (std::size_t t = 0; t < row.size(); ++t) {
      double phase = 2.0 * kPi * beat_hz * chirp.sample_time_s(t);
      acc += row[t] * std::complex<double>{std::cos(phase), std::sin(phase)};
    }
  }
  return complex_mag(acc);
}

double voxel_power(const RawFrame& frame, const ArrayGeometry& geom,
                   const ChirpConfig& chirp, const SphericalPos& voxel) {
  double lambda = chirp.carrier_lambda_m();
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t m = 0; m < frame.tx_count; ++m) {
    for (std::size_t n = 0; n < frame.rx_count; ++n) {
      double steer =
          steering_phase(geom, lambda, voxel.theta_rad, voxel.phi_rad, m, n);
      for (std::size_t t = 0; t < frame.samples_per_chirp; ++t) {
        double phase = range_phase(chirp, voxel.r_m, t) + steer;
        acc += frame.at(m, n, t) *
               std::complex<double>{std::cos(phase), std::sin(phase)};
      }
    }
  }
  return complex_mag(acc);
}

ReconstructionPlan::ReconstructionPlan(const ArrayGeometry& geom,
                                       const ChirpConfig& chirp,
                                       const GridSpec& spec,
                                       std::size_t memory_budget_bytes)
    : geom_(geom), chirp_(chirp), spec_(spec) {
  geom_.validate();
  chirp_.validate();
  spec_.validate();
  dims_ = grid_dims(spec_);

  std::size_t elems = geom_.tx_count * geom_.rx_count;
  std::size_t range_count = dims_.x * chirp_.samples_per_chirp;
  std::size_t steer_count = dims_.y * dims_.z * elems;
  std::size_t bytes =
      (range_count + steer_count) * sizeof(std::complex<double>);
  if (bytes > memory_budget_bytes) {
    throw std::length_error("phasor tables exceed the memory budget");
  }

  range_phasors_.resize(range_count);
  for (std::size_t i = 0; i < dims_.x; ++i) {
    double r = spec_.r_center(i);
    for (std::size_t t = 0; t < chirp_.samples_per_chirp; ++t) {
      double phase = range_phase(chirp_, r, t);
      range_phasors_[i * chirp_.samples_per_chirp + t] = {std::cos(phase),
                                                          std::sin(phase)};
    }
  }

  double lambda = chirp_.carrier_lambda_m();
  steering_phasors_.resize(steer_count);
  for (std::size_t j = 0; j < dims_.y; ++j) {
    double theta = spec_.theta_center(j);
    for (std::size_t k = 0; k < dims_.z; ++k) {
      double phi = spec_.phi_center(k);
      std::size_t base = (j * dims_.z + k) * elems;
      for (std::size_t m = 0; m < geom_.tx_count; ++m) {
        for (std::size_t n = 0; n < geom_.rx_count; ++n) {
          double phase = steering_phase(geom_, lambda, theta, phi, m, n);
          steering_phasors_[base + m * geom_.rx_count + n] = {std::cos(phase),
                                                              std::sin(phase)};
        }
      }
    }
  }
}

PowerGrid ReconstructionPlan::reconstruct(const RawFrame& frame, int jobs) const {
  if (frame.tx_count != geom_.tx_count || frame.rx_count != geom_.rx_count ||
      frame.samples_per_chirp != chirp_.samples_per_chirp) {
    throw std::invalid_argument("frame shape does not match the plan");
  }
  PowerGrid grid = PowerGrid::zeros(spec_, frame.epoch);

  std::size_t elems = geom_.tx_count * geom_.rx_count;
  std::size_t samples = chirp_.samples_per_chirp;

  // Range compression first: per range bin, collapse the time axis once and
  // reuse the compressed block for every angle pair. Each voxel value is a
  // pure function of its own (i, j, k), so splitting range bins across
  // threads cannot change any result bit.
  auto run_bins = [&](std::size_t i_begin, std::size_t i_end) {
    std::vector<std::complex<double>> compressed(elems);
    for (std::size_t i = i_begin; i < i_end; ++i) {
      const std::complex<double>* rp = &range_phasors_[i * samples];
      for (std::size_t e = 0; e < elems; ++e) {
        const std::complex<double>* s = &frame.samples[e * samples];
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t t = 0; t < samples; ++t) acc += s[t] * rp[t];
        compressed[e] = acc;
      }
      for (std::size_t j = 0; j < dims_.y; ++j) {
        for (std::size_t k = 0; k < dims_.z; ++k) {
          const std::complex<double>* sp =
              &steering_phasors_[(j * dims_.z + k) * elems];
          std::complex<double> acc{0.0, 0.0};
          for (std::size_t e = 0; e < elems; ++e) acc += compressed[e] * sp[e];
          grid.at(i, j, k) = complex_mag(acc);
        }
      }
    }
  };

  std::size_t workers = jobs < 1 ? 1 : static_cast<std::size_t>(jobs);
  if (workers > dims_.x) workers = dims_.x;
  if (workers <= 1) {
    run_bins(0, dims_.x);
    return grid;
  }

  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::size_t chunk = (dims_.x + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = begin + chunk < dims_.x ? begin + chunk : dims_.x;
    if (begin >= end) break;
    pool.emplace_back(run_bins, begin, end);
  }
  for (auto& th : pool) th.join();
  return grid;
}

PowerGrid reconstruct_grid(const RawFrame& frame, const ArrayGeometry& geom,
                           const ChirpConfig& chirp, const GridSpec& spec,
                           int jobs) {
  ReconstructionPlan plan(geom, chirp, spec);
  return plan.reconstruct(frame, jobs);
}

PowerGrid reconstruct_grid_naive(const RawFrame& frame, const ArrayGeometry& geom,
                                 const ChirpConfig& chirp, const GridSpec& spec) {
  PowerGrid grid = PowerGrid::zeros(spec, frame.epoch);
  for (std::size_t i = 0; i < grid.nx; ++i) {
    for (std::size_t j = 0; j < grid.ny; ++j) {
      for (std::size_t k = 0; k < grid.nz; ++k) {
        SphericalPos voxel{spec.r_center(i), spec.theta_center(j),
                           spec.phi_center(k)};
        grid.at(i, j, k) = voxel_power(frame, geom, chirp, voxel);
      }
    }
  }
  return grid;
}

}  // namespace rvox::recon
