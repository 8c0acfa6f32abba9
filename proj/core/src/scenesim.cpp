#include "rvox/scenesim.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "rvox/phase.hpp"

namespace rvox::sim {

bool within_limits(const SphericalPos& pos) {
  return pos.r_m > 0.0 && std::abs(pos.theta_rad) <= kPi / 2.0 &&
         std::abs(pos.phi_rad) <= kPi / 2.0;
}

void validate_reflector(const Reflector& r) {
  if (!within_limits(r.pos)) {
    throw std::domain_error("reflector outside the simulated half space");
  }
  if (r.amplitude < 0.0) {
    throw std::domain_error("reflector amplitude must be non-negative");
  }
}

RawFrame synthesize_frame(const Scene& scene, const ArrayGeometry& geom,
                          const ChirpConfig& chirp, const SimOptions& opts) {
  geom.validate();
  chirp.validate();
  for (const Reflector& r : scene.reflectors) validate_reflector(r);

  std::size_t count = geom.tx_count * geom.rx_count * chirp.samples_per_chirp;
  if (count * sizeof(std::complex<double>) > opts.memory_budget_bytes) {
    throw std::length_error("frame exceeds the simulation memory budget");
  }

  RawFrame frame = RawFrame::zeros(geom, chirp, scene.epoch);
  double lambda = chirp.carrier_lambda_m();

  // One reflector at a time, in list order, so superposition is bitwise
  // identical to summing per-reflector frames.
  for (const Reflector& refl : scene.reflectors) {
    double amp = refl.amplitude;
    if (opts.path_loss) amp /= refl.pos.r_m * refl.pos.r_m;
    for (std::size_t m = 0; m < geom.tx_count; ++m) {
      for (std::size_t n = 0; n < geom.rx_count; ++n) {
        double steer = steering_phase(geom, lambda, refl.pos.theta_rad,
                                      refl.pos.phi_rad, m, n);
        for (std::size_t t = 0; t < chirp.samples_per_chirp; ++t) {
          double phase = range_phase(chirp, refl.pos.r_m, t) + steer;
          frame.at(m, n, t) +=
              std::complex<double>{amp * std::cos(phase), -amp * std::sin(phase)};
        }
      }
    }
  }

  if (opts.noise_amplitude > 0.0) {
    Rng rng(mix_seed(opts.seed, static_cast<std::uint64_t>(scene.epoch)));
    for (auto& s : frame.samples) {
      s += std::complex<double>{opts.noise_amplitude * rng.gaussian(),
                                opts.noise_amplitude * rng.gaussian()};
    }
  }
  return frame;
}

Scene inject_ghost(const Scene& scene, const Reflector& source,
                   double detour_extra_m, double d_theta_rad, double d_phi_rad,
                   double amplitude_fraction) {
  if (!(detour_extra_m > 0.0)) {
    throw std::domain_error("ghost detour must add path length");
  }
  if (!(amplitude_fraction > 0.0)) {
    throw std::domain_error("ghost amplitude fraction must be positive");
  }
  bool found = false;
  for (const Reflector& r : scene.reflectors) {
    if (r == source) {
      found = true;
      break;
    }
  }
  if (!found) {
    throw std::domain_error("ghost source reflector is not in the scene");
  }

  Reflector ghost;
  ghost.pos.r_m = source.pos.r_m + detour_extra_m;
  ghost.pos.theta_rad = source.pos.theta_rad + d_theta_rad;
  ghost.pos.phi_rad = source.pos.phi_rad + d_phi_rad;
  ghost.amplitude = source.amplitude * amplitude_fraction;
  ghost.tag = ReflectorTag::Ghost;
  validate_reflector(ghost);

  Scene out = scene;
  out.reflectors.push_back(ghost);
  return out;
}

namespace {

SphericalPos interpolate(const Waypoint& a, const Waypoint& b,
                         std::int64_t epoch) {
  if (b.epoch == a.epoch) return a.pos;
  double u = static_cast<double>(epoch - a.epoch) /
             static_cast<double>(b.epoch - a.epoch);
  SphericalPos p;
  p.r_m = a.pos.r_m + u * (b.pos.r_m - a.pos.r_m);
  p.theta_rad = a.pos.theta_rad + u * (b.pos.theta_rad - a.pos.theta_rad);
  p.phi_rad = a.pos.phi_rad + u * (b.pos.phi_rad - a.pos.phi_rad);
  return p;
}

}  // namespace

Scene scene_at_epoch(const std::vector<Trajectory>& trajectories,
                     std::int64_t epoch) {
  Scene scene;
  scene.epoch = epoch;
  scene.reflectors.reserve(trajectories.size());
  for (const Trajectory& traj : trajectories) {
    if (traj.waypoints.empty()) {
      throw std::domain_error("trajectory has no waypoints");
    }
    if (epoch < traj.waypoints.front().epoch ||
        epoch > traj.waypoints.back().epoch) {
      throw std::domain_error("epoch outside trajectory span");
    }
    Reflector r;
    r.amplitude = traj.amplitude;
    r.tag = traj.tag;
    r.pos = traj.waypoints.back().pos;
    for (std::size_t i = 0; i + 1 < traj.waypoints.size(); ++i) {
      const Waypoint& a = traj.waypoints[i];
      const Waypoint& b = traj.waypoints[i + 1];
      if (b.epoch <= a.epoch) {
        throw std::domain_error("trajectory epochs must strictly increase");
      }
      if (epoch >= a.epoch && epoch <= b.epoch) {
        r.pos = interpolate(a, b, epoch);
        break;
      }
    }
    scene.reflectors.push_back(r);
  }
  return scene;
}

}  // namespace rvox::sim
