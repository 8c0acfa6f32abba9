#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <array>

#include "rvox/calibrate.hpp"
#include "rvox/pipeline.hpp"
#include "rvox/scenesim.hpp"

using namespace rvox;

namespace {

recon::GridSpec test_spec() {
  recon::GridSpec spec;
  spec.r_min_m = 0.5;
  spec.r_max_m = 3.7;
  spec.r_res_m = 0.1;
  spec.theta_min_rad = 0.0;
  spec.theta_max_rad = deg_to_rad(40.0);
  spec.theta_res_rad = deg_to_rad(2.5);
  spec.phi_min_rad = deg_to_rad(-40.0);
  spec.phi_max_rad = deg_to_rad(40.0);
  spec.phi_res_rad = deg_to_rad(2.5);
  return spec;
}

recon::PowerGrid filled(double value) {
  recon::PowerGrid g = recon::PowerGrid::zeros(test_spec());
  for (double& v : g.values) v = value;
  return g;
}

}  // namespace

TEST_CASE("mean of one frame is that frame") {
  recon::PowerGrid g = filled(0.0);
  Rng rng(5);
  for (double& v : g.values) v = rng.uniform(0.0, 10.0);
  calib::BackgroundModel bg = calib::accumulate_background({g});
  CHECK(bg.mean_grid.values == g.values);
  CHECK(bg.frame_count == 1);
}

TEST_CASE("mean of zero and two is one") {
  calib::BackgroundModel bg =
      calib::accumulate_background({filled(0.0), filled(2.0)});
  for (double v : bg.mean_grid.values) CHECK(v == 1.0);
  CHECK(bg.frame_count == 2);
}

TEST_CASE("mean of N identical frames is exactly that frame") {
  recon::PowerGrid g = filled(0.0);
  Rng rng(17);
  for (double& v : g.values) v = rng.uniform(0.0, 3.0);
  for (std::size_t n : {2u, 3u, 5u, 7u}) {
    std::vector<recon::PowerGrid> frames(n, g);
    calib::BackgroundModel bg = calib::accumulate_background(frames);
    CHECK(bg.mean_grid.values == g.values);
  }
}

TEST_CASE("accumulation rejects empty and mismatched inputs") {
  CHECK_THROWS_AS(calib::accumulate_background({}), std::invalid_argument);
  recon::PowerGrid a = filled(1.0);
  recon::PowerGrid b = recon::PowerGrid::zeros(recon::GridSpec{});
  CHECK_THROWS_AS(calib::accumulate_background({a, b}), std::invalid_argument);
}

TEST_CASE("subtraction self-cancels, passes through, and clamps") {
  recon::PowerGrid live = filled(0.0);
  Rng rng(31);
  for (double& v : live.values) v = rng.uniform(0.0, 5.0);

  calib::BackgroundModel self = calib::accumulate_background({live});
  recon::PowerGrid zeroed = calib::subtract_background(live, self);
  for (double v : zeroed.values) CHECK(v == 0.0);

  calib::BackgroundModel none;
  none.mean_grid = filled(0.0);
  none.frame_count = 1;
  recon::PowerGrid same = calib::subtract_background(live, none);
  CHECK(same.values == live.values);

  calib::BackgroundModel heavy;
  heavy.mean_grid = filled(3.0);
  heavy.frame_count = 1;
  recon::PowerGrid one = filled(1.0);
  recon::PowerGrid clamped = calib::subtract_background(one, heavy);
  for (double v : clamped.values) CHECK(v == 0.0);

  live.epoch = 17;
  recon::PowerGrid keeps_epoch = calib::subtract_background(live, none);
  CHECK(keeps_epoch.epoch == 17);

  recon::PowerGrid other = recon::PowerGrid::zeros(recon::GridSpec{});
  CHECK_THROWS_AS(calib::subtract_background(other, none), std::invalid_argument);
}

TEST_CASE("output is non-negative for arbitrary inputs") {
  Rng rng(47);
  recon::PowerGrid live = filled(0.0);
  calib::BackgroundModel bg;
  bg.mean_grid = filled(0.0);
  bg.frame_count = 1;
  for (double& v : live.values) v = rng.uniform(0.0, 2.0);
  for (double& v : bg.mean_grid.values) v = rng.uniform(0.0, 2.0);
  recon::PowerGrid out = calib::subtract_background(live, bg);
  for (double v : out.values) CHECK(v >= 0.0);
}

TEST_CASE("end-to-end background suppression and target preservation") {
  ArrayGeometry geom;
  geom.tx_count = 3;
  geom.rx_count = 3;
  ChirpConfig chirp;
  chirp.samples_per_chirp = 64;
  recon::GridSpec spec = test_spec();

  Scene background;
  for (auto [i, j, k] : {std::array<std::size_t, 3>{21, 2, 5},
                         std::array<std::size_t, 3>{10, 6, 27},
                         std::array<std::size_t, 3>{28, 12, 14}}) {
    Reflector r;
    r.pos = {spec.r_center(i), spec.theta_center(j), spec.phi_center(k)};
    r.amplitude = 1.2;
    r.tag = ReflectorTag::Background;
    background.reflectors.push_back(r);
  }

  recon::ReconstructionPlan plan(geom, chirp, spec);
  RawFrame bg_frame = sim::synthesize_frame(background, geom, chirp);
  recon::PowerGrid bg_grid = plan.reconstruct(bg_frame);
  double uncal_peak = 0.0;
  for (double v : bg_grid.values) uncal_peak = std::max(uncal_peak, v);

  std::vector<recon::PowerGrid> cal_frames(4, bg_grid);
  calib::BackgroundModel model = calib::accumulate_background(cal_frames);

  recon::PowerGrid residual = calib::subtract_background(bg_grid, model);
  double residual_peak = 0.0;
  for (double v : residual.values) residual_peak = std::max(residual_peak, v);
  CHECK(residual_peak <= 1e-6 * uncal_peak);

  Scene with_target = background;
  Reflector target;
  target.pos = {spec.r_center(7), spec.theta_center(10), spec.phi_center(22)};
  target.amplitude = 1.0;
  with_target.reflectors.push_back(target);
  RawFrame live = sim::synthesize_frame(with_target, geom, chirp);
  recon::PowerGrid cleaned =
      calib::subtract_background(plan.reconstruct(live), model);
  std::size_t best = 0;
  for (std::size_t v = 1; v < cleaned.values.size(); ++v) {
    if (cleaned.values[v] > cleaned.values[best]) best = v;
  }
  CHECK(best == cleaned.linear(7, 10, 22));
}
