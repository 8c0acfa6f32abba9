#include <benchmark/benchmark.h>

#include "rvox/reconstruct.hpp"
#include "rvox/scenesim.hpp"

using namespace rvox;

namespace {

recon::GridSpec bench_spec() {
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

Scene bench_scene() {
  Scene scene;
  scene.reflectors.push_back({{2.0, deg_to_rad(10.0), deg_to_rad(5.0)}, 1.0,
                              ReflectorTag::Target});
  scene.reflectors.push_back({{1.2, deg_to_rad(30.0), deg_to_rad(-15.0)}, 0.7,
                              ReflectorTag::Background});
  return scene;
}

void reconstruct_jobs(benchmark::State& state) {
  ChirpConfig chirp;
  ArrayGeometry geom;
  geom.tx_count = 3;
  geom.rx_count = 3;
  sim::SimOptions opts;
  RawFrame frame = sim::synthesize_frame(bench_scene(), geom, chirp, opts);
  recon::ReconstructionPlan plan(geom, chirp, bench_spec());
  int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    recon::PowerGrid grid = plan.reconstruct(frame, jobs);
    benchmark::DoNotOptimize(grid.values.data());
  }
}
BENCHMARK(reconstruct_jobs)->Arg(1)->Arg(2)->Arg(4)->Arg(8);

void reconstruct_naive(benchmark::State& state) {
  ChirpConfig chirp;
  ArrayGeometry geom;
  geom.tx_count = 3;
  geom.rx_count = 3;
  sim::SimOptions opts;
  RawFrame frame = sim::synthesize_frame(bench_scene(), geom, chirp, opts);
  recon::GridSpec spec = bench_spec();
  // A quarter of the grid span keeps the triple loop in the seconds range.
  spec.r_max_m = 1.3;
  spec.phi_max_rad = deg_to_rad(-20.0);
  for (auto _ : state) {
    recon::PowerGrid grid = recon::reconstruct_grid_naive(frame, geom, chirp, spec);
    benchmark::DoNotOptimize(grid.values.data());
  }
}
BENCHMARK(reconstruct_naive);

void synthesize(benchmark::State& state) {
  ChirpConfig chirp;
  ArrayGeometry geom;
  geom.tx_count = 3;
  geom.rx_count = 3;
  sim::SimOptions opts;
  opts.noise_amplitude = 0.05;
  Scene scene = bench_scene();
  for (auto _ : state) {
    RawFrame frame = sim::synthesize_frame(scene, geom, chirp, opts);
    benchmark::DoNotOptimize(frame.samples.data());
  }
}
BENCHMARK(synthesize);

}  // namespace

BENCHMARK_MAIN();
