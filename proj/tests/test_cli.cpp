#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "rvox/io.hpp"
#include "rvox/pipeline.hpp"

using namespace rvox;
namespace fs = std::filesystem;

namespace {

constexpr const char* kCli = RVOX_CLI_PATH;

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("rvox_cli_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

int run(const std::string& args) {
  std::string cmd = std::string(kCli) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const fs::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << data;
}

// Tiny everything so each CLI invocation stays in the millisecond range:
// 2x2 array, 16 samples, 8x2x4 voxel grid.
void write_config(const fs::path& p, double noise = 0.0) {
  spit(p, R"({
  "chirp": {"samples_per_chirp": 16},
  "array": {"tx_count": 2, "rx_count": 2},
  "grid": {"r_min_m": 0.5, "r_max_m": 2.1, "r_res_m": 0.2,
           "theta_min_deg": 0.0, "theta_max_deg": 10.0, "theta_res_deg": 5.0,
           "phi_min_deg": -10.0, "phi_max_deg": 10.0, "phi_res_deg": 5.0},
  "noise_amplitude": )" +
              std::to_string(noise) + R"(,
  "iso_fraction": 0.5,
  "seed": 3
})");
}

// One reflector on the exact center of voxel (2, 0, 1).
constexpr const char* kStaticScene =
    R"({"reflectors": [{"r": 1.0, "theta_deg": 2.5, "phi_deg": -2.5}]})";

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST_CASE("an empty scene yields all-zero frames") {
  TempDir dir;
  write_config(dir / "cfg.json");
  spit(dir / "scene.json", "{}");
  fs::create_directories(dir / "sim");
  CHECK(run("--config " + q(dir / "cfg.json") + " simulate --scene " +
            q(dir / "scene.json") + " --epochs 3 --out " + q(dir / "sim")) == 0);

  for (int e = 0; e < 3; ++e) {
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%04d.hicf", e);
    RawFrame f = io::read_frame(dir / "sim" / name);
    for (const auto& s : f.samples) {
      CHECK(s.real() == 0.0);
      CHECK(s.imag() == 0.0);
    }
  }
  CHECK(!fs::exists(dir / "sim/epoch_0003.hicf"));
}

TEST_CASE("simulate is reproducible and seed-sensitive") {
  TempDir dir;
  write_config(dir / "cfg.json", 0.05);
  spit(dir / "scene.json", kStaticScene);
  for (const char* sub : {"a", "b", "c"}) fs::create_directories(dir / sub);

  std::string base = "--config " + q(dir / "cfg.json") + " --seed 7 simulate --scene " +
                     q(dir / "scene.json") + " --epochs 2 --out ";
  CHECK(run(base + q(dir / "a")) == 0);
  CHECK(run(base + q(dir / "b")) == 0);
  CHECK(slurp(dir / "a/epoch_0000.hicf") == slurp(dir / "b/epoch_0000.hicf"));
  CHECK(slurp(dir / "a/epoch_0001.hicf") == slurp(dir / "b/epoch_0001.hicf"));
  // Noise differs across epochs and across seeds.
  CHECK(slurp(dir / "a/epoch_0000.hicf") != slurp(dir / "a/epoch_0001.hicf"));
  CHECK(run("--config " + q(dir / "cfg.json") + " --seed 8 simulate --scene " +
            q(dir / "scene.json") + " --epochs 1 --out " + q(dir / "c")) == 0);
  CHECK(slurp(dir / "a/epoch_0000.hicf") != slurp(dir / "c/epoch_0000.hicf"));
}

TEST_CASE("trajectories move the synthesized target between epochs") {
  TempDir dir;
  write_config(dir / "cfg.json");
  spit(dir / "scene.json", R"({"trajectories": [{
    "waypoints": [{"epoch": 0, "r": 0.6, "theta_deg": 2.5, "phi_deg": 2.5},
                  {"epoch": 4, "r": 2.0, "theta_deg": 2.5, "phi_deg": 2.5}]}]})");
  fs::create_directories(dir / "sim");
  CHECK(run("--config " + q(dir / "cfg.json") + " simulate --scene " +
            q(dir / "scene.json") + " --epochs 5 --out " + q(dir / "sim")) == 0);

  std::vector<std::string> blobs;
  for (int e = 0; e < 5; ++e) {
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%04d.hicf", e);
    blobs.push_back(slurp(dir / "sim" / name));
  }
  for (std::size_t i = 0; i < blobs.size(); ++i)
    for (std::size_t j = i + 1; j < blobs.size(); ++j) CHECK(blobs[i] != blobs[j]);

  // Endpoint frames reconstruct with their peak at the scripted range bin.
  PipelineConfig cfg = load_config(dir / "cfg.json");
  recon::ReconstructionPlan plan(cfg.geometry, cfg.chirp, cfg.grid);
  auto peak_r = [&](const std::string& name) {
    recon::PowerGrid g = plan.reconstruct(io::read_frame(dir / "sim" / name));
    return imaging::peak_voxel(g).i;
  };
  CHECK(peak_r("epoch_0000.hicf") == 0);
  CHECK(peak_r("epoch_0004.hicf") == 7);
}

TEST_CASE("calibrate averages frame reconstructions") {
  TempDir dir;
  write_config(dir / "cfg.json");
  spit(dir / "scene.json", kStaticScene);
  fs::create_directories(dir / "sim");
  std::string cfg_arg = "--config " + q(dir / "cfg.json") + " ";
  CHECK(run(cfg_arg + "simulate --scene " + q(dir / "scene.json") +
            " --epochs 1 --out " + q(dir / "sim")) == 0);

  fs::path frame = dir / "sim/epoch_0000.hicf";
  CHECK(run(cfg_arg + "calibrate " + q(frame) + " --out " + q(dir / "bg1.hgrd")) == 0);
  CHECK(run(cfg_arg + "calibrate " + q(frame) + " " + q(frame) + " " + q(frame) +
            " --out " + q(dir / "bg3.hgrd")) == 0);

  // One frame: the background is that frame's reconstruction (after the
  // 32-bit file round trip). Three copies: identical mean, so an identical
  // grid file; only the sidecar frame count differs.
  PipelineConfig cfg = load_config(dir / "cfg.json");
  recon::ReconstructionPlan plan(cfg.geometry, cfg.chirp, cfg.grid);
  recon::PowerGrid direct = plan.reconstruct(io::read_frame(frame));
  calib::BackgroundModel bg = io::read_background(dir / "bg1.hgrd");
  REQUIRE(bg.mean_grid.values.size() == direct.values.size());
  for (std::size_t i = 0; i < direct.values.size(); ++i) {
    CHECK(bg.mean_grid.values[i] ==
          static_cast<double>(static_cast<float>(direct.values[i])));
  }
  CHECK(bg.frame_count == 1);
  CHECK(slurp(dir / "bg1.hgrd") == slurp(dir / "bg3.hgrd"));
  CHECK(slurp(dir / "bg1.hgrd.meta") == "frame_count 1\ncreated_epoch 0\n");
  CHECK(slurp(dir / "bg3.hgrd.meta") == "frame_count 3\ncreated_epoch 2\n");
}

TEST_CASE("pipeline emits grids, images, meshes, and the flag log") {
  TempDir dir;
  write_config(dir / "cfg.json");
  spit(dir / "bg_scene.json", "{}");
  spit(dir / "scene.json", kStaticScene);
  for (const char* sub : {"bg", "sim", "p1", "p2", "p3"})
    fs::create_directories(dir / sub);
  std::string cfg_arg = "--config " + q(dir / "cfg.json") + " ";

  CHECK(run(cfg_arg + "simulate --scene " + q(dir / "bg_scene.json") +
            " --epochs 1 --out " + q(dir / "bg")) == 0);
  CHECK(run(cfg_arg + "calibrate " + q(dir / "bg/epoch_0000.hicf") + " --out " +
            q(dir / "background.hgrd")) == 0);
  CHECK(run(cfg_arg + "simulate --scene " + q(dir / "scene.json") +
            " --epochs 2 --out " + q(dir / "sim")) == 0);

  std::string frames = q(dir / "sim/epoch_0000.hicf") + " " + q(dir / "sim/epoch_0001.hicf");
  std::string bg_arg = " --background " + q(dir / "background.hgrd");
  CHECK(run(cfg_arg + "pipeline " + frames + bg_arg + " --out " + q(dir / "p1")) == 0);

  for (const char* ext : {"hgrd", "pgm", "obj"}) {
    CHECK(fs::exists(dir / "p1" / ("epoch_0000." + std::string(ext))));
    CHECK(fs::exists(dir / "p1" / ("epoch_0001." + std::string(ext))));
  }
  CHECK(slurp(dir / "p1/flags.csv") ==
        "epoch,verdict,flag\n0,regular,fresh\n1,regular,fresh\n");

  // Re-run: byte-identical products.
  CHECK(run(cfg_arg + "pipeline " + frames + bg_arg + " --out " + q(dir / "p2")) == 0);
  for (const char* name : {"epoch_0000.hgrd", "epoch_0000.pgm", "epoch_0000.obj",
                           "epoch_0001.hgrd", "flags.csv"}) {
    CHECK(slurp(dir / "p1" / name) == slurp(dir / "p2" / name));
  }

  // A model that always answers "regular" (zero weights, bias toward logit 0)
  // must not change any product.
  filter::ClassifierModel model = filter::make_classifier(filter::PoolKind::Max, 0);
  auto zero = [](std::vector<double>& v) { std::fill(v.begin(), v.end(), 0.0); };
  zero(model.conv1_w);
  zero(model.conv1_b);
  zero(model.conv2_w);
  zero(model.conv2_b);
  zero(model.fc_w);
  model.fc_b = {1.0, 0.0};
  io::write_model(dir / "regular.hmdl", model);
  CHECK(run(cfg_arg + "pipeline " + frames + bg_arg + " --model " +
            q(dir / "regular.hmdl") + " --out " + q(dir / "p3")) == 0);
  for (const char* name : {"epoch_0000.hgrd", "epoch_0001.hgrd", "flags.csv"}) {
    CHECK(slurp(dir / "p1" / name) == slurp(dir / "p3" / name));
  }

  // The emitted grid is the library's subtract-then-threshold result for
  // frame 0 against the (empty scene) background.
  PipelineConfig cfg = load_config(dir / "cfg.json");
  recon::ReconstructionPlan plan(cfg.geometry, cfg.chirp, cfg.grid);
  recon::PowerGrid direct =
      plan.reconstruct(io::read_frame(dir / "sim/epoch_0000.hicf"));
  calib::BackgroundModel bg = io::read_background(dir / "background.hgrd");
  recon::PowerGrid cleaned = imaging::threshold_normalize(
      calib::subtract_background(direct, bg), cfg.keep_fraction);
  recon::PowerGrid from_cli = io::read_grid(dir / "p1/epoch_0000.hgrd");
  REQUIRE(from_cli.values.size() == cleaned.values.size());
  for (std::size_t i = 0; i < cleaned.values.size(); ++i) {
    CHECK(from_cli.values[i] ==
          static_cast<double>(static_cast<float>(cleaned.values[i])));
  }
}

TEST_CASE("train writes the model and history, and is seed-deterministic") {
  TempDir dir;
  write_config(dir / "cfg.json");

  // Six synthetic grids: label 0 bright near the front, label 1 bright at
  // the back, with mild per-file variation.
  recon::GridSpec spec = load_config(dir / "cfg.json").grid;
  std::string manifest;
  Rng rng(5);
  for (int k = 0; k < 6; ++k) {
    recon::PowerGrid g = recon::PowerGrid::zeros(spec);
    int label = k % 2;
    for (std::size_t i = 0; i < g.nx; ++i)
      for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t kk = 0; kk < g.nz; ++kk) {
          bool front = i < g.nx / 2;
          double base = (front == (label == 0)) ? 1.0 : 0.1;
          g.at(i, j, kk) = base * rng.uniform(0.8, 1.0);
        }
    std::string name = "grid" + std::to_string(k) + ".hgrd";
    io::write_grid(dir / name, g);
    manifest += name + " " + std::to_string(label) + "\n";
  }
  spit(dir / "manifest.txt", manifest);
  std::string base_cmd = "--config " + q(dir / "cfg.json") +
                         " train --manifest " + q(dir / "manifest.txt");

  CHECK(run(base_cmd + " --epochs 0 --out " + q(dir / "m0.hmdl")) == 0);
  CHECK(fs::exists(dir / "m0.hmdl"));
  CHECK(slurp(dir / "m0.hmdl.history.csv") == "epoch,running_loss,accuracy\n");
  // Zero epochs leaves the seeded init untouched (modulo the 32-bit file
  // round trip; the config seed is 3).
  filter::ClassifierModel m0 = io::read_model(dir / "m0.hmdl");
  filter::ClassifierModel fresh = filter::make_classifier(filter::PoolKind::Max, 3);
  REQUIRE(m0.conv1_w.size() == fresh.conv1_w.size());
  for (std::size_t i = 0; i < fresh.conv1_w.size(); ++i) {
    CHECK(m0.conv1_w[i] ==
          static_cast<double>(static_cast<float>(fresh.conv1_w[i])));
  }
  CHECK(m0.fc_b.size() == 2);

  std::string trained = " --epochs 3 --pooling avg";
  CHECK(run(base_cmd + trained + " --out " + q(dir / "m1.hmdl") + " --history " +
            q(dir / "h1.csv")) == 0);
  CHECK(run(base_cmd + trained + " --out " + q(dir / "m2.hmdl") + " --history " +
            q(dir / "h2.csv")) == 0);
  CHECK(slurp(dir / "m1.hmdl") == slurp(dir / "m2.hmdl"));
  CHECK(slurp(dir / "h1.csv") == slurp(dir / "h2.csv"));
  CHECK(slurp(dir / "h1.csv").substr(0, 28) == "epoch,running_loss,accuracy\n");
  CHECK(io::read_model(dir / "m1.hmdl").pooling == filter::PoolKind::Average);

  CHECK(run("--config " + q(dir / "cfg.json") + " --seed 99 train --manifest " +
            q(dir / "manifest.txt") + trained + " --out " + q(dir / "m3.hmdl")) == 0);
  CHECK(slurp(dir / "m1.hmdl") != slurp(dir / "m3.hmdl"));
}

TEST_CASE("failures map to the documented exit codes") {
  TempDir dir;
  write_config(dir / "cfg.json");
  std::string cfg_arg = "--config " + q(dir / "cfg.json") + " ";
  fs::create_directories(dir / "out");

  // 1: usage errors.
  CHECK(run("") == 1);
  CHECK(run("simulate") == 1);
  CHECK(run("frobnicate") == 1);

  // 2: unreadable scene or config.
  spit(dir / "bad_scene.json", "not json");
  CHECK(run(cfg_arg + "simulate --scene " + q(dir / "bad_scene.json") +
            " --out " + q(dir / "out")) == 2);
  spit(dir / "bad_cfg.json", R"({"grid": {"r_res_m": -1.0}})");
  spit(dir / "scene.json", kStaticScene);
  CHECK(run("--config " + q(dir / "bad_cfg.json") + " simulate --scene " +
            q(dir / "scene.json") + " --out " + q(dir / "out")) == 2);

  // 3: frame does not match the configured chirp and array.
  ArrayGeometry one;
  one.tx_count = 1;
  one.rx_count = 1;
  ChirpConfig chirp;
  chirp.samples_per_chirp = 16;
  io::write_frame(dir / "one.hicf", RawFrame::zeros(one, chirp));
  CHECK(run(cfg_arg + "calibrate " + q(dir / "one.hicf") + " --out " +
            q(dir / "bg.hgrd")) == 3);

  // 3: background grid from a different voxel grid.
  recon::GridSpec other = load_config(dir / "cfg.json").grid;
  other.r_max_m = 1.1;
  calib::BackgroundModel bg;
  bg.mean_grid = recon::PowerGrid::zeros(other);
  bg.frame_count = 1;
  io::write_background(dir / "mismatch.hgrd", bg, 0);
  fs::create_directories(dir / "sim");
  CHECK(run(cfg_arg + "simulate --scene " + q(dir / "scene.json") +
            " --epochs 1 --out " + q(dir / "sim")) == 0);
  CHECK(run(cfg_arg + "pipeline " + q(dir / "sim/epoch_0000.hicf") +
            " --background " + q(dir / "mismatch.hgrd") + " --out " +
            q(dir / "out")) == 3);

  // 4: background file missing entirely.
  CHECK(run(cfg_arg + "pipeline " + q(dir / "sim/epoch_0000.hicf") +
            " --background " + q(dir / "nope.hgrd") + " --out " +
            q(dir / "out")) == 4);

  // 5: corrupt inputs.
  spit(dir / "corrupt.hicf", "HICF truncated");
  CHECK(run(cfg_arg + "calibrate " + q(dir / "corrupt.hicf") + " --out " +
            q(dir / "bg.hgrd")) == 5);
  spit(dir / "mystery.bin", "XYZW????");
  CHECK(run("inspect " + q(dir / "mystery.bin")) == 5);

  // 6: manifest with a single class.
  recon::PowerGrid g = recon::PowerGrid::zeros(load_config(dir / "cfg.json").grid);
  g.values[0] = 1.0;
  io::write_grid(dir / "g.hgrd", g);
  spit(dir / "mono.txt", "g.hgrd 0\ng.hgrd 0\n");
  CHECK(run(cfg_arg + "train --manifest " + q(dir / "mono.txt") + " --out " +
            q(dir / "m.hmdl")) == 6);
}

TEST_CASE("inspect succeeds on every native format") {
  TempDir dir;
  write_config(dir / "cfg.json");
  spit(dir / "scene.json", kStaticScene);
  fs::create_directories(dir / "sim");
  std::string cfg_arg = "--config " + q(dir / "cfg.json") + " ";
  CHECK(run(cfg_arg + "simulate --scene " + q(dir / "scene.json") +
            " --epochs 1 --out " + q(dir / "sim")) == 0);
  CHECK(run(cfg_arg + "calibrate " + q(dir / "sim/epoch_0000.hicf") + " --out " +
            q(dir / "bg.hgrd")) == 0);
  io::write_model(dir / "m.hmdl", filter::make_classifier(filter::PoolKind::Max, 1));

  std::string cmd = std::string(kCli) + " inspect " + q(dir / "sim/epoch_0000.hicf") +
                    " " + q(dir / "bg.hgrd") + " " + q(dir / "m.hmdl") + " > " +
                    q(dir / "inspect.txt") + " 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  CHECK(WEXITSTATUS(status) == 0);
  std::string text = slurp(dir / "inspect.txt");
  CHECK(text.find("HICF") != std::string::npos);
  CHECK(text.find("HGRD") != std::string::npos);
  CHECK(text.find("HMDL") != std::string::npos);
}
