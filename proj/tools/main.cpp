// rvox: simulate, calibrate, image, filter, and train on synthetic radar
// frames. Every command is deterministic under a fixed --seed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rvox/io.hpp"
#include "rvox/pipeline.hpp"
#include "rvox/scenesim.hpp"

namespace fs = std::filesystem;

namespace {

// Exit codes, also listed in the README:
//   0 success, 1 generic failure, 2 invalid scene or config,
//   3 frame/config spec mismatch, 4 missing background,
//   5 corrupt input file, 6 single-class training manifest.
enum ExitCode {
  kOk = 0,
  kGeneric = 1,
  kBadConfig = 2,
  kSpecMismatch = 3,
  kMissingBackground = 4,
  kCorruptFile = 5,
  kSingleClass = 6,
};

int fail(ExitCode code, const std::string& message) {
  std::fprintf(stderr, "rvox: %s\n", message.c_str());
  return code;
}

std::string frame_name(std::size_t epoch, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04zu.%s", epoch, ext);
  return buf;
}

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 1;

  rvox::PipelineConfig load() const {
    rvox::PipelineConfig cfg;
    if (!config_path.empty()) cfg = rvox::load_config(config_path);
    if (seed_given) cfg.seed = seed;
    return cfg;
  }
};

int cmd_simulate(const Options& opts, const std::string& scene_path,
                 const std::string& out_dir_flag, std::size_t epochs) {
  rvox::PipelineConfig cfg;
  rvox::io::SceneFile scene_file;
  try {
    cfg = opts.load();
    scene_file = rvox::io::load_scene(scene_path);
  } catch (const std::exception& e) {
    return fail(kBadConfig, e.what());
  }

  fs::path out_dir = out_dir_flag.empty() ? fs::path(cfg.output_dir)
                                          : fs::path(out_dir_flag);
  fs::create_directories(out_dir);

  rvox::sim::SimOptions sim_opts;
  sim_opts.noise_amplitude = cfg.noise_amplitude;
  sim_opts.seed = cfg.seed;

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rvox::Scene scene;
    try {
      scene = rvox::sim::scene_at_epoch(scene_file.trajectories,
                                        static_cast<std::int64_t>(epoch));
      scene.reflectors.insert(scene.reflectors.begin(),
                              scene_file.reflectors.begin(),
                              scene_file.reflectors.end());
      rvox::RawFrame frame =
          rvox::sim::synthesize_frame(scene, cfg.geometry, cfg.chirp, sim_opts);
      rvox::io::write_frame(out_dir / frame_name(epoch, "hicf"), frame);
    } catch (const std::domain_error& e) {
      return fail(kBadConfig, e.what());
    } catch (const rvox::io::IoError& e) {
      return fail(kGeneric, e.what());
    }
  }
  return kOk;
}

int cmd_calibrate(const Options& opts, const std::vector<std::string>& frames,
                  const std::string& out_path) {
  rvox::PipelineConfig cfg;
  try {
    cfg = opts.load();
  } catch (const std::exception& e) {
    return fail(kBadConfig, e.what());
  }

  try {
    rvox::recon::ReconstructionPlan plan(cfg.geometry, cfg.chirp, cfg.grid);
    std::vector<rvox::recon::PowerGrid> grids;
    grids.reserve(frames.size());
    for (std::size_t epoch = 0; epoch < frames.size(); ++epoch) {
      rvox::RawFrame frame = rvox::io::read_frame(frames[epoch]);
      frame.epoch = static_cast<std::int64_t>(epoch);
      try {
        grids.push_back(plan.reconstruct(frame, opts.jobs));
      } catch (const std::invalid_argument& e) {
        return fail(kSpecMismatch, e.what());
      }
    }
    rvox::calib::BackgroundModel bg = rvox::calib::accumulate_background(grids);
    // The creation stamp is the last calibration epoch, not wall-clock time,
    // so repeated runs stay byte-identical.
    rvox::io::write_background(out_path, bg,
                               static_cast<std::int64_t>(frames.size()) - 1);
  } catch (const rvox::io::CorruptFile& e) {
    return fail(kCorruptFile, e.what());
  } catch (const std::exception& e) {
    return fail(kGeneric, e.what());
  }
  return kOk;
}

int cmd_pipeline(const Options& opts, const std::vector<std::string>& frames,
                 const std::string& background_path,
                 const std::string& model_flag,
                 const std::string& out_dir_flag) {
  rvox::PipelineConfig cfg;
  try {
    cfg = opts.load();
  } catch (const std::exception& e) {
    return fail(kBadConfig, e.what());
  }
  if (!fs::exists(background_path)) {
    return fail(kMissingBackground, "background file not found: " + background_path);
  }

  std::string model_path = model_flag.empty() ? cfg.model_path : model_flag;
  fs::path out_dir = out_dir_flag.empty() ? fs::path(cfg.output_dir)
                                          : fs::path(out_dir_flag);

  try {
    rvox::calib::BackgroundModel background =
        rvox::io::read_background(background_path);
    rvox::filter::ClassifierModel model;
    bool have_model = !model_path.empty();
    if (have_model) model = rvox::io::read_model(model_path);

    rvox::recon::ReconstructionPlan plan(cfg.geometry, cfg.chirp, cfg.grid);
    if (background.mean_grid.spec != cfg.grid) {
      return fail(kSpecMismatch, "background grid does not match the config");
    }
    fs::create_directories(out_dir);

    std::string flags_csv = "epoch,verdict,flag\n";
    rvox::filter::StreamState state;
    for (std::size_t epoch = 0; epoch < frames.size(); ++epoch) {
      rvox::RawFrame frame = rvox::io::read_frame(frames[epoch]);
      rvox::FrameProducts products;
      try {
        products = rvox::process_frame(
            frame, static_cast<std::int64_t>(epoch), plan, background,
            cfg.keep_fraction, have_model ? &model : nullptr, state, opts.jobs);
      } catch (const std::invalid_argument& e) {
        return fail(kSpecMismatch, e.what());
      }

      rvox::io::write_grid(out_dir / frame_name(epoch, "hgrd"), products.output);
      rvox::imaging::VoxelIndex peak = rvox::imaging::peak_voxel(products.output);
      rvox::io::write_pgm16(
          out_dir / frame_name(epoch, "pgm"),
          rvox::imaging::heatmap_slice(products.output, peak.j));

      double grid_max = 0.0;
      for (double v : products.output.values) {
        if (v > grid_max) grid_max = v;
      }
      double iso = grid_max > 0.0 ? cfg.iso_fraction * grid_max : 1.0;
      rvox::io::write_obj(out_dir / frame_name(epoch, "obj"),
                          rvox::imaging::marching_cubes(products.output, iso));

      flags_csv += std::to_string(epoch);
      flags_csv += ',';
      flags_csv += rvox::filter::to_string(products.verdict);
      flags_csv += ',';
      flags_csv += rvox::filter::to_string(products.flag);
      flags_csv += '\n';
    }
    std::ofstream csv(out_dir / "flags.csv", std::ios::binary | std::ios::trunc);
    csv << flags_csv;
    if (!csv) return fail(kGeneric, "cannot write flags.csv");
  } catch (const rvox::io::CorruptFile& e) {
    return fail(kCorruptFile, e.what());
  } catch (const std::exception& e) {
    return fail(kGeneric, e.what());
  }
  return kOk;
}

int cmd_train(const Options& opts, const std::string& manifest_path,
              const std::string& out_path, const std::string& history_flag,
              const std::string& pooling_name, std::size_t epochs) {
  rvox::PipelineConfig cfg;
  try {
    cfg = opts.load();
  } catch (const std::exception& e) {
    return fail(kBadConfig, e.what());
  }

  try {
    std::vector<rvox::io::ManifestEntry> manifest =
        rvox::io::load_manifest(manifest_path);
    bool has[2] = {false, false};
    for (const auto& entry : manifest) has[entry.label] = true;
    if (!has[0] || !has[1]) {
      return fail(kSingleClass, "manifest must contain both labels");
    }

    std::vector<rvox::filter::LabeledInput> dataset;
    dataset.reserve(manifest.size());
    for (const auto& entry : manifest) {
      rvox::filter::LabeledInput sample;
      sample.input =
          rvox::filter::extract_input(rvox::io::read_grid(entry.grid_path));
      sample.label = entry.label;
      dataset.push_back(std::move(sample));
    }

    rvox::filter::PoolKind pooling = pooling_name == "avg"
                                         ? rvox::filter::PoolKind::Average
                                         : rvox::filter::PoolKind::Max;
    rvox::filter::ClassifierModel model =
        rvox::filter::make_classifier(pooling, cfg.seed);
    rvox::filter::TrainConfig train_cfg;
    train_cfg.epochs = epochs;
    train_cfg.rng_seed = rvox::mix_seed(cfg.seed, 1);
    std::vector<rvox::filter::EpochStats> history =
        rvox::filter::train(model, dataset, train_cfg);

    rvox::io::write_model(out_path, model);
    std::string history_path =
        history_flag.empty() ? out_path + ".history.csv" : history_flag;
    rvox::io::write_history_csv(history_path, history);
  } catch (const rvox::io::CorruptFile& e) {
    return fail(kCorruptFile, e.what());
  } catch (const std::exception& e) {
    return fail(kGeneric, e.what());
  }
  return kOk;
}

int cmd_inspect(const std::vector<std::string>& paths) {
  for (const std::string& path : paths) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) return fail(kGeneric, "cannot open: " + path);
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    std::string tag(magic, probe.gcount() >= 4 ? 4 : 0);
    probe.close();

    try {
      if (tag == "HICF") {
        rvox::RawFrame f = rvox::io::read_frame(path);
        std::printf("%s: HICF frame, tx %zu, rx %zu, samples %zu\n",
                    path.c_str(), f.tx_count, f.rx_count, f.samples_per_chirp);
      } else if (tag == "HGRD") {
        rvox::recon::PowerGrid g = rvox::io::read_grid(path);
        std::printf(
            "%s: HGRD grid, dims %zux%zux%zu, r [%g, %g] @ %g m, "
            "theta [%g, %g] @ %g deg, phi [%g, %g] @ %g deg\n",
            path.c_str(), g.nx, g.ny, g.nz, g.spec.r_min_m, g.spec.r_max_m,
            g.spec.r_res_m, rvox::rad_to_deg(g.spec.theta_min_rad),
            rvox::rad_to_deg(g.spec.theta_max_rad),
            rvox::rad_to_deg(g.spec.theta_res_rad),
            rvox::rad_to_deg(g.spec.phi_min_rad),
            rvox::rad_to_deg(g.spec.phi_max_rad),
            rvox::rad_to_deg(g.spec.phi_res_rad));
      } else if (tag == "HMDL") {
        rvox::filter::ClassifierModel m = rvox::io::read_model(path);
        std::printf(
            "%s: HMDL model, %s pooling, conv1 %zux1x3x3, conv2 %zux%zux3x3, "
            "fc 2x%zu (%zu parameters)\n",
            path.c_str(), rvox::filter::to_string(m.pooling), m.shape.c1_out,
            m.shape.c2_out, m.shape.c1_out, m.shape.feature_dim(),
            m.shape.param_count());
      } else {
        return fail(kCorruptFile, "unrecognized magic in " + path);
      }
    } catch (const rvox::io::CorruptFile& e) {
      return fail(kCorruptFile, e.what());
    } catch (const std::exception& e) {
      return fail(kGeneric, e.what());
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Synthetic FMCW radar imaging pipeline"};
  app.require_subcommand(1);

  Options opts;
  app.add_option("--config", opts.config_path, "JSON pipeline config file");
  auto* seed_opt =
      app.add_option("--seed", opts.seed, "Seed for every random draw");
  app.add_option("--jobs", opts.jobs, "Worker threads for reconstruction")
      ->check(CLI::PositiveNumber);

  auto* sim = app.add_subcommand("simulate", "Synthesize raw frames for a scene");
  sim->fallthrough();
  std::string scene_path, sim_out;
  std::size_t sim_epochs = 1;
  sim->add_option("--scene", scene_path, "JSON scene file")->required();
  sim->add_option("--out", sim_out, "Output directory");
  sim->add_option("--epochs", sim_epochs, "Number of frames to synthesize");

  auto* cal = app.add_subcommand("calibrate", "Average frames into a background");
  cal->fallthrough();
  std::vector<std::string> cal_frames;
  std::string cal_out = "background.hgrd";
  cal->add_option("frames", cal_frames, "HICF frame files")->required();
  cal->add_option("--out", cal_out, "Background output path");

  auto* pipe = app.add_subcommand(
      "pipeline", "Reconstruct, subtract, threshold, filter, and export");
  pipe->fallthrough();
  std::vector<std::string> pipe_frames;
  std::string pipe_background, pipe_model, pipe_out;
  pipe->add_option("frames", pipe_frames, "HICF frame files")->required();
  pipe->add_option("--background", pipe_background, "Background HGRD file")
      ->required();
  pipe->add_option("--model", pipe_model, "Classifier model (HMDL)");
  pipe->add_option("--out", pipe_out, "Output directory");

  auto* train = app.add_subcommand("train", "Train the frame classifier");
  train->fallthrough();
  std::string manifest_path, train_out = "model.hmdl", history_path;
  std::string pooling = "max";
  std::size_t train_epochs = 20;
  train->add_option("--manifest", manifest_path, "Grid/label manifest file")
      ->required();
  train->add_option("--out", train_out, "Model output path");
  train->add_option("--history", history_path,
                    "Training history CSV (default <model>.history.csv)");
  train->add_option("--pooling", pooling, "Pooling kind")
      ->check(CLI::IsMember({"avg", "max"}));
  train->add_option("--epochs", train_epochs, "Training epochs");

  auto* inspect = app.add_subcommand("inspect", "Print file headers");
  inspect->fallthrough();
  std::vector<std::string> inspect_paths;
  inspect->add_option("files", inspect_paths, "Files to describe")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kGeneric;
  }
  opts.seed_given = seed_opt->count() > 0;

  if (app.got_subcommand(sim)) {
    return cmd_simulate(opts, scene_path, sim_out, sim_epochs);
  }
  if (app.got_subcommand(cal)) {
    return cmd_calibrate(opts, cal_frames, cal_out);
  }
  if (app.got_subcommand(pipe)) {
    return cmd_pipeline(opts, pipe_frames, pipe_background, pipe_model, pipe_out);
  }
  if (app.got_subcommand(train)) {
    return cmd_train(opts, manifest_path, train_out, history_path, pooling,
                     train_epochs);
  }
  if (app.got_subcommand(inspect)) {
    return cmd_inspect(inspect_paths);
  }
  return kGeneric;
}
