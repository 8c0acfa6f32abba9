#include "rvox/pipeline.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "rvox/io.hpp"

namespace rvox {

void PipelineConfig::validate() const {
  chirp.validate();
  geometry.validate();
  grid.validate();
  if (calibration_frames < 1) {
    throw std::invalid_argument("config: calibration_frames must be >= 1");
  }
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
    throw std::invalid_argument("config: keep_fraction not in (0, 1]");
  }
  if (!(iso_fraction > 0.0) || iso_fraction > 1.0) {
    throw std::invalid_argument("config: iso_fraction not in (0, 1]");
  }
  if (noise_amplitude < 0.0) {
    throw std::invalid_argument("config: noise_amplitude must be >= 0");
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io::IoError("cannot open config: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw io::IoError("config parse error in " + path.string() + ": " +
                      e.what());
  }

  PipelineConfig cfg;
  try {
    if (j.contains("chirp")) {
      const auto& c = j.at("chirp");
      cfg.chirp.f_start_hz = c.value("f_start_hz", cfg.chirp.f_start_hz);
      cfg.chirp.f_stop_hz = c.value("f_stop_hz", cfg.chirp.f_stop_hz);
      cfg.chirp.duration_s = c.value("duration_s", cfg.chirp.duration_s);
      cfg.chirp.samples_per_chirp =
          c.value("samples_per_chirp", cfg.chirp.samples_per_chirp);
    }
    if (j.contains("array")) {
      const auto& a = j.at("array");
      cfg.geometry.tx_count = a.value("tx_count", cfg.geometry.tx_count);
      cfg.geometry.rx_count = a.value("rx_count", cfg.geometry.rx_count);
      cfg.geometry.dx_m = a.value("dx_m", cfg.geometry.dx_m);
      cfg.geometry.dy_m = a.value("dy_m", cfg.geometry.dy_m);
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      cfg.grid.r_min_m = g.value("r_min_m", cfg.grid.r_min_m);
      cfg.grid.r_max_m = g.value("r_max_m", cfg.grid.r_max_m);
      cfg.grid.r_res_m = g.value("r_res_m", cfg.grid.r_res_m);
      if (g.contains("theta_min_deg"))
        cfg.grid.theta_min_rad = deg_to_rad(g.at("theta_min_deg").get<double>());
      if (g.contains("theta_max_deg"))
        cfg.grid.theta_max_rad = deg_to_rad(g.at("theta_max_deg").get<double>());
      if (g.contains("theta_res_deg"))
        cfg.grid.theta_res_rad = deg_to_rad(g.at("theta_res_deg").get<double>());
      if (g.contains("phi_min_deg"))
        cfg.grid.phi_min_rad = deg_to_rad(g.at("phi_min_deg").get<double>());
      if (g.contains("phi_max_deg"))
        cfg.grid.phi_max_rad = deg_to_rad(g.at("phi_max_deg").get<double>());
      if (g.contains("phi_res_deg"))
        cfg.grid.phi_res_rad = deg_to_rad(g.at("phi_res_deg").get<double>());
    }
    cfg.calibration_frames = j.value("calibration_frames", cfg.calibration_frames);
    cfg.keep_fraction = j.value("keep_fraction", cfg.keep_fraction);
    cfg.iso_fraction = j.value("iso_fraction", cfg.iso_fraction);
    cfg.noise_amplitude = j.value("noise_amplitude", cfg.noise_amplitude);
    cfg.model_path = j.value("model_path", cfg.model_path);
    cfg.output_dir = j.value("output_dir", cfg.output_dir);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const nlohmann::json::exception& e) {
    throw io::IoError("config field error in " + path.string() + ": " +
                      e.what());
  }
  cfg.validate();
  return cfg;
}

FrameProducts process_frame(const RawFrame& frame, std::int64_t epoch,
                            const recon::ReconstructionPlan& plan,
                            const calib::BackgroundModel& background,
                            double keep_fraction,
                            const filter::ClassifierModel* model,
                            filter::StreamState& state, int jobs) {
  recon::PowerGrid live = plan.reconstruct(frame, jobs);
  live.epoch = epoch;
  recon::PowerGrid cleaned = calib::subtract_background(live, background);
  recon::PowerGrid kept = imaging::threshold_normalize(cleaned, keep_fraction);

  FrameProducts products;
  products.verdict = filter::Verdict::Regular;
  if (model != nullptr) {
    products.verdict = filter::classify(*model, filter::extract_input(kept));
  }
  filter::StreamResult held = filter::stream_filter(state, kept, products.verdict);
  products.output = std::move(held.output);
  products.flag = held.flag;
  return products;
}

}  // namespace rvox
