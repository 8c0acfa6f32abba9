#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "rvox/calibrate.hpp"
#include "rvox/framefilter.hpp"
#include "rvox/imaging.hpp"
#include "rvox/reconstruct.hpp"
#include "rvox/types.hpp"

namespace rvox {

/// Everything the stream commands need in one place. Loaded from a JSON
/// config file; absent keys keep their defaults.
struct PipelineConfig {
  ChirpConfig chirp;
  ArrayGeometry geometry;
  recon::GridSpec grid;
  std::size_t calibration_frames = 10;
  double keep_fraction = 0.1;
  /// Mesh iso level as a fraction of the grid maximum.
  double iso_fraction = 0.5;
  double noise_amplitude = 0.0;
  std::string model_path;
  std::string output_dir = ".";
  std::uint64_t seed = 0;

  void validate() const;
};

PipelineConfig load_config(const std::filesystem::path& path);

/// Products of one stream step for one frame.
struct FrameProducts {
  recon::PowerGrid output;  // grid after subtract/threshold/hold
  filter::Verdict verdict = filter::Verdict::Regular;
  filter::StreamFlag flag = filter::StreamFlag::Fresh;
};

/// reconstruct -> subtract background -> threshold -> classify -> hold.
/// `model` may be null, in which case every frame counts as Regular.
FrameProducts process_frame(const RawFrame& frame, std::int64_t epoch,
                            const recon::ReconstructionPlan& plan,
                            const calib::BackgroundModel& background,
                            double keep_fraction,
                            const filter::ClassifierModel* model,
                            filter::StreamState& state, int jobs = 1);

}  // namespace rvox
