#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "rvox/calibrate.hpp"
#include "rvox/framefilter.hpp"
#include "rvox/imaging.hpp"
#include "rvox/types.hpp"

namespace rvox::io {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wrong magic, unsupported version, or truncated payload.
class CorruptFile : public IoError {
 public:
  using IoError::IoError;
};

// ---- binary formats (all little-endian) ----
//
// HICF raw frame:  magic "HICF", u16 version, u32 M, u32 N, u32 T,
//                  then M*N*T float32 (re, im) pairs, m-major then n then t.
// HGRD power grid: magic "HGRD", u16 version, nine float64 GridSpec scalars
//                  (r min/max/res, theta min/max/res, phi min/max/res),
//                  u32 dims x3, then float32 values R-major, theta, phi.
// HMDL model:      magic "HMDL", u16 version, u8 pooling kind (0 avg, 1 max),
//                  then six tensors in order conv1_w, conv1_b, conv2_w,
//                  conv2_b, fc_w, fc_b, each as u32 rank, u32 dims, float32
//                  data row-major.

void write_frame(const std::filesystem::path& path, const RawFrame& frame);
RawFrame read_frame(const std::filesystem::path& path);

void write_grid(const std::filesystem::path& path, const recon::PowerGrid& grid);
recon::PowerGrid read_grid(const std::filesystem::path& path);

void write_model(const std::filesystem::path& path, const filter::ClassifierModel& model);
filter::ClassifierModel read_model(const std::filesystem::path& path);

/// Background = HGRD grid plus "<path>.meta" sidecar with frame_count and
/// created_epoch lines.
void write_background(const std::filesystem::path& path, const calib::BackgroundModel& bg,
                      std::int64_t created_epoch);
calib::BackgroundModel read_background(const std::filesystem::path& path);

// ---- text products ----

/// 16-bit binary PGM ("P5", maxval 65535, big-endian samples). Rows run over
/// R (top row = smallest R), columns over phi. Values map linearly from
/// [0, slice max] onto [0, 65535]; an all-zero slice exports all black.
void write_pgm16(const std::filesystem::path& path, const imaging::HeatMap2D& map);

/// ASCII OBJ with v records and 1-based f records.
void write_obj(const std::filesystem::path& path, const imaging::Mesh& mesh);

/// CSV with header epoch,running_loss,accuracy.
void write_history_csv(const std::filesystem::path& path,
                       const std::vector<filter::EpochStats>& history);

// ---- scene and manifest files ----

struct SceneFile {
  std::vector<Reflector> reflectors;
  std::vector<Trajectory> trajectories;
};

/// JSON scene description; see README for the key list.
SceneFile load_scene(const std::filesystem::path& path);

struct ManifestEntry {
  std::filesystem::path grid_path;
  int label = 0;
};

/// Whitespace-separated "<grid path> <label>" lines; '#' starts a comment.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

}  // namespace rvox::io
