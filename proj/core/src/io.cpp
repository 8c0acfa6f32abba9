#include "rvox/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rvox::io {

namespace {

constexpr std::uint16_t kFormatVersion = 1;

// All binary products use explicit little-endian byte order regardless of
// the host.

struct Writer {
  std::string buf;

  void u8(std::uint8_t v) { buf.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void magic(const char tag[4]) { buf.append(tag, 4); }
};

void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

struct Reader {
  std::string buf;
  std::size_t pos = 0;
  std::string name;

  Reader(const std::filesystem::path& path) : name(path.string()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + name);
    std::ostringstream ss;
    ss << in.rdbuf();
    buf = ss.str();
  }

  void need(std::size_t n) {
    if (pos + n > buf.size()) throw CorruptFile("truncated file: " + name);
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::uint16_t u16() {
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(u8()) << (8 * i);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  void expect_magic(const char tag[4]) {
    need(4);
    if (std::memcmp(buf.data() + pos, tag, 4) != 0) {
      throw CorruptFile("bad magic in " + name);
    }
    pos += 4;
  }
  void expect_version() {
    if (u16() != kFormatVersion) {
      throw CorruptFile("unsupported format version in " + name);
    }
  }
  void expect_end() {
    if (pos != buf.size()) throw CorruptFile("trailing bytes in " + name);
  }
};

}  // namespace

void write_frame(const std::filesystem::path& path, const RawFrame& frame) {
  Writer w;
  w.magic("HICF");
  w.u16(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(frame.tx_count));
  w.u32(static_cast<std::uint32_t>(frame.rx_count));
  w.u32(static_cast<std::uint32_t>(frame.samples_per_chirp));
  for (const std::complex<double>& s : frame.samples) {
    w.f32(static_cast<float>(s.real()));
    w.f32(static_cast<float>(s.imag()));
  }
  write_file(path, w.buf);
}

RawFrame read_frame(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic("HICF");
  r.expect_version();
  RawFrame frame;
  frame.tx_count = r.u32();
  frame.rx_count = r.u32();
  frame.samples_per_chirp = r.u32();
  if (frame.tx_count == 0 || frame.rx_count == 0 ||
      frame.samples_per_chirp == 0) {
    throw CorruptFile("zero-sized frame in " + r.name);
  }
  std::size_t count = frame.tx_count * frame.rx_count * frame.samples_per_chirp;
  frame.samples.resize(count);
  for (std::complex<double>& s : frame.samples) {
    double re = r.f32();
    double im = r.f32();
    s = {re, im};
  }
  r.expect_end();
  return frame;
}

void write_grid(const std::filesystem::path& path, const recon::PowerGrid& grid) {
  Writer w;
  w.magic("HGRD");
  w.u16(kFormatVersion);
  w.f64(grid.spec.r_min_m);
  w.f64(grid.spec.r_max_m);
  w.f64(grid.spec.r_res_m);
  w.f64(grid.spec.theta_min_rad);
  w.f64(grid.spec.theta_max_rad);
  w.f64(grid.spec.theta_res_rad);
  w.f64(grid.spec.phi_min_rad);
  w.f64(grid.spec.phi_max_rad);
  w.f64(grid.spec.phi_res_rad);
  w.u32(static_cast<std::uint32_t>(grid.nx));
  w.u32(static_cast<std::uint32_t>(grid.ny));
  w.u32(static_cast<std::uint32_t>(grid.nz));
  for (double v : grid.values) w.f32(static_cast<float>(v));
  write_file(path, w.buf);
}

recon::PowerGrid read_grid(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic("HGRD");
  r.expect_version();
  recon::GridSpec spec;
  spec.r_min_m = r.f64();
  spec.r_max_m = r.f64();
  spec.r_res_m = r.f64();
  spec.theta_min_rad = r.f64();
  spec.theta_max_rad = r.f64();
  spec.theta_res_rad = r.f64();
  spec.phi_min_rad = r.f64();
  spec.phi_max_rad = r.f64();
  spec.phi_res_rad = r.f64();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw CorruptFile(std::string(e.what()) + " in " + r.name);
  }
  recon::PowerGrid grid;
  grid.spec = spec;
  grid.nx = r.u32();
  grid.ny = r.u32();
  grid.nz = r.u32();
  recon::Dims3 expected = recon::grid_dims(spec);
  if (recon::Dims3{grid.nx, grid.ny, grid.nz} != expected) {
    throw CorruptFile("grid dims do not match the grid bounds in " + r.name);
  }
  grid.values.resize(grid.size());
  for (double& v : grid.values) v = r.f32();
  r.expect_end();
  return grid;
}

namespace {

void write_tensor(Writer& w, const std::vector<double>& data,
                  std::initializer_list<std::size_t> dims) {
  w.u32(static_cast<std::uint32_t>(dims.size()));
  std::size_t total = 1;
  for (std::size_t d : dims) {
    w.u32(static_cast<std::uint32_t>(d));
    total *= d;
  }
  if (total != data.size()) throw IoError("tensor shape mismatch on write");
  for (double v : data) w.f32(static_cast<float>(v));
}

std::vector<double> read_tensor(Reader& r, std::vector<std::size_t>& dims) {
  std::uint32_t rank = r.u32();
  if (rank == 0 || rank > 4) throw CorruptFile("bad tensor rank in " + r.name);
  dims.clear();
  std::size_t total = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    std::uint32_t d = r.u32();
    if (d == 0 || total > (std::size_t{1} << 28) / d) {
      throw CorruptFile("bad tensor dims in " + r.name);
    }
    dims.push_back(d);
    total *= d;
  }
  std::vector<double> data(total);
  for (double& v : data) v = r.f32();
  return data;
}

}  // namespace

void write_model(const std::filesystem::path& path,
                 const filter::ClassifierModel& model) {
  const filter::NetShape& s = model.shape;
  constexpr std::size_t K = filter::NetShape::kKernel;
  Writer w;
  w.magic("HMDL");
  w.u16(kFormatVersion);
  w.u8(static_cast<std::uint8_t>(model.pooling));
  write_tensor(w, model.conv1_w, {s.c1_out, 1, K, K});
  write_tensor(w, model.conv1_b, {s.c1_out});
  write_tensor(w, model.conv2_w, {s.c2_out, s.c1_out, K, K});
  write_tensor(w, model.conv2_b, {s.c2_out});
  write_tensor(w, model.fc_w, {2, s.feature_dim()});
  write_tensor(w, model.fc_b, {2});
  write_file(path, w.buf);
}

filter::ClassifierModel read_model(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic("HMDL");
  r.expect_version();
  std::uint8_t pool = r.u8();
  if (pool > 1) throw CorruptFile("bad pooling kind in " + r.name);

  filter::ClassifierModel m;
  m.pooling = static_cast<filter::PoolKind>(pool);
  std::vector<std::size_t> dims;
  constexpr std::size_t K = filter::NetShape::kKernel;

  m.conv1_w = read_tensor(r, dims);
  if (dims.size() != 4 || dims[1] != 1 || dims[2] != K || dims[3] != K) {
    throw CorruptFile("bad conv1 weight shape in " + r.name);
  }
  m.shape.c1_out = dims[0];
  m.conv1_b = read_tensor(r, dims);
  if (dims.size() != 1 || dims[0] != m.shape.c1_out) {
    throw CorruptFile("bad conv1 bias shape in " + r.name);
  }
  m.conv2_w = read_tensor(r, dims);
  if (dims.size() != 4 || dims[1] != m.shape.c1_out || dims[2] != K ||
      dims[3] != K) {
    throw CorruptFile("bad conv2 weight shape in " + r.name);
  }
  m.shape.c2_out = dims[0];
  m.conv2_b = read_tensor(r, dims);
  if (dims.size() != 1 || dims[0] != m.shape.c2_out) {
    throw CorruptFile("bad conv2 bias shape in " + r.name);
  }
  m.fc_w = read_tensor(r, dims);
  if (dims.size() != 2 || dims[0] != 2 || dims[1] != m.shape.feature_dim()) {
    throw CorruptFile("bad fc weight shape in " + r.name);
  }
  m.fc_b = read_tensor(r, dims);
  if (dims.size() != 1 || dims[0] != 2) {
    throw CorruptFile("bad fc bias shape in " + r.name);
  }
  r.expect_end();
  // The file stores layer tensors only; the input edge defaults to the
  // production 32x32 size.
  m.shape.input_hw = 32;
  m.shape.validate();
  return m;
}

void write_background(const std::filesystem::path& path,
                      const calib::BackgroundModel& bg,
                      std::int64_t created_epoch) {
  write_grid(path, bg.mean_grid);
  std::filesystem::path meta = path;
  meta += ".meta";
  std::string text = "frame_count " + std::to_string(bg.frame_count) +
                     "\ncreated_epoch " + std::to_string(created_epoch) + "\n";
  write_file(meta, text);
}

calib::BackgroundModel read_background(const std::filesystem::path& path) {
  calib::BackgroundModel bg;
  bg.mean_grid = read_grid(path);

  std::filesystem::path meta = path;
  meta += ".meta";
  std::ifstream in(meta);
  if (!in) throw IoError("missing background sidecar: " + meta.string());
  std::string key;
  bool have_count = false;
  while (in >> key) {
    if (key == "frame_count") {
      long long n = 0;
      if (!(in >> n) || n < 1) {
        throw CorruptFile("bad frame_count in " + meta.string());
      }
      bg.frame_count = static_cast<std::size_t>(n);
      have_count = true;
    } else {
      std::string rest;
      in >> rest;
    }
  }
  if (!have_count) {
    throw CorruptFile("frame_count missing in " + meta.string());
  }
  return bg;
}

void write_pgm16(const std::filesystem::path& path,
                 const imaging::HeatMap2D& map) {
  double peak = 0.0;
  for (double v : map.values) {
    if (v > peak) peak = v;
  }
  double scale = peak > 0.0 ? 65535.0 / peak : 0.0;

  Writer w;
  w.buf = "P5\n" + std::to_string(map.n_phi) + " " + std::to_string(map.n_r) +
          "\n65535\n";
  for (std::size_t i = 0; i < map.n_r; ++i) {
    for (std::size_t k = 0; k < map.n_phi; ++k) {
      double v = map.at(i, k) * scale;
      if (v < 0.0) v = 0.0;
      if (v > 65535.0) v = 65535.0;
      auto q = static_cast<std::uint16_t>(std::lround(v));
      w.u8(static_cast<std::uint8_t>(q >> 8));  // PGM samples are big-endian
      w.u8(static_cast<std::uint8_t>(q & 0xFF));
    }
  }
  write_file(path, w.buf);
}

void write_obj(const std::filesystem::path& path, const imaging::Mesh& mesh) {
  std::string out;
  out.reserve(mesh.vertices.size() * 48 + mesh.faces.size() * 24);
  char line[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(line, sizeof line, "v %.9g %.9g %.9g\n", v[0], v[1], v[2]);
    out += line;
  }
  for (const auto& f : mesh.faces) {
    std::snprintf(line, sizeof line, "f %u %u %u\n", f[0] + 1, f[1] + 1,
                  f[2] + 1);
    out += line;
  }
  write_file(path, out);
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<filter::EpochStats>& history) {
  std::string out = "epoch,running_loss,accuracy\n";
  char line[96];
  for (const filter::EpochStats& e : history) {
    std::snprintf(line, sizeof line, "%zu,%.9g,%.9g\n", e.epoch, e.running_loss,
                  e.accuracy);
    out += line;
  }
  write_file(path, out);
}

namespace {

using nlohmann::json;

SphericalPos parse_position(const json& j, const std::string& where) {
  SphericalPos p;
  if (!j.contains("r")) throw IoError(where + ": missing r");
  p.r_m = j.at("r").get<double>();
  p.theta_rad = deg_to_rad(j.value("theta_deg", 0.0));
  p.phi_rad = deg_to_rad(j.value("phi_deg", 0.0));
  return p;
}

ReflectorTag parse_tag(const json& j, const std::string& where) {
  std::string tag = j.value("tag", "target");
  if (tag == "target") return ReflectorTag::Target;
  if (tag == "background") return ReflectorTag::Background;
  if (tag == "ghost") return ReflectorTag::Ghost;
  throw IoError(where + ": unknown tag '" + tag + "'");
}

}  // namespace

SceneFile load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("scene parse error in " + path.string() + ": " + e.what());
  }

  SceneFile scene;
  try {
    for (const json& jr : j.value("reflectors", json::array())) {
      Reflector r;
      r.pos = parse_position(jr, "reflector");
      r.amplitude = jr.value("amplitude", 1.0);
      r.tag = parse_tag(jr, "reflector");
      scene.reflectors.push_back(r);
    }
    for (const json& jt : j.value("trajectories", json::array())) {
      Trajectory t;
      t.amplitude = jt.value("amplitude", 1.0);
      t.tag = parse_tag(jt, "trajectory");
      if (!jt.contains("waypoints")) {
        throw IoError("trajectory: missing waypoints");
      }
      for (const json& jw : jt.at("waypoints")) {
        Waypoint w;
        if (!jw.contains("epoch")) throw IoError("waypoint: missing epoch");
        w.epoch = jw.at("epoch").get<std::int64_t>();
        w.pos = parse_position(jw, "waypoint");
        t.waypoints.push_back(w);
      }
      scene.trajectories.push_back(t);
    }
  } catch (const json::exception& e) {
    throw IoError("scene field error in " + path.string() + ": " + e.what());
  }
  return scene;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path.string());
  std::vector<ManifestEntry> entries;
  std::string line;
  std::filesystem::path base = path.parent_path();
  while (std::getline(in, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::string file;
    int label = 0;
    if (!(ss >> file)) continue;  // blank or comment line
    if (!(ss >> label) || (label != 0 && label != 1)) {
      throw IoError("manifest line needs '<path> <0|1>': " + line);
    }
    ManifestEntry e;
    std::filesystem::path p(file);
    e.grid_path = p.is_absolute() ? p : base / p;
    e.label = label;
    entries.push_back(e);
  }
  if (entries.empty()) throw IoError("manifest is empty: " + path.string());
  return entries;
}

}  // namespace rvox::io
