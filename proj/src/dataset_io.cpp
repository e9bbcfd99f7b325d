#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellstream/image.hpp"
#include "cellstream/synthcells.hpp"
#include "json.hpp"

namespace cellstream::synthcells {

namespace {

constexpr std::array<char, 4> kVideoMagic{'C', 'S', 'V', '1'};

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<unsigned char, 4> b{
      static_cast<unsigned char>(v & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 24) & 0xff),
  };
  os.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32(std::istream& is, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4))
    throw std::runtime_error("truncated video file header: " + path.string());
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

struct VideoHeader {
  std::uint32_t n_frames = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
};

VideoHeader read_header(std::istream& is, const std::filesystem::path& path) {
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || magic != kVideoMagic)
    throw std::runtime_error("not a video sample file: " + path.string());
  VideoHeader h;
  h.n_frames = get_u32(is, path);
  h.height = get_u32(is, path);
  h.width = get_u32(is, path);
  if (h.n_frames == 0 || h.height == 0 || h.width == 0)
    throw std::runtime_error("video file has empty dimensions: " + path.string());
  return h;
}

using nlohmann::json;

json degradation_to_json(const DegradationSpec& d) {
  return json{{"category", to_string(d.category)},
              {"blur_radius", d.blur_radius},
              {"noise_sigma", d.noise_sigma}};
}

DegradationSpec degradation_from_json(const json& j) {
  DegradationSpec d;
  d.category = category_from_string(j.at("category").get<std::string>());
  d.blur_radius = j.at("blur_radius").get<int>();
  d.noise_sigma = j.at("noise_sigma").get<double>();
  return d;
}

json config_to_json(const GenConfig& c) {
  return json{
      {"n_videos", c.n_videos},
      {"n_frames", c.n_frames},
      {"height", c.height},
      {"width", c.width},
      {"population",
       {{"rbc_mean", c.population.rbc_mean},
        {"rbc_std", c.population.rbc_std},
        {"wbc_mean", c.population.wbc_mean},
        {"wbc_std", c.population.wbc_std}}},
      {"motion_scale", c.motion_scale},
      {"palette",
       {{"background", c.palette.background},
        {"rbc",
         {{"radius", c.palette.rbc.radius},
          {"color", c.palette.rbc.color},
          {"alpha", c.palette.rbc.alpha}}},
        {"wbc",
         {{"radius", c.palette.wbc.radius},
          {"color", c.palette.wbc.color},
          {"alpha", c.palette.wbc.alpha}}}}},
      {"degradation",
       {{"probs", c.degradation.probs},
        {"sigma_min", c.degradation.sigma_min},
        {"sigma_max", c.degradation.sigma_max}}},
      {"train_frac", c.train_frac},
      {"val_frac", c.val_frac},
      {"seed", c.seed},
      {"export_png_videos", c.export_png_videos},
  };
}

GenConfig config_from_json(const json& j) {
  GenConfig c;
  c.n_videos = j.at("n_videos").get<int>();
  c.n_frames = j.at("n_frames").get<int>();
  c.height = j.at("height").get<int>();
  c.width = j.at("width").get<int>();
  const json& pop = j.at("population");
  c.population.rbc_mean = pop.at("rbc_mean").get<double>();
  c.population.rbc_std = pop.at("rbc_std").get<double>();
  c.population.wbc_mean = pop.at("wbc_mean").get<double>();
  c.population.wbc_std = pop.at("wbc_std").get<double>();
  c.motion_scale = j.at("motion_scale").get<double>();
  const json& pal = j.at("palette");
  c.palette.background = pal.at("background").get<std::array<std::uint8_t, 3>>();
  auto style_from = [](const json& s) {
    CellStyle st;
    st.radius = s.at("radius").get<double>();
    st.color = s.at("color").get<std::array<std::uint8_t, 3>>();
    st.alpha = s.at("alpha").get<double>();
    return st;
  };
  c.palette.rbc = style_from(pal.at("rbc"));
  c.palette.wbc = style_from(pal.at("wbc"));
  const json& deg = j.at("degradation");
  c.degradation.probs = deg.at("probs").get<std::array<double, 4>>();
  c.degradation.sigma_min = deg.at("sigma_min").get<double>();
  c.degradation.sigma_max = deg.at("sigma_max").get<double>();
  c.train_frac = j.at("train_frac").get<double>();
  c.val_frac = j.at("val_frac").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.export_png_videos = j.at("export_png_videos").get<int>();
  return c;
}

json entry_to_json(const ManifestEntry& e) {
  json j{{"path", e.path},
         {"rbc_count", e.rbc_count},
         {"wbc_count", e.wbc_count},
         {"rbc_high", e.rbc_high},
         {"wbc_high", e.wbc_high},
         {"degradation", degradation_to_json(e.degradation)},
         {"split", to_string(e.split)}};
  // NaN means the feature was never computed; JSON has no NaN so omit it.
  if (!std::isnan(e.l_rbc)) j["l_rbc"] = e.l_rbc;
  if (!std::isnan(e.l_wbc)) j["l_wbc"] = e.l_wbc;
  return j;
}

ManifestEntry entry_from_json(const json& j) {
  ManifestEntry e;
  e.path = j.at("path").get<std::string>();
  e.rbc_count = j.at("rbc_count").get<int>();
  e.wbc_count = j.at("wbc_count").get<int>();
  e.rbc_high = j.at("rbc_high").get<int>();
  e.wbc_high = j.at("wbc_high").get<int>();
  e.degradation = degradation_from_json(j.at("degradation"));
  e.split = split_from_string(j.at("split").get<std::string>());
  if (j.contains("l_rbc")) e.l_rbc = j.at("l_rbc").get<double>();
  if (j.contains("l_wbc")) e.l_wbc = j.at("l_wbc").get<double>();
  return e;
}

}  // namespace

void write_video_file(const std::filesystem::path& path, const Video& video) {
  video.check_consistent();
  if (video.frames.empty())
    throw std::invalid_argument("refusing to write a video with no frames");
  if (video.frames.front().channels != 3)
    throw std::invalid_argument("video sample files are 3-channel only");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(kVideoMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(video.frames.size()));
  put_u32(out, static_cast<std::uint32_t>(video.frames.front().height));
  put_u32(out, static_cast<std::uint32_t>(video.frames.front().width));
  for (const Image& f : video.frames)
    out.write(reinterpret_cast<const char*>(f.data.data()),
              static_cast<std::streamsize>(f.data.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

Video read_video_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open video file: " + path.string());
  VideoHeader h = read_header(in, path);
  Video v;
  v.frames.reserve(h.n_frames);
  for (std::uint32_t i = 0; i < h.n_frames; ++i) {
    Image img(3, static_cast<int>(h.height), static_cast<int>(h.width));
    if (!in.read(reinterpret_cast<char*>(img.data.data()),
                 static_cast<std::streamsize>(img.data.size())))
      throw std::runtime_error("truncated video file: " + path.string());
    v.frames.push_back(std::move(img));
  }
  return v;
}

Video read_video_frames(const std::filesystem::path& path, int first_frame,
                        int count) {
  if (first_frame < 0 || count < 1)
    throw std::invalid_argument("frame range must have first >= 0 and count >= 1");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open video file: " + path.string());
  VideoHeader h = read_header(in, path);
  if (static_cast<std::uint64_t>(first_frame) + static_cast<std::uint64_t>(count) >
      h.n_frames)
    throw std::invalid_argument("frame range [" + std::to_string(first_frame) +
                                ", +" + std::to_string(count) + ") exceeds " +
                                std::to_string(h.n_frames) + " frames in " +
                                path.string());
  std::uint64_t frame_bytes = 3ull * h.height * h.width;
  in.seekg(static_cast<std::streamoff>(16 + frame_bytes *
                                                static_cast<std::uint64_t>(first_frame)));
  Video v;
  v.frames.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Image img(3, static_cast<int>(h.height), static_cast<int>(h.width));
    if (!in.read(reinterpret_cast<char*>(img.data.data()),
                 static_cast<std::streamsize>(img.data.size())))
      throw std::runtime_error("truncated video file: " + path.string());
    v.frames.push_back(std::move(img));
  }
  return v;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  json j{{"schema_version", m.schema_version},
         {"config", config_to_json(m.config)},
         {"entries", json::array()}};
  for (const ManifestEntry& e : m.entries) j["entries"].push_back(entry_to_json(e));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("malformed manifest " + path.string() + ": " + e.what());
  }
  DatasetManifest m;
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != 1)
    throw std::runtime_error("unsupported manifest schema version " +
                             std::to_string(m.schema_version));
  m.config = config_from_json(j.at("config"));
  for (const json& je : j.at("entries")) m.entries.push_back(entry_from_json(je));
  return m;
}

namespace {

std::uint64_t hash_file(const std::filesystem::path& path, std::uint64_t h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for hashing: " + path.string());
  std::vector<std::uint8_t> buf(1 << 16);
  while (in) {
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    std::streamsize got = in.gcount();
    if (got > 0)
      h = fnv1a64({buf.data(), static_cast<std::size_t>(got)}, h);
  }
  return h;
}

}  // namespace

std::uint64_t dataset_checksum(const std::filesystem::path& dataset_dir,
                               const DatasetManifest& m) {
  std::uint64_t h = hash_file(dataset_dir / "manifest.json", kFnvBasis);
  for (const ManifestEntry& e : m.entries) h = hash_file(dataset_dir / e.path, h);
  return h;
}

}  // namespace cellstream::synthcells
