#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cellstream/image.hpp"
#include "cellstream/rng.hpp"

namespace cellstream::synthcells {

enum class Task { WBC, RBC };
enum class CellKind { RBC, WBC };
enum class Split { Train, Val, Test };
enum class DegradationCategory { Clear, Blurred, Noisy, BlurredNoisy };

std::string to_string(Task t);
std::string to_string(Split s);
std::string to_string(DegradationCategory c);
Task task_from_string(const std::string& s);
Split split_from_string(const std::string& s);
DegradationCategory category_from_string(const std::string& s);

// Per-video cell count distributions.
struct PopulationSpec {
  double rbc_mean = 5000.0;
  double rbc_std = 97.9;
  double wbc_mean = 202.0;
  double wbc_std = 95.5;

  double mean(Task t) const { return t == Task::RBC ? rbc_mean : wbc_mean; }
  double std_dev(Task t) const { return t == Task::RBC ? rbc_std : wbc_std; }
  void validate() const;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// One simulated cell. `wiener` holds the accumulated W value per coordinate
// and starts at `origin`, so (wiener - origin) is the dimensionless walk;
// `position` is the rendered location in pixels.
struct Cell {
  CellKind kind = CellKind::RBC;
  Vec2 origin;
  Vec2 wiener;
  Vec2 position;
  double radius = 1.0;
};

struct DegradationSpec {
  DegradationCategory category = DegradationCategory::Clear;
  int blur_radius = 0;       // b; 0 unless the category blurs
  double noise_sigma = 0.0;  // intensity units on the 0..255 scale

  bool blurred() const {
    return category == DegradationCategory::Blurred ||
           category == DegradationCategory::BlurredNoisy;
  }
  bool noisy() const {
    return category == DegradationCategory::Noisy ||
           category == DegradationCategory::BlurredNoisy;
  }
  void validate() const;
};

// Degradation sampling parameters. Category probabilities are ordered
// (clear, blurred, noisy, blurred+noisy).
struct DegradationModel {
  std::array<double, 4> probs{0.130, 0.304, 0.217, 0.349};
  double sigma_min = 5.0;
  double sigma_max = 25.0;
  void validate() const;
};

struct CellStyle {
  double radius = 1.0;
  std::array<std::uint8_t, 3> color{0, 0, 0};
  double alpha = 1.0;
};

struct Palette {
  std::array<std::uint8_t, 3> background{235, 205, 205};
  CellStyle rbc{2.0, {180, 60, 60}, 0.85};
  CellStyle wbc{4.0, {225, 215, 235}, 0.95};

  const CellStyle& style(CellKind k) const {
    return k == CellKind::RBC ? rbc : wbc;
  }
  void validate() const;
};

struct GenConfig {
  int n_videos = 1150;
  int n_frames = 100;
  int height = 128;
  int width = 128;
  PopulationSpec population;
  double motion_scale = 8.0;  // pixels per unit of W
  Palette palette;
  DegradationModel degradation;
  double train_frac = 0.6;
  double val_frac = 0.2;
  std::uint64_t seed = 42;
  int export_png_videos = 0;  // export the first k videos as PNG frames
  void validate() const;
};

struct VideoSample {
  Video frames;
  int rbc_count = 0;
  int wbc_count = 0;
  DegradationSpec degradation;
  int rbc_high = 0;
  int wbc_high = 0;
  std::uint64_t seed = 0;
};

struct ManifestEntry {
  std::string path;  // relative to the dataset directory
  int rbc_count = 0;
  int wbc_count = 0;
  int rbc_high = 0;
  int wbc_high = 0;
  DegradationSpec degradation;
  // Difficulty features: the blur radius lives in `degradation`, l per task.
  double l_rbc = std::numeric_limits<double>::quiet_NaN();
  double l_wbc = std::numeric_limits<double>::quiet_NaN();
  Split split = Split::Train;

  double l(Task t) const { return t == Task::RBC ? l_rbc : l_wbc; }
  int label(Task t) const { return t == Task::RBC ? rbc_high : wbc_high; }
};

struct DatasetManifest {
  int schema_version = 1;
  GenConfig config;
  std::vector<ManifestEntry> entries;

  std::size_t split_count(Split s) const;
  std::vector<std::size_t> split_indices(Split s) const;
};

// ---- population and labels -------------------------------------------------

// Draws (rbc_count, wbc_count) from the configured normals, rounded to the
// nearest integer and clamped at 0. RBC is drawn before WBC.
std::pair<int, int> sample_population(Rng& rng, const PopulationSpec& spec);

// 'high' label is 1 iff count is strictly above the configured mean.
std::pair<int, int> label_counts(int rbc_count, int wbc_count,
                                 const PopulationSpec& spec);

// ---- motion ------------------------------------------------------------------

// `count` i.i.d. uniform positions over [0,width) x [0,height); x drawn
// before y for each cell.
std::vector<Vec2> init_positions(Rng& rng, int count, int width, int height);

// One W(i/n) update: each coordinate moves by +-1/sqrt(n) (x before y), and
// the rendered position becomes origin + motion_scale * (wiener - origin).
void wiener_step(Cell& cell, int frame_index, int n_frames, double motion_scale,
                 Rng& rng);

// ---- rendering and degradation ----------------------------------------------

// Fills the background and paints each cell as an alpha-blended filled disc
// in the order given (callers put RBCs before WBCs). Pixels are sampled at
// integer coordinates; each draw rounds half-up to 8 bits.
Image render_frame(const std::vector<Cell>& cells, int width, int height,
                   const Palette& palette);

// Mean over the (2b+1)^2 neighborhood per channel with clamp-to-edge and
// round-half-up; b = 0 is the identity.
Image box_blur(const Image& img, int b);

// Adds i.i.d. N(0, sigma^2) per pixel per channel, round-half-up, clamped to
// [0,255]. Pixels are visited in storage order.
Image add_noise(const Image& img, double sigma, Rng& rng);

// Draws a degradation: category by the configured probabilities, then b
// uniform in {1..10} if blurred, then sigma uniform in [sigma_min, sigma_max]
// if noisy.
DegradationSpec assign_degradation(Rng& rng, const DegradationModel& model = {});

// ---- dataset -----------------------------------------------------------------

VideoSample generate_video(Rng& rng, const GenConfig& config);
VideoSample generate_video(std::uint64_t video_seed, const GenConfig& config);

// Generates config.n_videos videos into out_dir (one raw tensor file each),
// assigns the train/val/test split, and writes manifest.json. Video i uses
// the stream derive_seed(config.seed, i).
DatasetManifest generate_dataset(const GenConfig& config,
                                 const std::filesystem::path& out_dir);

// ---- on-disk formats ----------------------------------------------------------

// Sample file: 16-byte header (magic "CSV1", u32 n_frames, u32 height,
// u32 width, little-endian) followed by raw u8 values in
// [frame, channel, row, col] order; channels fixed at 3.
void write_video_file(const std::filesystem::path& path, const Video& video);
Video read_video_file(const std::filesystem::path& path);
Video read_video_frames(const std::filesystem::path& path, int first_frame,
                        int count);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& m);
DatasetManifest load_manifest(const std::filesystem::path& path);

// FNV-1a over manifest.json followed by every sample file in entry order.
std::uint64_t dataset_checksum(const std::filesystem::path& dataset_dir,
                               const DatasetManifest& m);

void export_png_frames(const std::filesystem::path& dir, const Video& video);

}  // namespace cellstream::synthcells
