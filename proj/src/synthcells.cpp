#include "cellstream/synthcells.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cellstream::synthcells {

namespace {

// Stream key for the split shuffle, distinct from any video index.
constexpr std::uint64_t kSplitStreamKey = 0xffffffff00000001ull;

std::uint8_t round_to_u8(double v) {
  double r = std::floor(v + 0.5);
  if (r < 0.0) r = 0.0;
  if (r > 255.0) r = 255.0;
  return static_cast<std::uint8_t>(r);
}

}  // namespace

std::string to_string(Task t) { return t == Task::RBC ? "rbc" : "wbc"; }

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  throw std::logic_error("unknown split");
}

std::string to_string(DegradationCategory c) {
  switch (c) {
    case DegradationCategory::Clear: return "clear";
    case DegradationCategory::Blurred: return "blurred";
    case DegradationCategory::Noisy: return "noisy";
    case DegradationCategory::BlurredNoisy: return "blurred_noisy";
  }
  throw std::logic_error("unknown degradation category");
}

Task task_from_string(const std::string& s) {
  if (s == "rbc") return Task::RBC;
  if (s == "wbc") return Task::WBC;
  throw std::invalid_argument("unknown task '" + s + "' (expected rbc or wbc)");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "val") return Split::Val;
  if (s == "test") return Split::Test;
  throw std::invalid_argument("unknown split '" + s + "'");
}

DegradationCategory category_from_string(const std::string& s) {
  if (s == "clear") return DegradationCategory::Clear;
  if (s == "blurred") return DegradationCategory::Blurred;
  if (s == "noisy") return DegradationCategory::Noisy;
  if (s == "blurred_noisy") return DegradationCategory::BlurredNoisy;
  throw std::invalid_argument("unknown degradation category '" + s + "'");
}

void PopulationSpec::validate() const {
  if (!(rbc_mean > 0.0) || !(wbc_mean > 0.0))
    throw std::invalid_argument("population means must be positive");
  if (rbc_std < 0.0 || wbc_std < 0.0)
    throw std::invalid_argument("population std deviations must be >= 0");
}

void DegradationSpec::validate() const {
  if (blurred()) {
    if (blur_radius < 1 || blur_radius > 10)
      throw std::invalid_argument("blur radius must be in [1,10] when blurring");
  } else if (blur_radius != 0) {
    throw std::invalid_argument("blur radius must be 0 for a non-blurred category");
  }
  if (noisy()) {
    if (!(noise_sigma > 0.0))
      throw std::invalid_argument("noise sigma must be > 0 when noisy");
  } else if (noise_sigma != 0.0) {
    throw std::invalid_argument("noise sigma must be 0 for a noise-free category");
  }
}

void DegradationModel::validate() const {
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("category probabilities must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("category probabilities must sum to 1");
  if (!(sigma_min > 0.0) || !(sigma_max >= sigma_min))
    throw std::invalid_argument("noise sigma range must satisfy 0 < min <= max");
}

void Palette::validate() const {
  for (const CellStyle* s : {&rbc, &wbc}) {
    if (!(s->radius > 0.0))
      throw std::invalid_argument("cell radius must be positive");
    if (!(s->alpha > 0.0) || s->alpha > 1.0)
      throw std::invalid_argument("cell alpha must be in (0,1]");
  }
}

void GenConfig::validate() const {
  if (n_videos < 1) throw std::invalid_argument("n_videos must be >= 1");
  if (n_frames < 1) throw std::invalid_argument("n_frames must be >= 1");
  if (height < 1 || width < 1)
    throw std::invalid_argument("frame dimensions must be >= 1");
  if (motion_scale < 0.0)
    throw std::invalid_argument("motion_scale must be >= 0");
  if (train_frac < 0.0 || val_frac < 0.0 || train_frac + val_frac > 1.0)
    throw std::invalid_argument("split fractions must be >= 0 and sum to <= 1");
  if (export_png_videos < 0)
    throw std::invalid_argument("export_png_videos must be >= 0");
  population.validate();
  palette.validate();
  degradation.validate();
}

std::size_t DatasetManifest::split_count(Split s) const {
  return split_indices(s).size();
}

std::vector<std::size_t> DatasetManifest::split_indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i)
    if (entries[i].split == s) out.push_back(i);
  return out;
}

std::pair<int, int> sample_population(Rng& rng, const PopulationSpec& spec) {
  spec.validate();
  auto draw = [&rng](double mean, double std_dev) {
    // normal_distribution requires sigma > 0; a zero spread is just the mean.
    double v = mean;
    if (std_dev > 0.0) {
      std::normal_distribution<double> dist(mean, std_dev);
      v = dist(rng);
    }
    long n = std::lround(v);
    return static_cast<int>(std::max(0l, n));
  };
  int rbc = draw(spec.rbc_mean, spec.rbc_std);
  int wbc = draw(spec.wbc_mean, spec.wbc_std);
  return {rbc, wbc};
}

std::pair<int, int> label_counts(int rbc_count, int wbc_count,
                                 const PopulationSpec& spec) {
  return {rbc_count > spec.rbc_mean ? 1 : 0, wbc_count > spec.wbc_mean ? 1 : 0};
}

std::vector<Vec2> init_positions(Rng& rng, int count, int width, int height) {
  if (count < 0) throw std::invalid_argument("cell count must be >= 0");
  if (width < 1 || height < 1)
    throw std::invalid_argument("frame dimensions must be >= 1");
  std::uniform_real_distribution<double> ux(0.0, static_cast<double>(width));
  std::uniform_real_distribution<double> uy(0.0, static_cast<double>(height));
  std::vector<Vec2> out(static_cast<std::size_t>(count));
  for (auto& p : out) {
    p.x = ux(rng);
    p.y = uy(rng);
  }
  return out;
}

void wiener_step(Cell& cell, int frame_index, int n_frames, double motion_scale,
                 Rng& rng) {
  if (n_frames < 1) throw std::invalid_argument("n_frames must be >= 1");
  if (frame_index < 1 || frame_index > n_frames)
    throw std::invalid_argument("frame_index must be in [1, n_frames]");
  if (motion_scale < 0.0)
    throw std::invalid_argument("motion_scale must be >= 0");
  double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n_frames));
  cell.wiener.x += rademacher(rng) * inv_sqrt_n;
  cell.wiener.y += rademacher(rng) * inv_sqrt_n;
  cell.position.x = cell.origin.x + motion_scale * (cell.wiener.x - cell.origin.x);
  cell.position.y = cell.origin.y + motion_scale * (cell.wiener.y - cell.origin.y);
}

Image render_frame(const std::vector<Cell>& cells, int width, int height,
                   const Palette& palette) {
  if (width < 1 || height < 1)
    throw std::invalid_argument("frame dimensions must be >= 1");
  palette.validate();
  Image img(3, height, width);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        img.at(c, y, x) = palette.background[static_cast<std::size_t>(c)];

  for (const Cell& cell : cells) {
    const CellStyle& style = palette.style(cell.kind);
    double r = cell.radius > 0.0 ? cell.radius : style.radius;
    double r2 = r * r;
    int x0 = std::max(0, static_cast<int>(std::floor(cell.position.x - r)));
    int x1 = std::min(width - 1, static_cast<int>(std::ceil(cell.position.x + r)));
    int y0 = std::max(0, static_cast<int>(std::floor(cell.position.y - r)));
    int y1 = std::min(height - 1, static_cast<int>(std::ceil(cell.position.y + r)));
    for (int y = y0; y <= y1; ++y) {
      double dy = y - cell.position.y;
      for (int x = x0; x <= x1; ++x) {
        double dx = x - cell.position.x;
        if (dx * dx + dy * dy > r2) continue;
        for (int c = 0; c < 3; ++c) {
          double cur = img.at(c, y, x);
          double blended = style.alpha * style.color[static_cast<std::size_t>(c)] +
                           (1.0 - style.alpha) * cur;
          img.at(c, y, x) = round_to_u8(blended);
        }
      }
    }
  }
  return img;
}

Image box_blur(const Image& img, int b) {
  if (b < 0 || b > 10)
    throw std::invalid_argument("box blur radius must be in [0,10]");
  if (b == 0) return img;

  int h = img.height;
  int w = img.width;
  int ph = h + 2 * b;
  int pw = w + 2 * b;
  std::uint64_t n = static_cast<std::uint64_t>(2 * b + 1) *
                    static_cast<std::uint64_t>(2 * b + 1);

  Image out(img.channels, h, w);
  // Summed-area table over a clamp-to-edge padded channel; sat has an extra
  // leading row/column of zeros.
  std::vector<std::uint64_t> sat(static_cast<std::size_t>(ph + 1) *
                                 static_cast<std::size_t>(pw + 1));
  auto sat_at = [&](int y, int x) -> std::uint64_t& {
    return sat[static_cast<std::size_t>(y) * static_cast<std::size_t>(pw + 1) +
               static_cast<std::size_t>(x)];
  };
  for (int c = 0; c < img.channels; ++c) {
    for (int y = 0; y < ph; ++y) {
      int sy = std::clamp(y - b, 0, h - 1);
      for (int x = 0; x < pw; ++x) {
        int sx = std::clamp(x - b, 0, w - 1);
        sat_at(y + 1, x + 1) = img.at(c, sy, sx) + sat_at(y, x + 1) +
                               sat_at(y + 1, x) - sat_at(y, x);
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // Window [y, y+2b] x [x, x+2b] in padded coordinates.
        std::uint64_t sum = sat_at(y + 2 * b + 1, x + 2 * b + 1) -
                            sat_at(y, x + 2 * b + 1) -
                            sat_at(y + 2 * b + 1, x) + sat_at(y, x);
        out.at(c, y, x) = static_cast<std::uint8_t>((2 * sum + n) / (2 * n));
      }
    }
  }
  return out;
}

Image add_noise(const Image& img, double sigma, Rng& rng) {
  if (sigma < 0.0) throw std::invalid_argument("noise sigma must be >= 0");
  if (sigma == 0.0) return img;
  Image out = img;
  std::normal_distribution<double> dist(0.0, sigma);
  for (auto& v : out.data) v = round_to_u8(v + dist(rng));
  return out;
}

DegradationSpec assign_degradation(Rng& rng, const DegradationModel& model) {
  model.validate();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double u = u01(rng);
  double cum = 0.0;
  DegradationCategory cat = DegradationCategory::BlurredNoisy;
  for (int i = 0; i < 4; ++i) {
    cum += model.probs[static_cast<std::size_t>(i)];
    if (u < cum) {
      cat = static_cast<DegradationCategory>(i);
      break;
    }
  }
  DegradationSpec spec;
  spec.category = cat;
  if (spec.blurred()) {
    std::uniform_int_distribution<int> ub(1, 10);
    spec.blur_radius = ub(rng);
  }
  if (spec.noisy()) {
    std::uniform_real_distribution<double> us(model.sigma_min, model.sigma_max);
    spec.noise_sigma = us(rng);
  }
  return spec;
}

VideoSample generate_video(Rng& rng, const GenConfig& config) {
  config.validate();

  VideoSample sample;
  auto [rbc, wbc] = sample_population(rng, config.population);
  sample.rbc_count = rbc;
  sample.wbc_count = wbc;
  auto [rbc_high, wbc_high] = label_counts(rbc, wbc, config.population);
  sample.rbc_high = rbc_high;
  sample.wbc_high = wbc_high;

  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(rbc) + static_cast<std::size_t>(wbc));
  auto add_cells = [&](CellKind kind, int count, const CellStyle& style) {
    std::vector<Vec2> pos = init_positions(rng, count, config.width, config.height);
    for (const Vec2& p : pos) {
      Cell c;
      c.kind = kind;
      c.origin = p;
      c.wiener = p;
      c.position = p;
      c.radius = style.radius;
      cells.push_back(c);
    }
  };
  add_cells(CellKind::RBC, rbc, config.palette.rbc);
  add_cells(CellKind::WBC, wbc, config.palette.wbc);

  sample.degradation = assign_degradation(rng, config.degradation);

  sample.frames.frames.reserve(static_cast<std::size_t>(config.n_frames));
  for (int i = 1; i <= config.n_frames; ++i) {
    for (Cell& c : cells)
      wiener_step(c, i, config.n_frames, config.motion_scale, rng);
    Image frame = render_frame(cells, config.width, config.height, config.palette);
    if (sample.degradation.blurred())
      frame = box_blur(frame, sample.degradation.blur_radius);
    if (sample.degradation.noisy())
      frame = add_noise(frame, sample.degradation.noise_sigma, rng);
    sample.frames.frames.push_back(std::move(frame));
  }
  return sample;
}

VideoSample generate_video(std::uint64_t video_seed, const GenConfig& config) {
  Rng rng(video_seed);
  VideoSample sample = generate_video(rng, config);
  sample.seed = video_seed;
  return sample;
}

DatasetManifest generate_dataset(const GenConfig& config,
                                 const std::filesystem::path& out_dir) {
  config.validate();
  std::filesystem::create_directories(out_dir);

  DatasetManifest manifest;
  manifest.config = config;
  manifest.entries.resize(static_cast<std::size_t>(config.n_videos));

  for (int i = 0; i < config.n_videos; ++i) {
    std::uint64_t video_seed = derive_seed(config.seed, static_cast<std::uint64_t>(i));
    VideoSample sample = generate_video(video_seed, config);

    char name[32];
    std::snprintf(name, sizeof(name), "sample_%05d.bin", i);
    write_video_file(out_dir / name, sample.frames);

    ManifestEntry& e = manifest.entries[static_cast<std::size_t>(i)];
    e.path = name;
    e.rbc_count = sample.rbc_count;
    e.wbc_count = sample.wbc_count;
    e.rbc_high = sample.rbc_high;
    e.wbc_high = sample.wbc_high;
    e.degradation = sample.degradation;
    e.l_rbc = std::abs(sample.rbc_count - config.population.rbc_mean);
    e.l_wbc = std::abs(sample.wbc_count - config.population.wbc_mean);

    if (i < config.export_png_videos) {
      char dir_name[32];
      std::snprintf(dir_name, sizeof(dir_name), "png_%05d", i);
      export_png_frames(out_dir / dir_name, sample.frames);
    }
  }

  // Split assignment: shuffle indices with a dedicated stream, then carve
  // floor(train_frac*n) / floor(val_frac*n) / remainder.
  std::vector<std::size_t> order(manifest.entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng = make_stream(config.seed, kSplitStreamKey);
  std::shuffle(order.begin(), order.end(), split_rng);

  auto n = static_cast<double>(order.size());
  std::size_t n_train = static_cast<std::size_t>(std::floor(config.train_frac * n));
  std::size_t n_val = static_cast<std::size_t>(std::floor(config.val_frac * n));
  for (std::size_t k = 0; k < order.size(); ++k) {
    Split s = k < n_train              ? Split::Train
              : k < n_train + n_val    ? Split::Val
                                       : Split::Test;
    manifest.entries[order[k]].split = s;
  }

  save_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

void export_png_frames(const std::filesystem::path& dir, const Video& video) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < video.frames.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%04d.png", static_cast<int>(i));
    write_png_rgb(dir / name, video.frames[i]);
  }
}

}  // namespace cellstream::synthcells
