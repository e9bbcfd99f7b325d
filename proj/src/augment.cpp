#include "cellstream/augment.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace cellstream::augment {

void CropSpec::validate() const {
  if (!(scale_min > 0.0) || scale_min > scale_max || scale_max > 1.0)
    throw std::invalid_argument("crop scale range must satisfy 0 < min <= max <= 1");
  if (!(aspect_min > 0.0) || aspect_min > aspect_max)
    throw std::invalid_argument("aspect range must satisfy 0 < min <= max");
  if (out_size < 8) throw std::invalid_argument("crop out_size must be >= 8");
}

void ClipSpec::validate() const {
  if (clip_len < 1) throw std::invalid_argument("clip_len must be >= 1");
}

CropRect choose_crop(Rng& rng, int width, int height, const CropSpec& spec) {
  spec.validate();
  if (width < 8 || height < 8)
    throw std::invalid_argument("images smaller than 8x8 cannot be cropped");

  double area = static_cast<double>(width) * static_cast<double>(height);
  std::uniform_real_distribution<double> uscale(spec.scale_min, spec.scale_max);
  std::uniform_real_distribution<double> ulog(std::log(spec.aspect_min),
                                              std::log(spec.aspect_max));
  // Integer rounding of w and h can push w*h slightly outside the sampled
  // area; an attempt only counts if the realized area still sits within the
  // configured scale range.
  double lo = spec.scale_min * area - 1e-9;
  double hi = spec.scale_max * area + 1e-9;
  for (int attempt = 0; attempt < 10; ++attempt) {
    double target = uscale(rng) * area;
    double ar = std::exp(ulog(rng));
    int w = static_cast<int>(std::lround(std::sqrt(target * ar)));
    int h = static_cast<int>(std::lround(std::sqrt(target / ar)));
    if (w < 1 || h < 1 || w > width || h > height) continue;
    double realized = static_cast<double>(w) * static_cast<double>(h);
    if (realized < lo || realized > hi) continue;
    CropRect rect;
    rect.w = w;
    rect.h = h;
    std::uniform_int_distribution<int> ux(0, width - w);
    std::uniform_int_distribution<int> uy(0, height - h);
    rect.x = ux(rng);
    rect.y = uy(rng);
    return rect;
  }
  // Fallback: centered square at the top of the scale range.
  int side = static_cast<int>(std::floor(std::sqrt(spec.scale_max * area)));
  side = std::clamp(side, 1, std::min(width, height));
  CropRect rect;
  rect.w = side;
  rect.h = side;
  rect.x = (width - side) / 2;
  rect.y = (height - side) / 2;
  return rect;
}

Image crop_resize(const Image& img, const CropRect& rect, int out_size) {
  if (out_size < 1) throw std::invalid_argument("out_size must be >= 1");
  if (rect.w < 1 || rect.h < 1 || rect.x < 0 || rect.y < 0 ||
      rect.x + rect.w > img.width || rect.y + rect.h > img.height)
    throw std::invalid_argument("crop rectangle out of bounds");

  Image out(img.channels, out_size, out_size);
  double sx = static_cast<double>(rect.w) / out_size;
  double sy = static_cast<double>(rect.h) / out_size;
  for (int oy = 0; oy < out_size; ++oy) {
    // Half-pixel centers: destination pixel d samples source (d+0.5)*s-0.5.
    double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, rect.h - 1.0);
    int y0 = static_cast<int>(std::floor(fy));
    int y1 = std::min(y0 + 1, rect.h - 1);
    double wy = fy - y0;
    for (int ox = 0; ox < out_size; ++ox) {
      double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, rect.w - 1.0);
      int x0 = static_cast<int>(std::floor(fx));
      int x1 = std::min(x0 + 1, rect.w - 1);
      double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        double v00 = img.at(c, rect.y + y0, rect.x + x0);
        double v01 = img.at(c, rect.y + y0, rect.x + x1);
        double v10 = img.at(c, rect.y + y1, rect.x + x0);
        double v11 = img.at(c, rect.y + y1, rect.x + x1);
        double top = v00 + wx * (v01 - v00);
        double bot = v10 + wx * (v11 - v10);
        double v = top + wy * (bot - top);
        out.at(c, oy, ox) = static_cast<std::uint8_t>(
            std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

Image random_resized_crop(const Image& img, const CropSpec& spec, Rng& rng) {
  CropRect rect = choose_crop(rng, img.width, img.height, spec);
  return crop_resize(img, rect, spec.out_size);
}

int choose_clip_start(Rng& rng, int n_frames, const ClipSpec& spec) {
  spec.validate();
  if (spec.clip_len > n_frames)
    throw std::invalid_argument("clip_len " + std::to_string(spec.clip_len) +
                                " exceeds video length " + std::to_string(n_frames));
  std::uniform_int_distribution<int> u(0, n_frames - spec.clip_len);
  return u(rng);
}

Video sample_clip(const Video& video, const ClipSpec& spec, Rng& rng) {
  video.check_consistent();
  int start = choose_clip_start(rng, video.n_frames(), spec);
  Video out;
  out.frames.assign(video.frames.begin() + start,
                    video.frames.begin() + start + spec.clip_len);
  return out;
}

}  // namespace cellstream::augment
