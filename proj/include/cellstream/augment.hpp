#pragma once

#include "cellstream/image.hpp"
#include "cellstream/rng.hpp"

namespace cellstream::augment {

struct CropSpec {
  double scale_min = 0.10;  // fraction of frame area
  double scale_max = 0.20;
  double aspect_min = 3.0 / 4.0;
  double aspect_max = 4.0 / 3.0;
  int out_size = 32;

  void validate() const;
};

struct ClipSpec {
  int clip_len = 9;
  void validate() const;
};

struct CropRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
};

// Samples a rectangle whose area fraction lies in [scale_min, scale_max] and
// whose aspect ratio is log-uniform in [aspect_min, aspect_max]. Up to 10
// attempts; on failure, a centered square of area scale_max * frame area.
CropRect choose_crop(Rng& rng, int width, int height, const CropSpec& spec);

// Bilinear resize (half-pixel centers) of the rectangle to
// out_size x out_size.
Image crop_resize(const Image& img, const CropRect& rect, int out_size);

Image random_resized_crop(const Image& img, const CropSpec& spec, Rng& rng);

// Uniform start of a clip_len-frame window.
int choose_clip_start(Rng& rng, int n_frames, const ClipSpec& spec);

// `clip_len` consecutive frames starting at a uniform random index.
Video sample_clip(const Video& video, const ClipSpec& spec, Rng& rng);

}  // namespace cellstream::augment
