#include <cmath>
#include <set>
#include <vector>

#include "cellstream/augment.hpp"
#include "doctest.h"

using namespace cellstream;
using namespace cellstream::augment;

namespace {

Image random_image(Rng& rng, int c, int h, int w) {
  Image img(c, h, w);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng() & 0xff);
  return img;
}

}  // namespace

TEST_CASE("crop rectangles respect the area and bounds contracts") {
  SUBCASE("full-frame spec is the identity rectangle") {
    CropSpec spec;
    spec.scale_min = spec.scale_max = 1.0;
    spec.aspect_min = spec.aspect_max = 1.0;
    spec.out_size = 16;
    Rng rng(41);
    CropRect r = choose_crop(rng, 16, 16, spec);
    CHECK(r.x == 0);
    CHECK(r.y == 0);
    CHECK(r.w == 16);
    CHECK(r.h == 16);
  }

  SUBCASE("area fraction of a 128x128 frame stays in [0.10, 0.20]") {
    CropSpec spec;  // defaults
    Rng rng(42);
    for (int trial = 0; trial < 2000; ++trial) {
      CropRect r = choose_crop(rng, 128, 128, spec);
      int area = r.w * r.h;
      CHECK(area >= 1638);  // floor(0.10 * 16384) rounded to the contract
      CHECK(area <= 3276);  // ceil-bounded by 0.20 * 16384
      CHECK(r.x >= 0);
      CHECK(r.y >= 0);
      CHECK(r.x + r.w <= 128);
      CHECK(r.y + r.h <= 128);
      CHECK(r.w >= 1);
      CHECK(r.h >= 1);
    }
  }

  SUBCASE("non-square frames stay in bounds") {
    CropSpec spec;
    Rng rng(43);
    for (int trial = 0; trial < 500; ++trial) {
      CropRect r = choose_crop(rng, 40, 96, spec);
      CHECK(r.x + r.w <= 40);
      CHECK(r.y + r.h <= 96);
      double frac = static_cast<double>(r.w * r.h) / (40.0 * 96.0);
      CHECK(frac >= 0.10 - 1e-3);
      CHECK(frac <= 0.20 + 1e-3);
    }
  }

  SUBCASE("deterministic given the seed") {
    CropSpec spec;
    Rng a(44), b(44);
    for (int trial = 0; trial < 50; ++trial) {
      CropRect ra = choose_crop(a, 128, 128, spec);
      CropRect rb = choose_crop(b, 128, 128, spec);
      CHECK(ra.x == rb.x);
      CHECK(ra.y == rb.y);
      CHECK(ra.w == rb.w);
      CHECK(ra.h == rb.h);
    }
  }

  SUBCASE("tiny images are rejected") {
    CropSpec spec;
    Rng rng(45);
    CHECK_THROWS_AS(choose_crop(rng, 7, 32, spec), std::invalid_argument);
    CHECK_THROWS_AS(choose_crop(rng, 32, 7, spec), std::invalid_argument);
  }

  SUBCASE("spec validation") {
    CropSpec bad;
    bad.scale_min = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = CropSpec{};
    bad.scale_max = 1.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = CropSpec{};
    bad.scale_min = 0.3;
    bad.scale_max = 0.2;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = CropSpec{};
    bad.out_size = 4;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}

TEST_CASE("crop-resize interpolates bilinearly and preserves shape") {
  SUBCASE("identity when the rectangle is the frame and sizes match") {
    Rng rng(46);
    Image img = random_image(rng, 3, 24, 24);
    Image out = crop_resize(img, {0, 0, 24, 24}, 24);
    CHECK(out.data == img.data);
  }

  SUBCASE("constant image stays constant under any resize") {
    Image img(3, 20, 28, 173);
    Image out = crop_resize(img, {3, 2, 17, 13}, 32);
    CHECK(out.channels == 3);
    CHECK(out.height == 32);
    CHECK(out.width == 32);
    for (auto v : out.data) CHECK(v == 173);
  }

  SUBCASE("2x upscale of a 2x2 checker matches hand-computed bilinear") {
    // One channel, pixels: 0 100 / 200 50, resized 2x2 -> 4x4 with
    // half-pixel centers: src coordinate of out pixel i is (i+0.5)/2 - 0.5.
    Image img(1, 2, 2);
    img.at(0, 0, 0) = 0;
    img.at(0, 0, 1) = 100;
    img.at(0, 1, 0) = 200;
    img.at(0, 1, 1) = 50;
    Image out = crop_resize(img, {0, 0, 2, 2}, 4);
    auto bilinear = [&](double sy, double sx) {
      sy = std::clamp(sy, 0.0, 1.0);
      sx = std::clamp(sx, 0.0, 1.0);
      int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
      int y1 = std::min(y0 + 1, 1), x1 = std::min(x0 + 1, 1);
      double fy = sy - y0, fx = sx - x0;
      double v = (1 - fy) * ((1 - fx) * img.at(0, y0, x0) + fx * img.at(0, y0, x1)) +
                 fy * ((1 - fx) * img.at(0, y1, x0) + fx * img.at(0, y1, x1));
      return static_cast<std::uint8_t>(std::floor(v + 0.5));
    };
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x)
        CHECK(out.at(0, y, x) ==
              bilinear((y + 0.5) / 2.0 - 0.5, (x + 0.5) / 2.0 - 0.5));
  }

  SUBCASE("rejects rectangles outside the image") {
    Image img(3, 16, 16, 0);
    CHECK_THROWS_AS(crop_resize(img, {-1, 0, 8, 8}, 8), std::invalid_argument);
    CHECK_THROWS_AS(crop_resize(img, {10, 10, 8, 8}, 8), std::invalid_argument);
    CHECK_THROWS_AS(crop_resize(img, {0, 0, 0, 8}, 8), std::invalid_argument);
  }
}

TEST_CASE("random resized crop produces the advertised output shape") {
  CropSpec spec;  // out_size 32
  Rng rng(47);
  Image img = random_image(rng, 3, 128, 128);
  for (int trial = 0; trial < 20; ++trial) {
    Image out = random_resized_crop(img, spec, rng);
    CHECK(out.channels == 3);
    CHECK(out.height == 32);
    CHECK(out.width == 32);
  }
  // Determinism end to end.
  Rng a(48), b(48);
  CHECK(random_resized_crop(img, spec, a).data ==
        random_resized_crop(img, spec, b).data);
}

TEST_CASE("clip sampling takes consecutive frames with uniform start") {
  SUBCASE("whole-video clip starts at 0") {
    ClipSpec spec;
    spec.clip_len = 5;
    Rng rng(49);
    CHECK(choose_clip_start(rng, 5, spec) == 0);
  }

  SUBCASE("every legal start occurs over many draws") {
    ClipSpec spec;  // clip_len 9
    Rng rng(50);
    std::set<int> seen;
    for (int i = 0; i < 10000; ++i) {
      int s = choose_clip_start(rng, 100, spec);
      CHECK(s >= 0);
      CHECK(s <= 91);
      seen.insert(s);
    }
    CHECK(seen.size() == 92);
  }

  SUBCASE("frames are contiguous and shared across the clip") {
    Rng rng(51);
    Video video;
    for (int i = 0; i < 12; ++i) {
      Image f(3, 8, 8, static_cast<std::uint8_t>(i));
      video.frames.push_back(f);
    }
    ClipSpec spec;
    spec.clip_len = 4;
    Video clip = sample_clip(video, spec, rng);
    REQUIRE(clip.n_frames() == 4);
    int start = clip.frame(0).at(0, 0, 0);
    for (int i = 0; i < 4; ++i)
      CHECK(clip.frame(i).at(0, 0, 0) == start + i);
  }

  SUBCASE("single-frame clips supported") {
    Rng rng(52);
    Video video;
    video.frames.emplace_back(3, 8, 8, 7);
    ClipSpec spec;
    spec.clip_len = 1;
    Video clip = sample_clip(video, spec, rng);
    CHECK(clip.n_frames() == 1);
  }

  SUBCASE("clip longer than the video is rejected") {
    Rng rng(53);
    Video video;
    video.frames.emplace_back(3, 8, 8, 0);
    ClipSpec spec;
    spec.clip_len = 2;
    CHECK_THROWS_AS(static_cast<void>(sample_clip(video, spec, rng)),
                    std::invalid_argument);
    ClipSpec bad;
    bad.clip_len = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }
}
