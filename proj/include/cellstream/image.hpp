#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace cellstream {

// 8-bit image in channel-major [c][y][x] layout.
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int c, int h, int w, std::uint8_t fill = 0)
      : channels(c),
        height(h),
        width(w),
        data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::uint8_t& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  std::uint8_t at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  bool same_shape(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

// A stack of equally shaped frames.
struct Video {
  std::vector<Image> frames;

  int n_frames() const { return static_cast<int>(frames.size()); }
  const Image& frame(int i) const { return frames.at(i); }

  void check_consistent() const {
    for (const auto& f : frames) {
      if (!f.same_shape(frames.front()))
        throw std::invalid_argument("video frames differ in shape");
    }
  }
};

// FNV-1a, chainable via the `h` argument.
inline constexpr std::uint64_t kFnvBasis = 0xcbf29ce484222325ull;
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes,
                      std::uint64_t h = kFnvBasis);

// Minimal RGB PNG emitter (8-bit, color type 2). For human inspection only;
// the dataset itself is stored as raw tensors.
void write_png_rgb(const std::filesystem::path& path, const Image& img);

}  // namespace cellstream
