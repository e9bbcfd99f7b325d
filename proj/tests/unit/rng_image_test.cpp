#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>

#include "cellstream/image.hpp"
#include "cellstream/rng.hpp"
#include "doctest.h"

using namespace cellstream;

TEST_CASE("derived streams are stable and distinct") {
  CHECK(derive_seed(42, 0) == derive_seed(42, 0));
  CHECK(derive_seed(42, 0) != derive_seed(42, 1));
  CHECK(derive_seed(42, 0) != derive_seed(43, 0));

  // No collisions over a realistic key range.
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 10000; ++k) seen.insert(derive_seed(7, k));
  CHECK(seen.size() == 10000);
}

TEST_CASE("rademacher draws are +-1 and roughly balanced") {
  Rng rng(1);
  int pos = 0, n = 100000;
  for (int i = 0; i < n; ++i) {
    int v = rademacher(rng);
    CHECK((v == 1 || v == -1));
    if (v == 1) ++pos;
  }
  // 4-sigma band around n/2 for a fair coin.
  double sigma = std::sqrt(0.25 * n);
  CHECK(std::abs(pos - n / 2.0) < 4.0 * sigma);
}

TEST_CASE("fnv1a64 matches reference vectors and chains") {
  // Reference digests of the standard 64-bit FNV-1a parameters.
  CHECK(fnv1a64({}) == 0xcbf29ce484222325ull);
  const std::uint8_t a[] = {'a'};
  CHECK(fnv1a64({a, 1}) == 0xaf63dc4c8601ec8cull);
  const std::uint8_t foobar[] = {'f', 'o', 'o', 'b', 'a', 'r'};
  CHECK(fnv1a64({foobar, 6}) == 0x85944171f73967e8ull);

  // Hashing in two chunks equals hashing at once.
  std::uint64_t h1 = fnv1a64({foobar, 3});
  CHECK(fnv1a64({foobar + 3, 3}, h1) == fnv1a64({foobar, 6}));
}

TEST_CASE("image indexing is channel-major") {
  Image img(3, 4, 5);
  img.at(2, 3, 4) = 77;
  CHECK(img.data[(2 * 4 + 3) * 5 + 4] == 77);
  CHECK(img.same_shape(Image(3, 4, 5)));
  CHECK_FALSE(img.same_shape(Image(3, 5, 4)));
}

TEST_CASE("video consistency check rejects ragged frames") {
  Video v;
  v.frames.emplace_back(3, 4, 4);
  v.frames.emplace_back(3, 4, 4);
  CHECK_NOTHROW(v.check_consistent());
  v.frames.emplace_back(3, 5, 4);
  CHECK_THROWS_AS(v.check_consistent(), std::invalid_argument);
}

TEST_CASE("png writer emits a decodable signature and rejects bad input") {
  Image img(3, 2, 2);
  for (std::size_t i = 0; i < img.data.size(); ++i)
    img.data[i] = static_cast<std::uint8_t>(i * 20);

  auto path = std::filesystem::temp_directory_path() / "cellstream_test.png";
  write_png_rgb(path, img);
  std::ifstream in(path, std::ios::binary);
  std::uint8_t sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  const std::uint8_t expected[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  for (int i = 0; i < 8; ++i) CHECK(sig[i] == expected[i]);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(write_png_rgb(path, Image(1, 2, 2)), std::invalid_argument);
}
