#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <vector>

#include "cellstream/labelnoise.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace cellstream;
using namespace cellstream::labelnoise;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_bytes(const std::filesystem::path& path,
                 const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

// A well-formed CIFAR-style record with a recognizable pixel pattern.
std::vector<std::uint8_t> make_record(std::uint8_t label, std::uint8_t base) {
  std::vector<std::uint8_t> rec(3073);
  rec[0] = label;
  for (std::size_t i = 1; i < rec.size(); ++i)
    rec[i] = static_cast<std::uint8_t>((base + i) & 0xff);
  return rec;
}

}  // namespace

TEST_CASE("default asymmetric maps") {
  std::vector<int> ten = default_asym_map(10);
  std::vector<int> expected{0, 1, 0, 5, 7, 3, 6, 7, 8, 1};
  CHECK(ten == expected);

  std::vector<int> two = default_asym_map(2);
  CHECK(two == std::vector<int>{0, 0});

  std::vector<int> four = default_asym_map(4);
  CHECK(four == std::vector<int>{0, 0, 2, 3});

  CHECK_THROWS_AS(default_asym_map(1), std::invalid_argument);
}

TEST_CASE("label flipping follows the transition map and rate") {
  std::vector<int> labels;
  for (int i = 0; i < 50000; ++i) labels.push_back(i % 10);

  SUBCASE("rate zero changes nothing") {
    NoiseSpec spec;
    spec.rate = 0.0;
    spec.transition_map = default_asym_map(10);
    FlipResult r = asymmetric_flip(labels, spec);
    CHECK(r.labels == labels);
    CHECK(r.flipped.empty());
  }

  SUBCASE("identity map changes nothing even at rate ~1") {
    NoiseSpec spec;
    spec.rate = 0.999;
    spec.transition_map = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    FlipResult r = asymmetric_flip(labels, spec);
    CHECK(r.labels == labels);
    CHECK(r.flipped.empty());
  }

  SUBCASE("changed fraction matches the binomial expectation") {
    NoiseSpec spec;
    spec.rate = 0.2;
    spec.seed = 101;
    spec.transition_map = default_asym_map(10);
    FlipResult r = asymmetric_flip(labels, spec);
    // Exactly half the classes (9, 2, 4, 3, 5) have non-identity targets and
    // the labels cycle uniformly, so changed ~ Binomial(25000, 0.2).
    double mean = 25000 * 0.2;
    double sigma = std::sqrt(25000 * 0.2 * 0.8);
    CHECK(std::abs(static_cast<double>(r.flipped.size()) - mean) <
          4.0 * sigma);
    // Flipped entries really changed, to the mapped class; the rest did not.
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      bool in_mask = cursor < r.flipped.size() && r.flipped[cursor] == i;
      if (in_mask) {
        CHECK(r.labels[i] ==
              spec.transition_map[static_cast<std::size_t>(labels[i])]);
        CHECK(r.labels[i] != labels[i]);
        ++cursor;
      } else {
        CHECK(r.labels[i] == labels[i]);
      }
    }
    CHECK(cursor == r.flipped.size());
    // Labels stay in range, clean entries dominate at rate < 0.5.
    for (int l : r.labels) {
      CHECK(l >= 0);
      CHECK(l < 10);
    }
    CHECK(r.flipped.size() * 2 < labels.size());
  }

  SUBCASE("same seed reproduces the flip exactly") {
    NoiseSpec spec;
    spec.rate = 0.3;
    spec.seed = 202;
    spec.transition_map = default_asym_map(10);
    FlipResult a = asymmetric_flip(labels, spec);
    FlipResult b = asymmetric_flip(labels, spec);
    CHECK(a.labels == b.labels);
    CHECK(a.flipped == b.flipped);
  }

  SUBCASE("the flip pattern does not depend on the map") {
    // One uniform draw is consumed per sample regardless of the outcome, so
    // the candidate set (u < rate) is identical across maps; a partial map
    // flips exactly the candidates whose class it moves.
    NoiseSpec all;
    all.rate = 0.25;
    all.seed = 303;
    all.transition_map = {1, 2, 3, 4, 5, 6, 7, 8, 9, 0};  // full cycle
    NoiseSpec partial = all;
    partial.transition_map = default_asym_map(10);
    FlipResult full = asymmetric_flip(labels, all);
    FlipResult part = asymmetric_flip(labels, partial);
    std::vector<std::size_t> expected;
    for (std::size_t i : full.flipped) {
      int l = labels[i];
      if (partial.transition_map[static_cast<std::size_t>(l)] != l)
        expected.push_back(i);
    }
    CHECK(part.flipped == expected);
  }

  SUBCASE("invalid specs and labels rejected") {
    NoiseSpec bad;
    bad.rate = 1.0;
    bad.transition_map = default_asym_map(10);
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.rate = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad.rate = 0.2;
    bad.transition_map = {0, 7};  // target outside [0,2)
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    NoiseSpec spec;
    spec.rate = 0.2;
    spec.transition_map = default_asym_map(2);
    std::vector<int> out_of_range{0, 1, 2};
    CHECK_THROWS_WITH_AS(
        static_cast<void>(asymmetric_flip(out_of_range, spec)),
        doctest::Contains("index 2"), std::invalid_argument);
  }
}

TEST_CASE("CIFAR-format files parse to channel-major images") {
  SUBCASE("two-record file with known pixels") {
    auto path = temp_file("cifar_two.bin");
    std::vector<std::uint8_t> bytes = make_record(3, 0);
    std::vector<std::uint8_t> second = make_record(9, 100);
    bytes.insert(bytes.end(), second.begin(), second.end());
    write_bytes(path, bytes);

    LabeledImageSet set = cifar10_load_file(path);
    REQUIRE(set.images.size() == 2);
    CHECK(set.labels == std::vector<int>{3, 9});
    CHECK(set.num_classes == 10);
    // Record layout: label byte, then R, G, B planes of 32x32 row-major.
    // Pixel (c=1, y=2, x=3) lives at payload offset 1024 + 2*32 + 3.
    std::size_t payload = 1024 + 2 * 32 + 3;
    CHECK(set.images[0].at(1, 2, 3) ==
          static_cast<std::uint8_t>((0 + payload + 1) & 0xff));
    CHECK(set.images[1].at(1, 2, 3) ==
          static_cast<std::uint8_t>((100 + payload + 1) & 0xff));
    CHECK(set.images[0].at(0, 0, 0) == 1);  // first payload byte
    std::filesystem::remove(path);
  }

  SUBCASE("truncated file names the exact byte offset") {
    auto path = temp_file("cifar_trunc.bin");
    std::vector<std::uint8_t> bytes = make_record(1, 0);
    bytes.resize(3073 + 100);  // one full record + 100 stray bytes
    write_bytes(path, bytes);
    CHECK_THROWS_WITH_AS(static_cast<void>(cifar10_load_file(path)),
                         doctest::Contains("byte offset 3073"),
                         std::runtime_error);
    std::filesystem::remove(path);
  }

  SUBCASE("invalid label byte names its record offset") {
    auto path = temp_file("cifar_badlabel.bin");
    std::vector<std::uint8_t> bytes = make_record(0, 0);
    std::vector<std::uint8_t> second = make_record(17, 0);
    bytes.insert(bytes.end(), second.begin(), second.end());
    write_bytes(path, bytes);
    CHECK_THROWS_WITH_AS(static_cast<void>(cifar10_load_file(path)),
                         doctest::Contains("byte offset 3073"),
                         std::runtime_error);
    std::filesystem::remove(path);
  }

  SUBCASE("missing file reported") {
    CHECK_THROWS_AS(static_cast<void>(cifar10_load_file(temp_file("no.bin"))),
                    std::runtime_error);
  }

  SUBCASE("directory loader concatenates the five train batches") {
    auto dir = temp_file("cifar_dir_test");
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    for (int b = 1; b <= 5; ++b) {
      std::vector<std::uint8_t> bytes = make_record(b % 10, 0);
      auto extra = make_record((b + 1) % 10, 50);
      bytes.insert(bytes.end(), extra.begin(), extra.end());
      write_bytes(dir / ("data_batch_" + std::to_string(b) + ".bin"), bytes);
    }
    write_bytes(dir / "test_batch.bin", make_record(7, 0));
    Cifar10 all = cifar10_load(dir);
    CHECK(all.train.images.size() == 10);
    CHECK(all.train.labels.size() == 10);
    CHECK(all.test.images.size() == 1);
    CHECK(all.test.labels == std::vector<int>{7});
    std::filesystem::remove_all(dir);

    CHECK_THROWS_AS(static_cast<void>(cifar10_load(dir)), std::runtime_error);
  }
}

TEST_CASE("flip audits serialize the changed entries") {
  std::vector<int> before{0, 1, 2, 3};
  std::vector<int> after{0, 0, 2, 5};
  std::vector<std::size_t> flipped{1, 3};
  auto path = temp_file("flip_audit_test.json");
  write_flip_audit(path, before, after, flipped);
  std::ifstream in(path);
  nlohmann::json j = nlohmann::json::parse(in);
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 2);
  CHECK(j[0]["index"] == 1);
  CHECK(j[0]["old"] == 1);
  CHECK(j[0]["new"] == 0);
  CHECK(j[1]["index"] == 3);
  CHECK(j[1]["old"] == 3);
  CHECK(j[1]["new"] == 5);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(write_flip_audit(path, before, {0, 1}, flipped),
                  std::invalid_argument);
  CHECK_THROWS_AS(write_flip_audit(path, before, after, {9}),
                  std::invalid_argument);
}
