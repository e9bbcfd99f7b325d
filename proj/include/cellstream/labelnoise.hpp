#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cellstream/image.hpp"
#include "cellstream/rng.hpp"

namespace cellstream::labelnoise {

struct NoiseSpec {
  double rate = 0.2;                   // per-sample flip probability
  std::vector<int> transition_map;     // size K; identity entries allowed
  std::uint64_t seed = 0;

  void validate() const;
};

struct FlipResult {
  std::vector<int> labels;
  std::vector<std::size_t> flipped;  // indices whose label actually changed
};

// The conventional pairwise asymmetric map: for K=10 (CIFAR-10 classes)
// truck->automobile, bird->airplane, deer->horse, cat<->dog; for K=2,
// class 1 -> class 0. Everything else identity.
std::vector<int> default_asym_map(int num_classes);

// Per sample, with probability `rate`, send the label through the map. A
// uniform draw is consumed for every sample regardless of outcome, so the
// flip pattern for a given seed does not depend on the map.
FlipResult asymmetric_flip(const std::vector<int>& labels, const NoiseSpec& spec);

struct LabeledImageSet {
  std::vector<Image> images;  // each [3, 32, 32]
  std::vector<int> labels;
  int num_classes = 10;
  std::string provenance = "clean";

  void validate() const;
};

// One CIFAR-10 binary batch: records of 1 label byte + 3072 pixel bytes
// (R, G, B planes, each 32x32 row-major).
LabeledImageSet cifar10_load_file(const std::filesystem::path& path);

struct Cifar10 {
  LabeledImageSet train;  // data_batch_1..5.bin
  LabeledImageSet test;   // test_batch.bin
};

Cifar10 cifar10_load(const std::filesystem::path& dir);

// JSON audit of which labels changed: [{index, old, new}, ...].
void write_flip_audit(const std::filesystem::path& path,
                      const std::vector<int>& before,
                      const std::vector<int>& after,
                      const std::vector<std::size_t>& flipped);

}  // namespace cellstream::labelnoise
