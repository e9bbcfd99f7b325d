#include "cellstream/labelnoise.hpp"

#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace cellstream::labelnoise {

void NoiseSpec::validate() const {
  if (rate < 0.0 || rate >= 1.0)
    throw std::invalid_argument("noise rate must be in [0,1)");
  if (transition_map.empty())
    throw std::invalid_argument("transition map must cover at least one class");
  int k = static_cast<int>(transition_map.size());
  for (int target : transition_map)
    if (target < 0 || target >= k)
      throw std::invalid_argument("transition map target out of [0,K)");
}

std::vector<int> default_asym_map(int num_classes) {
  if (num_classes < 2)
    throw std::invalid_argument("need at least 2 classes for an asymmetric map");
  std::vector<int> map(static_cast<std::size_t>(num_classes));
  for (int k = 0; k < num_classes; ++k) map[static_cast<std::size_t>(k)] = k;
  if (num_classes == 10) {
    map[9] = 1;  // truck -> automobile
    map[2] = 0;  // bird -> airplane
    map[4] = 7;  // deer -> horse
    map[3] = 5;  // cat -> dog
    map[5] = 3;  // dog -> cat
  } else {
    map[1] = 0;
  }
  return map;
}

FlipResult asymmetric_flip(const std::vector<int>& labels, const NoiseSpec& spec) {
  spec.validate();
  int k = static_cast<int>(spec.transition_map.size());
  FlipResult out;
  out.labels = labels;
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    int label = out.labels[i];
    if (label < 0 || label >= k)
      throw std::invalid_argument("label " + std::to_string(label) + " at index " +
                                  std::to_string(i) + " outside [0," +
                                  std::to_string(k) + ")");
    double u = u01(rng);
    int target = spec.transition_map[static_cast<std::size_t>(label)];
    if (u < spec.rate && target != label) {
      out.labels[i] = target;
      out.flipped.push_back(i);
    }
  }
  return out;
}

void LabeledImageSet::validate() const {
  if (images.empty()) throw std::invalid_argument("image set is empty");
  if (images.size() != labels.size())
    throw std::invalid_argument("image/label count mismatch");
  for (int label : labels)
    if (label < 0 || label >= num_classes)
      throw std::invalid_argument("label outside [0,num_classes)");
}

namespace {

constexpr std::size_t kRecordBytes = 1 + 3 * 32 * 32;  // label + pixels

}  // namespace

LabeledImageSet cifar10_load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open CIFAR batch: " + path.string());
  in.seekg(0, std::ios::end);
  auto size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);
  if (size == 0 || size % kRecordBytes != 0)
    throw std::runtime_error(
        path.string() + ": size " + std::to_string(size) +
        " is not a multiple of the " + std::to_string(kRecordBytes) +
        "-byte record; truncation at byte offset " +
        std::to_string(size - size % kRecordBytes));

  LabeledImageSet set;
  set.num_classes = 10;
  std::uint64_t n = size / kRecordBytes;
  set.images.reserve(n);
  set.labels.reserve(n);
  std::vector<std::uint8_t> record(kRecordBytes);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (!in.read(reinterpret_cast<char*>(record.data()),
                 static_cast<std::streamsize>(record.size())))
      throw std::runtime_error(path.string() + ": read failed at byte offset " +
                               std::to_string(i * kRecordBytes));
    int label = record[0];
    if (label > 9)
      throw std::runtime_error(path.string() + ": invalid label " +
                               std::to_string(label) + " at byte offset " +
                               std::to_string(i * kRecordBytes));
    set.labels.push_back(label);
    Image img(3, 32, 32);
    // Record layout already matches the [c][y][x] image layout.
    std::copy(record.begin() + 1, record.end(), img.data.begin());
    set.images.push_back(std::move(img));
  }
  return set;
}

Cifar10 cifar10_load(const std::filesystem::path& dir) {
  Cifar10 out;
  for (int b = 1; b <= 5; ++b) {
    LabeledImageSet batch =
        cifar10_load_file(dir / ("data_batch_" + std::to_string(b) + ".bin"));
    out.train.images.insert(out.train.images.end(),
                            std::make_move_iterator(batch.images.begin()),
                            std::make_move_iterator(batch.images.end()));
    out.train.labels.insert(out.train.labels.end(), batch.labels.begin(),
                            batch.labels.end());
  }
  out.train.num_classes = 10;
  out.test = cifar10_load_file(dir / "test_batch.bin");
  out.train.validate();
  out.test.validate();
  return out;
}

void write_flip_audit(const std::filesystem::path& path,
                      const std::vector<int>& before,
                      const std::vector<int>& after,
                      const std::vector<std::size_t>& flipped) {
  if (before.size() != after.size())
    throw std::invalid_argument("before/after label vectors differ in length");
  nlohmann::json j = nlohmann::json::array();
  for (std::size_t i : flipped) {
    if (i >= before.size())
      throw std::invalid_argument("flip index out of range");
    j.push_back({{"index", i}, {"old", before[i]}, {"new", after[i]}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace cellstream::labelnoise
