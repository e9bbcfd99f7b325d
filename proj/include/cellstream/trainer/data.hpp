#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

#include "cellstream/augment.hpp"
#include "cellstream/image.hpp"
#include "cellstream/labelnoise.hpp"
#include "cellstream/rng.hpp"
#include "cellstream/synthcells.hpp"

namespace cellstream::trainer {

// One network input: float pixels in [0,1], channel-major. Clips stack
// frames on the channel axis.
struct Example {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;
  int label = 0;
};

// A dataset that serves freshly augmented views of its samples. `view` must
// be deterministic given the rng state and must not mutate shared state, so
// sources are safe to share across read-only consumers.
class ViewSource {
 public:
  virtual ~ViewSource() = default;
  virtual std::size_t size() const = 0;
  virtual int num_classes() const = 0;
  virtual int label(std::size_t i) const = 0;
  virtual Example view(std::size_t i, Rng& rng) const = 0;
  // Manifest rows backing each index, for curriculum filtering; null when
  // the source has no difficulty features.
  virtual const std::vector<synthcells::ManifestEntry>* entries() const {
    return nullptr;
  }
};

// Serves one split of an on-disk video dataset: a view is a random
// consecutive clip with one random resized crop applied to every frame.
class VideoViewSource : public ViewSource {
 public:
  VideoViewSource(std::filesystem::path dataset_dir,
                  const synthcells::DatasetManifest& manifest,
                  synthcells::Split split, synthcells::Task task,
                  augment::ClipSpec clip, augment::CropSpec crop);

  std::size_t size() const override { return entries_.size(); }
  int num_classes() const override { return 2; }
  int label(std::size_t i) const override;
  Example view(std::size_t i, Rng& rng) const override;
  const std::vector<synthcells::ManifestEntry>* entries() const override {
    return &entries_;
  }

 private:
  std::filesystem::path dir_;
  std::vector<synthcells::ManifestEntry> entries_;
  synthcells::Task task_;
  augment::ClipSpec clip_;
  augment::CropSpec crop_;
  int n_frames_;
  int frame_h_;
  int frame_w_;
};

// Serves an in-memory image set (CIFAR-style); a view is one random resized
// crop.
class MemoryViewSource : public ViewSource {
 public:
  MemoryViewSource(labelnoise::LabeledImageSet set, augment::CropSpec crop);

  std::size_t size() const override { return set_.images.size(); }
  int num_classes() const override { return set_.num_classes; }
  int label(std::size_t i) const override { return set_.labels.at(i); }
  Example view(std::size_t i, Rng& rng) const override;

 private:
  labelnoise::LabeledImageSet set_;
  augment::CropSpec crop_;
};

// Same views as the wrapped source, different labels (e.g. noise-corrupted
// training labels). The wrapped source must outlive this object.
class RelabeledViewSource : public ViewSource {
 public:
  RelabeledViewSource(const ViewSource& base, std::vector<int> labels);

  std::size_t size() const override { return base_->size(); }
  int num_classes() const override { return base_->num_classes(); }
  int label(std::size_t i) const override { return labels_.at(i); }
  Example view(std::size_t i, Rng& rng) const override {
    Example ex = base_->view(i, rng);
    ex.label = labels_[i];  // pixels from the base, label from the override
    return ex;
  }
  const std::vector<synthcells::ManifestEntry>* entries() const override {
    return base_->entries();
  }

 private:
  const ViewSource* base_;
  std::vector<int> labels_;
};

}  // namespace cellstream::trainer
