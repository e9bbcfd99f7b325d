#include "cellstream/trainer/data.hpp"

#include <stdexcept>
#include <string>
#include <utility>

namespace cellstream::trainer {

namespace {

constexpr float kInv255 = 1.0f / 255.0f;

void copy_image_channels(const Image& img, float* dst) {
  for (std::size_t i = 0; i < img.data.size(); ++i)
    dst[i] = img.data[i] * kInv255;
}

}  // namespace

VideoViewSource::VideoViewSource(std::filesystem::path dataset_dir,
                                 const synthcells::DatasetManifest& manifest,
                                 synthcells::Split split, synthcells::Task task,
                                 augment::ClipSpec clip, augment::CropSpec crop)
    : dir_(std::move(dataset_dir)),
      task_(task),
      clip_(clip),
      crop_(crop),
      n_frames_(manifest.config.n_frames),
      frame_h_(manifest.config.height),
      frame_w_(manifest.config.width) {
  clip_.validate();
  crop_.validate();
  if (clip_.clip_len > n_frames_)
    throw std::invalid_argument("clip_len " + std::to_string(clip_.clip_len) +
                                " exceeds dataset n_frames " +
                                std::to_string(n_frames_));
  for (const auto& e : manifest.entries)
    if (e.split == split) entries_.push_back(e);
  if (entries_.empty())
    throw std::invalid_argument("dataset split '" + synthcells::to_string(split) +
                                "' is empty");
}

int VideoViewSource::label(std::size_t i) const {
  return entries_.at(i).label(task_);
}

Example VideoViewSource::view(std::size_t i, Rng& rng) const {
  const synthcells::ManifestEntry& e = entries_.at(i);
  int start = augment::choose_clip_start(rng, n_frames_, clip_);
  // One crop rectangle for the whole clip keeps the views temporally
  // coherent.
  augment::CropRect rect = augment::choose_crop(rng, frame_w_, frame_h_, crop_);
  Video clip = synthcells::read_video_frames(dir_ / e.path, start, clip_.clip_len);

  Example ex;
  ex.channels = 3 * clip_.clip_len;
  ex.height = crop_.out_size;
  ex.width = crop_.out_size;
  ex.label = e.label(task_);
  ex.pixels.resize(static_cast<std::size_t>(ex.channels) * ex.height * ex.width);
  std::size_t frame_floats =
      static_cast<std::size_t>(3) * crop_.out_size * crop_.out_size;
  for (int f = 0; f < clip_.clip_len; ++f) {
    Image cropped = augment::crop_resize(clip.frames[static_cast<std::size_t>(f)],
                                         rect, crop_.out_size);
    copy_image_channels(cropped, ex.pixels.data() + frame_floats * f);
  }
  return ex;
}

MemoryViewSource::MemoryViewSource(labelnoise::LabeledImageSet set,
                                   augment::CropSpec crop)
    : set_(std::move(set)), crop_(crop) {
  set_.validate();
  crop_.validate();
}

Example MemoryViewSource::view(std::size_t i, Rng& rng) const {
  const Image& img = set_.images.at(i);
  Image cropped = augment::random_resized_crop(img, crop_, rng);
  Example ex;
  ex.channels = cropped.channels;
  ex.height = cropped.height;
  ex.width = cropped.width;
  ex.label = set_.labels[i];
  ex.pixels.resize(cropped.data.size());
  copy_image_channels(cropped, ex.pixels.data());
  return ex;
}

RelabeledViewSource::RelabeledViewSource(const ViewSource& base,
                                         std::vector<int> labels)
    : base_(&base), labels_(std::move(labels)) {
  if (labels_.size() != base_->size())
    throw std::invalid_argument("relabel vector size " +
                                std::to_string(labels_.size()) +
                                " does not match source size " +
                                std::to_string(base_->size()));
  for (int l : labels_)
    if (l < 0 || l >= base_->num_classes())
      throw std::invalid_argument("relabel value outside [0,num_classes)");
}

}  // namespace cellstream::trainer
