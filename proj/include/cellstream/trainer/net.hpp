#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "cellstream/rng.hpp"

namespace cellstream::trainer {

// Three 3x3 conv blocks (each: conv pad 1 -> leaky ReLU -> 2x2 max pool),
// global average pool, linear head, softmax. Clips enter with frames stacked
// on the channel axis, so in_channels = 3 * clip_len.
struct ClassifierArch {
  int in_channels = 3;
  int in_h = 32;
  int in_w = 32;
  int num_classes = 2;
  std::array<int, 3> conv_channels{32, 64, 128};
  double lrelu_slope = 0.01;

  void validate() const;
  bool operator==(const ClassifierArch&) const = default;
};

// One named slice of the flat parameter vector.
struct TensorRef {
  const char* name;
  std::size_t offset;
  std::size_t count;
};

template <typename T>
class Classifier {
 public:
  explicit Classifier(const ClassifierArch& arch);

  const ClassifierArch& arch() const { return arch_; }
  std::vector<T>& params() { return params_; }
  const std::vector<T>& params() const { return params_; }
  std::size_t n_params() const { return params_.size(); }
  std::size_t input_size() const;
  std::vector<TensorRef> tensors() const;

  // Kaiming fan-in normal for weights (leaky-ReLU gain on conv layers),
  // zero biases; consumes draws in parameter-layout order.
  void init_params(Rng& rng);

  // Scratch buffers reused across calls; one per thread of execution.
  struct Workspace {
    std::vector<std::vector<T>> pre;     // conv pre-activations per stage
    std::vector<std::vector<T>> act;     // post-lrelu activations per stage
    std::vector<std::vector<T>> pooled;  // pooled activations per stage
    std::vector<std::vector<int>> argmax;  // flat input index per pooled cell
    std::vector<T> gap;
    std::vector<double> logits;
    // backward scratch
    std::vector<std::vector<T>> dact;
    std::vector<std::vector<T>> dpooled;
    std::vector<T> dgap;
  };

  // Probabilities for one input of size input_size(); components are floored
  // at 1e-12 and renormalized so every class score is strictly positive.
  std::vector<double> forward(std::span<const T> input, Workspace& ws) const;

  // Smoothed cross-entropy of one sample; ADDS the parameter gradient into
  // `grad` (size n_params()), so callers zero it once per batch.
  double loss_grad(std::span<const T> input, int target, double ls_ratio,
                   std::span<T> grad, Workspace& ws) const;

 private:
  struct StageDims {
    int in_c, in_h, in_w;   // conv input
    int out_c;              // conv output channels (spatial dims = in_h/in_w)
    int pool_h, pool_w;     // after 2x2 max pool
  };

  void forward_impl(std::span<const T> input, Workspace& ws) const;

  ClassifierArch arch_;
  std::array<StageDims, 3> stages_;
  // conv0 W, conv0 b, conv1 W, conv1 b, conv2 W, conv2 b, head W, head b
  std::array<std::size_t, 8> offsets_;
  std::array<std::size_t, 8> counts_;
  std::vector<T> params_;
};

}  // namespace cellstream::trainer
