#include "cellstream/trainer/net.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace cellstream::trainer {

void ClassifierArch::validate() const {
  if (in_channels < 1) throw std::invalid_argument("in_channels must be >= 1");
  // Three stride-2 pools need at least 8 pixels per side.
  if (in_h < 8 || in_w < 8)
    throw std::invalid_argument("input spatial dims must be >= 8");
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
  for (int c : conv_channels)
    if (c < 1) throw std::invalid_argument("conv channels must be >= 1");
  if (lrelu_slope < 0.0 || lrelu_slope >= 1.0)
    throw std::invalid_argument("leaky-ReLU slope must be in [0,1)");
}

template <typename T>
Classifier<T>::Classifier(const ClassifierArch& arch) : arch_(arch) {
  arch_.validate();
  int c = arch_.in_channels;
  int h = arch_.in_h;
  int w = arch_.in_w;
  std::size_t offset = 0;
  for (int s = 0; s < 3; ++s) {
    StageDims& d = stages_[static_cast<std::size_t>(s)];
    d.in_c = c;
    d.in_h = h;
    d.in_w = w;
    d.out_c = arch_.conv_channels[static_cast<std::size_t>(s)];
    d.pool_h = h / 2;
    d.pool_w = w / 2;
    counts_[static_cast<std::size_t>(2 * s)] =
        static_cast<std::size_t>(d.out_c) * d.in_c * 9;
    counts_[static_cast<std::size_t>(2 * s + 1)] = static_cast<std::size_t>(d.out_c);
    offsets_[static_cast<std::size_t>(2 * s)] = offset;
    offset += counts_[static_cast<std::size_t>(2 * s)];
    offsets_[static_cast<std::size_t>(2 * s + 1)] = offset;
    offset += counts_[static_cast<std::size_t>(2 * s + 1)];
    c = d.out_c;
    h = d.pool_h;
    w = d.pool_w;
  }
  counts_[6] = static_cast<std::size_t>(arch_.num_classes) * c;
  counts_[7] = static_cast<std::size_t>(arch_.num_classes);
  offsets_[6] = offset;
  offset += counts_[6];
  offsets_[7] = offset;
  offset += counts_[7];
  params_.assign(offset, T{0});
}

template <typename T>
std::size_t Classifier<T>::input_size() const {
  return static_cast<std::size_t>(arch_.in_channels) * arch_.in_h * arch_.in_w;
}

template <typename T>
std::vector<TensorRef> Classifier<T>::tensors() const {
  static constexpr std::array<const char*, 8> kNames{
      "conv0.weight", "conv0.bias", "conv1.weight", "conv1.bias",
      "conv2.weight", "conv2.bias", "head.weight",  "head.bias"};
  std::vector<TensorRef> out;
  out.reserve(8);
  for (std::size_t i = 0; i < 8; ++i)
    out.push_back({kNames[i], offsets_[i], counts_[i]});
  return out;
}

template <typename T>
void Classifier<T>::init_params(Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  double gain = std::sqrt(2.0 / (1.0 + arch_.lrelu_slope * arch_.lrelu_slope));
  for (int s = 0; s < 3; ++s) {
    const StageDims& d = stages_[static_cast<std::size_t>(s)];
    double fan_in = static_cast<double>(d.in_c) * 9.0;
    double std_dev = gain / std::sqrt(fan_in);
    std::size_t w_off = offsets_[static_cast<std::size_t>(2 * s)];
    std::size_t w_cnt = counts_[static_cast<std::size_t>(2 * s)];
    for (std::size_t i = 0; i < w_cnt; ++i)
      params_[w_off + i] = static_cast<T>(normal(rng) * std_dev);
    // biases stay zero
  }
  double head_fan_in = static_cast<double>(stages_[2].out_c);
  double head_std = 1.0 / std::sqrt(head_fan_in);
  for (std::size_t i = 0; i < counts_[6]; ++i)
    params_[offsets_[6] + i] = static_cast<T>(normal(rng) * head_std);
}

namespace {

// out[oc][y][x] += w[oc][ic][ky][kx] * in[ic][y+ky-1][x+kx-1], zero-padded.
template <typename T>
void conv3x3_forward(const T* in, int in_c, int h, int w, const T* weight,
                     const T* bias, T* out, int out_c) {
  std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int oc = 0; oc < out_c; ++oc) {
    T* o = out + static_cast<std::size_t>(oc) * plane;
    std::fill(o, o + plane, bias[oc]);
    for (int ic = 0; ic < in_c; ++ic) {
      const T* src = in + static_cast<std::size_t>(ic) * plane;
      const T* wk = weight + (static_cast<std::size_t>(oc) * in_c + ic) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        int y0 = std::max(0, 1 - ky);
        int y1 = std::min(h, h + 1 - ky);
        for (int kx = 0; kx < 3; ++kx) {
          T wv = wk[ky * 3 + kx];
          if (wv == T{0}) continue;
          int x0 = std::max(0, 1 - kx);
          int x1 = std::min(w, w + 1 - kx);
          for (int y = y0; y < y1; ++y) {
            T* orow = o + static_cast<std::size_t>(y) * w;
            const T* irow = src + static_cast<std::size_t>(y + ky - 1) * w + (kx - 1);
            for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
  }
}

// Gradients w.r.t. weights, biases, and (optionally) the conv input.
template <typename T>
void conv3x3_backward(const T* in, int in_c, int h, int w, const T* weight,
                      int out_c, const T* dout, T* dweight, T* dbias, T* din) {
  std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int oc = 0; oc < out_c; ++oc) {
    const T* dz = dout + static_cast<std::size_t>(oc) * plane;
    T acc{0};
    for (std::size_t i = 0; i < plane; ++i) acc += dz[i];
    dbias[oc] += acc;
    for (int ic = 0; ic < in_c; ++ic) {
      const T* src = in + static_cast<std::size_t>(ic) * plane;
      const T* wk = weight + (static_cast<std::size_t>(oc) * in_c + ic) * 9;
      T* dwk = dweight + (static_cast<std::size_t>(oc) * in_c + ic) * 9;
      T* dsrc = din ? din + static_cast<std::size_t>(ic) * plane : nullptr;
      for (int ky = 0; ky < 3; ++ky) {
        int y0 = std::max(0, 1 - ky);
        int y1 = std::min(h, h + 1 - ky);
        for (int kx = 0; kx < 3; ++kx) {
          int x0 = std::max(0, 1 - kx);
          int x1 = std::min(w, w + 1 - kx);
          T wgrad{0};
          T wv = wk[ky * 3 + kx];
          for (int y = y0; y < y1; ++y) {
            const T* dzrow = dz + static_cast<std::size_t>(y) * w;
            const T* irow = src + static_cast<std::size_t>(y + ky - 1) * w + (kx - 1);
            T* drow =
                dsrc ? dsrc + static_cast<std::size_t>(y + ky - 1) * w + (kx - 1)
                     : nullptr;
            for (int x = x0; x < x1; ++x) {
              wgrad += dzrow[x] * irow[x];
              if (drow) drow[x] += wv * dzrow[x];
            }
          }
          dwk[ky * 3 + kx] += wgrad;
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void Classifier<T>::forward_impl(std::span<const T> input, Workspace& ws) const {
  if (input.size() != input_size())
    throw std::invalid_argument("input size " + std::to_string(input.size()) +
                                " does not match network input " +
                                std::to_string(input_size()));
  if (ws.pre.size() != 3) {
    ws.pre.resize(3);
    ws.act.resize(3);
    ws.pooled.resize(3);
    ws.argmax.resize(3);
    ws.dact.resize(3);
    for (int s = 0; s < 3; ++s) {
      const StageDims& d = stages_[static_cast<std::size_t>(s)];
      std::size_t conv_n = static_cast<std::size_t>(d.out_c) * d.in_h * d.in_w;
      std::size_t pool_n = static_cast<std::size_t>(d.out_c) * d.pool_h * d.pool_w;
      ws.pre[static_cast<std::size_t>(s)].resize(conv_n);
      ws.act[static_cast<std::size_t>(s)].resize(conv_n);
      ws.pooled[static_cast<std::size_t>(s)].resize(pool_n);
      ws.argmax[static_cast<std::size_t>(s)].resize(pool_n);
      ws.dact[static_cast<std::size_t>(s)].resize(conv_n);
    }
    ws.gap.resize(static_cast<std::size_t>(stages_[2].out_c));
    ws.dgap.resize(static_cast<std::size_t>(stages_[2].out_c));
    ws.logits.resize(static_cast<std::size_t>(arch_.num_classes));
  }

  T slope = static_cast<T>(arch_.lrelu_slope);
  const T* stage_in = input.data();
  for (int s = 0; s < 3; ++s) {
    const StageDims& d = stages_[static_cast<std::size_t>(s)];
    auto& pre = ws.pre[static_cast<std::size_t>(s)];
    auto& act = ws.act[static_cast<std::size_t>(s)];
    auto& pooled = ws.pooled[static_cast<std::size_t>(s)];
    auto& argmax = ws.argmax[static_cast<std::size_t>(s)];

    conv3x3_forward(stage_in, d.in_c, d.in_h, d.in_w,
                    params_.data() + offsets_[static_cast<std::size_t>(2 * s)],
                    params_.data() + offsets_[static_cast<std::size_t>(2 * s + 1)],
                    pre.data(), d.out_c);
    for (std::size_t i = 0; i < pre.size(); ++i)
      act[i] = pre[i] > T{0} ? pre[i] : slope * pre[i];

    // 2x2 max pool, stride 2; odd trailing row/column is dropped.
    for (int c = 0; c < d.out_c; ++c) {
      const T* plane = act.data() + static_cast<std::size_t>(c) * d.in_h * d.in_w;
      T* pplane = pooled.data() + static_cast<std::size_t>(c) * d.pool_h * d.pool_w;
      int* aplane = argmax.data() + static_cast<std::size_t>(c) * d.pool_h * d.pool_w;
      for (int y = 0; y < d.pool_h; ++y) {
        for (int x = 0; x < d.pool_w; ++x) {
          int base = (2 * y) * d.in_w + 2 * x;
          int best = base;
          T bv = plane[base];
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              int idx = (2 * y + dy) * d.in_w + (2 * x + dx);
              if (plane[idx] > bv) {
                bv = plane[idx];
                best = idx;
              }
            }
          pplane[y * d.pool_w + x] = bv;
          aplane[y * d.pool_w + x] = best;
        }
      }
    }
    stage_in = pooled.data();
  }

  const StageDims& last = stages_[2];
  double inv_area = 1.0 / (static_cast<double>(last.pool_h) * last.pool_w);
  const auto& pooled3 = ws.pooled[2];
  for (int c = 0; c < last.out_c; ++c) {
    double sum = 0.0;
    const T* plane =
        pooled3.data() + static_cast<std::size_t>(c) * last.pool_h * last.pool_w;
    for (int i = 0; i < last.pool_h * last.pool_w; ++i) sum += plane[i];
    ws.gap[static_cast<std::size_t>(c)] = static_cast<T>(sum * inv_area);
  }

  const T* hw = params_.data() + offsets_[6];
  const T* hb = params_.data() + offsets_[7];
  for (int k = 0; k < arch_.num_classes; ++k) {
    double z = hb[k];
    const T* row = hw + static_cast<std::size_t>(k) * last.out_c;
    for (int c = 0; c < last.out_c; ++c)
      z += static_cast<double>(row[c]) * static_cast<double>(ws.gap[static_cast<std::size_t>(c)]);
    ws.logits[static_cast<std::size_t>(k)] = z;
  }
}

namespace {

// Softmax with a strictly positive floor so downstream consumers always see
// a valid prediction vector.
std::vector<double> softmax_floored(const std::vector<double>& logits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - mx);
    sum += p[k];
  }
  double renorm = 0.0;
  for (double& v : p) {
    v = std::max(v / sum, 1e-12);
    renorm += v;
  }
  for (double& v : p) v /= renorm;
  return p;
}

}  // namespace

template <typename T>
std::vector<double> Classifier<T>::forward(std::span<const T> input,
                                           Workspace& ws) const {
  forward_impl(input, ws);
  return softmax_floored(ws.logits);
}

template <typename T>
double Classifier<T>::loss_grad(std::span<const T> input, int target,
                                double ls_ratio, std::span<T> grad,
                                Workspace& ws) const {
  if (target < 0 || target >= arch_.num_classes)
    throw std::invalid_argument("target class out of range");
  if (ls_ratio < 0.0 || ls_ratio >= 1.0)
    throw std::invalid_argument("label smoothing ratio must be in [0,1)");
  if (grad.size() != params_.size())
    throw std::invalid_argument("gradient buffer size mismatch");
  forward_impl(input, ws);

  // Loss straight from log-softmax; probabilities for the logit gradient.
  int k_count = arch_.num_classes;
  double mx = *std::max_element(ws.logits.begin(), ws.logits.end());
  double lse = 0.0;
  for (double z : ws.logits) lse += std::exp(z - mx);
  lse = mx + std::log(lse);
  double uniform_q = ls_ratio / k_count;
  double loss = 0.0;
  std::vector<double> dlogits(static_cast<std::size_t>(k_count));
  for (int k = 0; k < k_count; ++k) {
    double q = uniform_q + (k == target ? 1.0 - ls_ratio : 0.0);
    double logp = ws.logits[static_cast<std::size_t>(k)] - lse;
    loss -= q * logp;
    dlogits[static_cast<std::size_t>(k)] = std::exp(logp) - q;
  }

  const StageDims& last = stages_[2];
  const T* hw = params_.data() + offsets_[6];
  T* dhw = grad.data() + offsets_[6];
  T* dhb = grad.data() + offsets_[7];
  std::fill(ws.dgap.begin(), ws.dgap.end(), T{0});
  for (int k = 0; k < k_count; ++k) {
    T dk = static_cast<T>(dlogits[static_cast<std::size_t>(k)]);
    dhb[k] += dk;
    const T* row = hw + static_cast<std::size_t>(k) * last.out_c;
    T* drow = dhw + static_cast<std::size_t>(k) * last.out_c;
    for (int c = 0; c < last.out_c; ++c) {
      drow[c] += dk * ws.gap[static_cast<std::size_t>(c)];
      ws.dgap[static_cast<std::size_t>(c)] += dk * row[c];
    }
  }

  // GAP spreads each channel gradient uniformly over the pooled plane; the
  // pool routes each cell's gradient to the argmax of its 2x2 window.
  if (ws.dpooled.size() != 3) {
    ws.dpooled.resize(3);
    for (int s = 0; s < 3; ++s) {
      const StageDims& d = stages_[static_cast<std::size_t>(s)];
      ws.dpooled[static_cast<std::size_t>(s)].resize(
          static_cast<std::size_t>(d.out_c) * d.pool_h * d.pool_w);
    }
  }
  T slope = static_cast<T>(arch_.lrelu_slope);
  for (int s = 2; s >= 0; --s) {
    const StageDims& d = stages_[static_cast<std::size_t>(s)];
    auto& dact = ws.dact[static_cast<std::size_t>(s)];
    std::fill(dact.begin(), dact.end(), T{0});
    const auto& argmax = ws.argmax[static_cast<std::size_t>(s)];
    if (s == 2) {
      T inv_area = static_cast<T>(1.0 / (static_cast<double>(d.pool_h) * d.pool_w));
      for (int c = 0; c < d.out_c; ++c) {
        T g = ws.dgap[static_cast<std::size_t>(c)] * inv_area;
        const int* aplane =
            argmax.data() + static_cast<std::size_t>(c) * d.pool_h * d.pool_w;
        T* dplane = dact.data() + static_cast<std::size_t>(c) * d.in_h * d.in_w;
        for (int i = 0; i < d.pool_h * d.pool_w; ++i) dplane[aplane[i]] += g;
      }
    } else {
      const auto& dpooled = ws.dpooled[static_cast<std::size_t>(s)];
      for (int c = 0; c < d.out_c; ++c) {
        const T* dpplane =
            dpooled.data() + static_cast<std::size_t>(c) * d.pool_h * d.pool_w;
        const int* aplane =
            argmax.data() + static_cast<std::size_t>(c) * d.pool_h * d.pool_w;
        T* dplane = dact.data() + static_cast<std::size_t>(c) * d.in_h * d.in_w;
        for (int i = 0; i < d.pool_h * d.pool_w; ++i)
          dplane[aplane[i]] += dpplane[i];
      }
    }

    // leaky-ReLU: pass-through above zero, slope-scaled below.
    const auto& pre = ws.pre[static_cast<std::size_t>(s)];
    for (std::size_t i = 0; i < dact.size(); ++i)
      if (pre[i] <= T{0}) dact[i] *= slope;

    const T* stage_in =
        s == 0 ? input.data() : ws.pooled[static_cast<std::size_t>(s - 1)].data();
    T* din = nullptr;
    if (s > 0) {
      auto& dprev = ws.dpooled[static_cast<std::size_t>(s - 1)];
      std::fill(dprev.begin(), dprev.end(), T{0});
      din = dprev.data();
    }
    conv3x3_backward(stage_in, d.in_c, d.in_h, d.in_w,
                     params_.data() + offsets_[static_cast<std::size_t>(2 * s)],
                     d.out_c, dact.data(),
                     grad.data() + offsets_[static_cast<std::size_t>(2 * s)],
                     grad.data() + offsets_[static_cast<std::size_t>(2 * s + 1)],
                     din);
  }
  return loss;
}

template class Classifier<float>;
template class Classifier<double>;

}  // namespace cellstream::trainer
