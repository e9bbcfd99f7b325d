#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "cellstream/rng.hpp"

namespace cellstream::multiview {

// Normalized class scores: every component positive, summing to 1.
struct PredictionVector {
  std::vector<double> h;
  void validate() const;
};

struct ViewPrediction {
  int class_id = 0;
  double confidence = 0.0;
};

enum class Method { MVM, MVWCoS };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct AggregateResult {
  int final_class = 0;
  // Vote counts for MVM, confidence sums for MVWCo-S, indexed by class.
  std::vector<double> per_class_weight;
  int views_used = 0;
};

// (argmax, max) of h with smallest-index tie-break; a saturated maximum is
// clamped to 1 - 1e-9 so confidences stay inside (0,1).
ViewPrediction view_prediction(const PredictionVector& h);

// Majority vote over class ids; confidences are ignored.
AggregateResult aggregate_mvm(const std::vector<ViewPrediction>& views);

// Per-class confidence sums z_k; the winner is argmax_k z_k.
AggregateResult aggregate_mvwcos(const std::vector<ViewPrediction>& views);

// Draws m augmented views of one sample and aggregates the per-view
// predictions. `predictor(sample_index, view_rng)` must return a
// PredictionVector; each view gets its own derived stream so results do not
// depend on evaluation order.
template <typename Predictor>
AggregateResult multiview_predict(Predictor&& predictor, std::size_t sample_index,
                                  int m, Method method, Rng& rng) {
  if (m < 1) throw std::invalid_argument("view count m must be >= 1");
  // Pre-split the streams so view j is reproducible in isolation.
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(m));
  for (auto& s : seeds) s = rng();
  std::vector<ViewPrediction> views;
  views.reserve(seeds.size());
  for (std::size_t j = 0; j < seeds.size(); ++j) {
    try {
      Rng view_rng(seeds[j]);
      PredictionVector h = predictor(sample_index, view_rng);
      views.push_back(view_prediction(h));
    } catch (const std::exception& e) {
      throw std::runtime_error("view " + std::to_string(j) + " failed: " + e.what());
    }
  }
  return method == Method::MVM ? aggregate_mvm(views) : aggregate_mvwcos(views);
}

}  // namespace cellstream::multiview
