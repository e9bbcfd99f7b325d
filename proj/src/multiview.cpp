#include "cellstream/multiview.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace cellstream::multiview {

namespace {

// Largest representable confidence strictly below 1.
constexpr double kConfidenceCeiling = 1.0 - 1e-9;

int argmax_smallest_index(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return static_cast<int>(best);
}

}  // namespace

void PredictionVector::validate() const {
  if (h.size() < 2)
    throw std::invalid_argument("prediction vector needs at least 2 classes");
  double sum = 0.0;
  for (double v : h) {
    if (!(v > 0.0))
      throw std::invalid_argument("prediction vector components must be positive");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("prediction vector must sum to 1 (got " +
                                std::to_string(sum) + ")");
}

std::string to_string(Method m) { return m == Method::MVM ? "mvm" : "mvwcos"; }

Method method_from_string(const std::string& s) {
  if (s == "mvm") return Method::MVM;
  if (s == "mvwcos") return Method::MVWCoS;
  throw std::invalid_argument("unknown aggregation method '" + s + "'");
}

ViewPrediction view_prediction(const PredictionVector& h) {
  h.validate();
  ViewPrediction out;
  out.class_id = argmax_smallest_index(h.h);
  out.confidence =
      std::min(h.h[static_cast<std::size_t>(out.class_id)], kConfidenceCeiling);
  return out;
}

namespace {

AggregateResult accumulate(const std::vector<ViewPrediction>& views,
                           bool weight_by_confidence) {
  if (views.empty())
    throw std::invalid_argument("cannot aggregate an empty view list");
  int max_class = 0;
  for (const ViewPrediction& v : views) {
    if (v.class_id < 0)
      throw std::invalid_argument("view class id must be >= 0");
    if (weight_by_confidence && !(v.confidence > 0.0 && v.confidence < 1.0))
      throw std::invalid_argument("view confidence must lie in (0,1)");
    max_class = std::max(max_class, v.class_id);
  }
  AggregateResult out;
  out.per_class_weight.assign(static_cast<std::size_t>(max_class) + 1, 0.0);
  for (const ViewPrediction& v : views)
    out.per_class_weight[static_cast<std::size_t>(v.class_id)] +=
        weight_by_confidence ? v.confidence : 1.0;
  out.final_class = argmax_smallest_index(out.per_class_weight);
  out.views_used = static_cast<int>(views.size());
  return out;
}

}  // namespace

AggregateResult aggregate_mvm(const std::vector<ViewPrediction>& views) {
  return accumulate(views, false);
}

AggregateResult aggregate_mvwcos(const std::vector<ViewPrediction>& views) {
  return accumulate(views, true);
}

}  // namespace cellstream::multiview
