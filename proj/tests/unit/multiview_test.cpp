#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cellstream/multiview.hpp"
#include "doctest.h"

using namespace cellstream;
using namespace cellstream::multiview;

namespace {

PredictionVector vec(std::vector<double> h) { return PredictionVector{std::move(h)}; }

std::vector<ViewPrediction> views_of(const std::vector<int>& classes,
                                     const std::vector<double>& confs) {
  std::vector<ViewPrediction> v;
  for (std::size_t i = 0; i < classes.size(); ++i)
    v.push_back({classes[i], confs[i]});
  return v;
}

PredictionVector random_prediction(std::mt19937_64& rng, int k) {
  std::uniform_real_distribution<double> u(0.01, 1.0);
  std::vector<double> h(k);
  double sum = 0.0;
  for (double& v : h) sum += (v = u(rng));
  for (double& v : h) v /= sum;
  return vec(h);
}

}  // namespace

TEST_CASE("view prediction is (argmax, max) with smallest-index ties") {
  SUBCASE("direct argmax") {
    ViewPrediction p = view_prediction(vec({0.9, 0.1}));
    CHECK(p.class_id == 0);
    CHECK(p.confidence == doctest::Approx(0.9));
  }

  SUBCASE("exact tie goes to the smaller index") {
    ViewPrediction p = view_prediction(vec({0.5, 0.5}));
    CHECK(p.class_id == 0);
    CHECK(p.confidence == doctest::Approx(0.5));
    p = view_prediction(vec({0.2, 0.4, 0.4}));
    CHECK(p.class_id == 1);
  }

  SUBCASE("matches a linear-scan oracle on random vectors") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
      PredictionVector h = random_prediction(rng, 10);
      ViewPrediction p = view_prediction(h);
      int best = 0;
      for (int k = 1; k < 10; ++k)
        if (h.h[k] > h.h[best]) best = k;
      CHECK(p.class_id == best);
      CHECK(p.confidence == doctest::Approx(h.h[best]));
    }
  }

  SUBCASE("a saturated maximum is clamped below 1") {
    // Sum tolerance is 1e-6, so a {1.0, tiny} vector is still accepted.
    ViewPrediction p = view_prediction(vec({1.0 - 1e-7, 1e-7}));
    CHECK(p.confidence < 1.0);
    CHECK(p.confidence == doctest::Approx(1.0 - 1e-9));
  }

  SUBCASE("rejects malformed vectors") {
    CHECK_THROWS_AS(view_prediction(vec({1.0})), std::invalid_argument);
    CHECK_THROWS_AS(view_prediction(vec({0.7, 0.2})), std::invalid_argument);
    CHECK_THROWS_AS(view_prediction(vec({1.1, -0.1})), std::invalid_argument);
    CHECK_THROWS_AS(view_prediction(vec({})), std::invalid_argument);
  }
}

TEST_CASE("majority vote aggregation") {
  SUBCASE("majority and tie-break") {
    AggregateResult r = aggregate_mvm(views_of({1, 1, 0}, {0.6, 0.6, 0.9}));
    CHECK(r.final_class == 1);
    CHECK(r.views_used == 3);
    REQUIRE(r.per_class_weight.size() == 2);
    CHECK(r.per_class_weight[0] == 1.0);
    CHECK(r.per_class_weight[1] == 2.0);

    CHECK(aggregate_mvm(views_of({0, 1}, {0.5, 0.5})).final_class == 0);
    CHECK(aggregate_mvm(views_of({1, 0}, {0.5, 0.5})).final_class == 0);
  }

  SUBCASE("confidences are ignored") {
    AggregateResult r =
        aggregate_mvm(views_of({0, 1, 1}, {0.999, 0.501, 0.501}));
    CHECK(r.final_class == 1);
  }

  SUBCASE("matches a histogram oracle on random vote sets") {
    std::mt19937_64 rng(22);
    std::uniform_int_distribution<int> uc(0, 3);
    for (int trial = 0; trial < 1000; ++trial) {
      std::vector<int> classes(10);
      std::vector<double> confs(10, 0.5);
      for (int& c : classes) c = uc(rng);
      AggregateResult r = aggregate_mvm(views_of(classes, confs));
      int hist[4] = {0, 0, 0, 0};
      for (int c : classes) ++hist[c];
      int best = 0;
      for (int k = 1; k < 4; ++k)
        if (hist[k] > hist[best]) best = k;
      CHECK(r.final_class == best);
      for (int k = 0; k < 4; ++k)
        if (k < static_cast<int>(r.per_class_weight.size()))
          CHECK(r.per_class_weight[k] == hist[k]);
    }
  }

  SUBCASE("binary vote equals strict-majority enumeration for m <= 8") {
    for (int m = 1; m <= 8; ++m) {
      for (int mask = 0; mask < (1 << m); ++mask) {
        std::vector<int> classes;
        std::vector<double> confs;
        int ones = 0;
        for (int j = 0; j < m; ++j) {
          int c = (mask >> j) & 1;
          ones += c;
          classes.push_back(c);
          confs.push_back(0.6);
        }
        int expected = (2 * ones > m) ? 1 : 0;  // ties go to class 0
        CHECK(aggregate_mvm(views_of(classes, confs)).final_class == expected);
      }
    }
  }

  SUBCASE("empty view list rejected") {
    CHECK_THROWS_AS(aggregate_mvm({}), std::invalid_argument);
  }
}

TEST_CASE("confidence-sum aggregation") {
  SUBCASE("manual accumulation") {
    AggregateResult r = aggregate_mvwcos(views_of({0, 1, 1}, {0.9, 0.5, 0.5}));
    CHECK(r.final_class == 1);
    REQUIRE(r.per_class_weight.size() == 2);
    CHECK(r.per_class_weight[0] == doctest::Approx(0.9));
    CHECK(r.per_class_weight[1] == doctest::Approx(1.0));
  }

  SUBCASE("single view") {
    AggregateResult r = aggregate_mvwcos(views_of({3}, {0.6}));
    CHECK(r.final_class == 3);
    CHECK(r.views_used == 1);
  }

  SUBCASE("equal confidences reduce to the vote") {
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> uc(0, 4);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<int> classes(9);
      for (int& c : classes) c = uc(rng);
      std::vector<double> confs(classes.size(), 0.37);
      CHECK(aggregate_mvwcos(views_of(classes, confs)).final_class ==
            aggregate_mvm(views_of(classes, confs)).final_class);
    }
  }

  SUBCASE("argmax is scale-free in the confidences") {
    std::mt19937_64 rng(24);
    std::uniform_int_distribution<int> uc(0, 3);
    std::uniform_real_distribution<double> uconf(0.3, 0.9), ulambda(0.1, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
      std::vector<int> classes(7);
      std::vector<double> confs(7);
      for (int& c : classes) c = uc(rng);
      for (double& c : confs) c = uconf(rng);
      double lambda = ulambda(rng);
      std::vector<double> scaled = confs;
      for (double& c : scaled) c *= lambda;
      CHECK(aggregate_mvwcos(views_of(classes, confs)).final_class ==
            aggregate_mvwcos(views_of(classes, scaled)).final_class);
    }
  }

  SUBCASE("rejects empty lists and out-of-range confidences") {
    CHECK_THROWS_AS(aggregate_mvwcos({}), std::invalid_argument);
    CHECK_THROWS_AS(aggregate_mvwcos(views_of({0}, {0.0})),
                    std::invalid_argument);
    CHECK_THROWS_AS(aggregate_mvwcos(views_of({0}, {1.0})),
                    std::invalid_argument);
    CHECK_THROWS_AS(aggregate_mvwcos(views_of({0}, {-0.2})),
                    std::invalid_argument);
  }
}

TEST_CASE("both aggregators are permutation invariant and unanimous") {
  std::mt19937_64 rng(25);
  std::uniform_int_distribution<int> uc(0, 3);
  std::uniform_real_distribution<double> uconf(0.3, 0.9);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> classes(8);
    std::vector<double> confs(8);
    for (int& c : classes) c = uc(rng);
    for (double& c : confs) c = uconf(rng);
    auto views = views_of(classes, confs);
    int mvm = aggregate_mvm(views).final_class;
    int mvw = aggregate_mvwcos(views).final_class;
    for (int shuffle = 0; shuffle < 5; ++shuffle) {
      std::shuffle(views.begin(), views.end(), rng);
      CHECK(aggregate_mvm(views).final_class == mvm);
      CHECK(aggregate_mvwcos(views).final_class == mvw);
    }
  }

  // Unanimity.
  for (int k = 0; k < 4; ++k) {
    auto views = views_of({k, k, k, k, k}, {0.3, 0.4, 0.5, 0.6, 0.7});
    CHECK(aggregate_mvm(views).final_class == k);
    CHECK(aggregate_mvwcos(views).final_class == k);
  }
}

TEST_CASE("multi-view prediction drives the predictor once per view") {
  SUBCASE("constant predictor is unanimous for any m") {
    for (Method method : {Method::MVM, Method::MVWCoS}) {
      for (int m : {1, 3, 10}) {
        Rng rng(31);
        auto predictor = [](std::size_t, Rng&) { return vec({0.8, 0.2}); };
        AggregateResult r = multiview_predict(predictor, 0, m, method, rng);
        CHECK(r.final_class == 0);
        CHECK(r.views_used == m);
      }
    }
  }

  SUBCASE("m=1 returns the single view's class") {
    for (Method method : {Method::MVM, Method::MVWCoS}) {
      Rng rng(32);
      auto predictor = [](std::size_t, Rng&) { return vec({0.1, 0.3, 0.6}); };
      CHECK(multiview_predict(predictor, 5, 1, method, rng).final_class == 2);
    }
  }

  SUBCASE("scripted predictor matches hand-computed aggregation") {
    // Views: classes 1,1,0 with confidences 0.6,0.55,0.95.
    std::vector<std::vector<double>> script = {
        {0.4, 0.6}, {0.45, 0.55}, {0.95, 0.05}};
    int call = 0;
    auto predictor = [&](std::size_t, Rng&) { return vec(script[call++ % 3]); };
    Rng rng_a(33);
    AggregateResult mvm = multiview_predict(predictor, 0, 3, Method::MVM, rng_a);
    CHECK(mvm.final_class == 1);  // two votes beat one
    call = 0;
    Rng rng_b(33);
    AggregateResult mvw =
        multiview_predict(predictor, 0, 3, Method::MVWCoS, rng_b);
    CHECK(mvw.final_class == 1);  // z = (0.95, 1.15)
    CHECK(mvw.per_class_weight[0] == doctest::Approx(0.95));
    CHECK(mvw.per_class_weight[1] == doctest::Approx(1.15));
  }

  SUBCASE("deterministic given the seed, and views are order-independent") {
    auto predictor = [](std::size_t, Rng& view_rng) {
      std::uniform_real_distribution<double> u(0.05, 0.95);
      double a = u(view_rng);
      return vec({a, 1.0 - a});
    };
    Rng rng_a(34), rng_b(34);
    AggregateResult a = multiview_predict(predictor, 7, 10, Method::MVWCoS, rng_a);
    AggregateResult b = multiview_predict(predictor, 7, 10, Method::MVWCoS, rng_b);
    CHECK(a.final_class == b.final_class);
    CHECK(a.per_class_weight == b.per_class_weight);
  }

  SUBCASE("predictor failures name the failing view") {
    auto predictor = [](std::size_t, Rng&) -> PredictionVector {
      throw std::runtime_error("backend unavailable");
    };
    Rng rng(35);
    CHECK_THROWS_WITH_AS(static_cast<void>(multiview_predict(
                             predictor, 0, 3, Method::MVM, rng)),
                         doctest::Contains("view 0"), std::runtime_error);
    Rng rng2(36);
    int call = 0;
    auto flaky = [&](std::size_t, Rng&) -> PredictionVector {
      if (++call == 2) throw std::runtime_error("backend unavailable");
      return vec({0.8, 0.2});
    };
    CHECK_THROWS_WITH_AS(static_cast<void>(multiview_predict(
                             flaky, 0, 3, Method::MVM, rng2)),
                         doctest::Contains("view 1"), std::runtime_error);
    Rng rng3(37);
    CHECK_THROWS_AS(static_cast<void>(multiview_predict(
                        [](std::size_t, Rng&) { return vec({0.8, 0.2}); }, 0,
                        0, Method::MVM, rng3)),
                    std::invalid_argument);
  }
}

TEST_CASE("method names round-trip") {
  CHECK(to_string(Method::MVM) == "mvm");
  CHECK(to_string(Method::MVWCoS) == "mvwcos");
  CHECK(method_from_string("mvm") == Method::MVM);
  CHECK(method_from_string("mvwcos") == Method::MVWCoS);
  CHECK_THROWS_AS(method_from_string("majority"), std::invalid_argument);
}
