#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "imbens/metrics.hpp"
#include "imbens/random.hpp"
#include "test_support.hpp"

using namespace imbens;
using testing::error_name;

namespace {

struct Triple {
  double bacc;
  double f1;
  double gmean;
};

// Direct enumeration over the label pairs, no confusion matrix.
Triple brute_force(const std::vector<int>& y, const std::vector<int>& p, int k) {
  double recall_sum = 0.0;
  double recall_prod = 1.0;
  double f1_sum = 0.0;
  for (int c = 0; c < k; ++c) {
    double tp = 0, support = 0, predicted = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      tp += (y[i] == c && p[i] == c);
      support += (y[i] == c);
      predicted += (p[i] == c);
    }
    const double recall = tp / support;
    const double precision = predicted > 0 ? tp / predicted : 0.0;
    recall_sum += recall;
    recall_prod *= recall;
    f1_sum += precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  }
  return {recall_sum / k, f1_sum / k, std::pow(recall_prod, 1.0 / k)};
}

}  // namespace

TEST_CASE("confusion matrix tallies") {
  const std::vector<int> y{0, 1};
  CHECK(confusion_matrix(y, y, 2).row_major() == std::vector<std::size_t>{1, 0, 0, 1});
  const std::vector<int> t{0, 0, 1, 1};
  const std::vector<int> p{0, 1, 1, 1};
  const auto cm = confusion_matrix(t, p, 2);
  CHECK(cm.row_major() == std::vector<std::size_t>{1, 1, 0, 2});
  CHECK(cm.total() == 4);
  CHECK(error_name([] { confusion_matrix(std::vector<int>{}, std::vector<int>{}, 2); }) == "LengthMismatch");
  CHECK(error_name([&] { confusion_matrix(t, std::vector<int>{0}, 2); }) == "LengthMismatch");
  CHECK(error_name([&] { confusion_matrix(t, std::vector<int>{0, 0, 2, 1}, 2); }) == "LabelOutOfRange");
}

TEST_CASE("hand-computed metrics on [[1,1],[0,2]]") {
  const ConfusionMatrix cm(2, {1, 1, 0, 2});
  CHECK(balanced_accuracy(cm) == doctest::Approx(0.75));
  CHECK(macro_fscore(cm) == doctest::Approx((2.0 / 3.0 + 4.0 / 5.0) / 2.0));
  CHECK(macro_gmean(cm) == doctest::Approx(std::sqrt(0.5)));
  CHECK(evaluate_print("T", cm) == "T balanced Acc: 0.750 | macro Fscore: 0.733 | macro Gmean: 0.707");
}

TEST_CASE("identity and degenerate matrices") {
  const ConfusionMatrix id(3, {4, 0, 0, 0, 2, 0, 0, 0, 7});
  CHECK(balanced_accuracy(id) == 1.0);
  CHECK(macro_fscore(id) == 1.0);
  CHECK(macro_gmean(id) == 1.0);
  const std::vector<int> y{0, 1, 2};
  CHECK(evaluate_print("M", y, y) == "M balanced Acc: 1.000 | macro Fscore: 1.000 | macro Gmean: 1.000");

  const ConfusionMatrix one_class(2, {5, 0, 5, 0});
  CHECK(macro_fscore(one_class) == doctest::Approx(1.0 / 3.0));
  CHECK(macro_gmean(one_class) == 0.0);
  CHECK(error_name([] { balanced_accuracy(ConfusionMatrix(2, {3, 0, 0, 0})); }) == "AbsentTrueClass");
  CHECK(error_name([] { macro_gmean(ConfusionMatrix(2, {0, 0, 1, 1})); }) == "AbsentTrueClass");
}

TEST_CASE("metrics match brute-force enumeration") {
  Rng rng(Seed{1234});
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = std::vector<int>{2, 3, 5}[trial % 3];
    const std::size_t n = static_cast<std::size_t>(k) + rng.index(60);
    std::vector<int> y(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i < static_cast<std::size_t>(k) ? static_cast<int>(i) : static_cast<int>(rng.index(k));
      p[i] = rng.uniform() < 0.6 ? y[i] : static_cast<int>(rng.index(k));
    }
    const auto cm = confusion_matrix(y, p, k);
    const auto expect = brute_force(y, p, k);
    CHECK(std::abs(balanced_accuracy(cm) - expect.bacc) <= 1e-12);
    CHECK(std::abs(macro_fscore(cm) - expect.f1) <= 1e-12);
    CHECK(std::abs(macro_gmean(cm) - expect.gmean) <= 1e-12);
    CHECK(balanced_accuracy(cm) >= macro_gmean(cm) - 1e-15);

    // Relabeling classes consistently changes nothing.
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<int> y2(n), p2(n);
    for (std::size_t i = 0; i < n; ++i) {
      y2[i] = perm[y[i]];
      p2[i] = perm[p[i]];
    }
    const auto cm2 = confusion_matrix(y2, p2, k);
    CHECK(balanced_accuracy(cm2) == doctest::Approx(balanced_accuracy(cm)).epsilon(1e-12));
    CHECK(macro_fscore(cm2) == doctest::Approx(macro_fscore(cm)).epsilon(1e-12));
    CHECK(macro_gmean(cm2) == doctest::Approx(macro_gmean(cm)).epsilon(1e-12));
  }
}

TEST_CASE("random guessing on balanced data scores about 1/K") {
  Rng rng(Seed{5});
  for (int k : {2, 3, 5}) {
    std::vector<int> y(10000), p(10000);
    for (std::size_t i = 0; i < y.size(); ++i) {
      y[i] = static_cast<int>(i % k);
      p[i] = static_cast<int>(rng.index(k));
    }
    CHECK(std::abs(balanced_accuracy(confusion_matrix(y, p, k)) - 1.0 / k) <= 0.05);
  }
}

TEST_CASE("metric registry and rounding") {
  CHECK(metric_names() == std::vector<std::string>{"balanced_acc", "macro_f1", "macro_gmean", "accuracy"});
  const ConfusionMatrix cm(2, {1, 1, 0, 2});
  CHECK(compute_metric("accuracy", cm) == 0.75);
  CHECK(error_name([&] { compute_metric("auc", cm); }) == "UnknownMetric");
  CHECK(format_3dp(0.0005) == "0.001");
  CHECK(format_3dp(0.9724) == "0.972");
  CHECK(format_3dp(1.0) == "1.000");
}
