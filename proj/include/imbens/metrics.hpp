#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace imbens {

/// counts[i][j]: samples of true class i predicted as j.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t n_classes) : k_(n_classes), counts_(n_classes * n_classes, 0) {}
  ConfusionMatrix(std::size_t n_classes, std::vector<std::size_t> row_major);

  std::size_t n_classes() const noexcept { return k_; }
  std::size_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * k_ + pred]; }
  std::size_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * k_ + pred]; }
  std::size_t total() const;
  std::size_t support(std::size_t truth) const;
  std::size_t predicted(std::size_t pred) const;
  const std::vector<std::size_t>& row_major() const noexcept { return counts_; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes);

/// Mean per-class recall.
double balanced_accuracy(const ConfusionMatrix& cm);

/// Mean per-class F1; a never-predicted class has precision 0.
double macro_fscore(const ConfusionMatrix& cm);

/// K-th root of the product of per-class recalls.
double macro_gmean(const ConfusionMatrix& cm);

double accuracy(const ConfusionMatrix& cm);

/// Registry names: "balanced_acc", "macro_f1", "macro_gmean", "accuracy".
const std::vector<std::string>& metric_names();
bool is_metric(const std::string& name);
/// Throws UnknownMetric for names outside the registry.
double compute_metric(const std::string& name, const ConfusionMatrix& cm);

/// "<name> balanced Acc: 0.972 | macro Fscore: 0.886 | macro Gmean: 0.972"
std::string evaluate_print(const std::string& name, std::span<const int> y_true, std::span<const int> y_pred);
std::string evaluate_print(const std::string& name, const ConfusionMatrix& cm);

/// Half-up rounding to three decimals, formatted with exactly three digits.
std::string format_3dp(double value);

}  // namespace imbens
