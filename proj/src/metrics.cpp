#include "imbens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "imbens/error.hpp"

namespace imbens {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes, std::vector<std::size_t> row_major)
    : k_(n_classes), counts_(std::move(row_major)) {
  if (counts_.size() != k_ * k_) {
    fail("ShapeMismatch", ErrorKind::Usage, "confusion matrix needs K*K entries");
  }
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (auto c : counts_) n += c;
  return n;
}

std::size_t ConfusionMatrix::support(std::size_t truth) const {
  std::size_t n = 0;
  for (std::size_t j = 0; j < k_; ++j) n += at(truth, j);
  return n;
}

std::size_t ConfusionMatrix::predicted(std::size_t pred) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < k_; ++i) n += at(i, pred);
  return n;
}

ConfusionMatrix confusion_matrix(std::span<const int> y_true, std::span<const int> y_pred, std::size_t n_classes) {
  if (y_true.size() != y_pred.size() || y_true.empty()) {
    fail("LengthMismatch", ErrorKind::Data,
         "label sequences must be nonempty and equally long (" + std::to_string(y_true.size()) + " vs " +
             std::to_string(y_pred.size()) + ")");
  }
  ConfusionMatrix cm(n_classes);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int t = y_true[i];
    const int p = y_pred[i];
    if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes || static_cast<std::size_t>(p) >= n_classes) {
      fail("LabelOutOfRange", ErrorKind::Data, "label outside [0, " + std::to_string(n_classes) + ")");
    }
    ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

namespace {

std::vector<double> recalls(const ConfusionMatrix& cm) {
  if (cm.n_classes() == 0) {
    fail("LengthMismatch", ErrorKind::Data, "empty confusion matrix");
  }
  std::vector<double> out(cm.n_classes());
  for (std::size_t c = 0; c < cm.n_classes(); ++c) {
    const auto support = cm.support(c);
    if (support == 0) {
      fail("AbsentTrueClass", ErrorKind::Data, "class " + std::to_string(c) + " has no true samples");
    }
    out[c] = static_cast<double>(cm.at(c, c)) / static_cast<double>(support);
  }
  return out;
}

}  // namespace

double balanced_accuracy(const ConfusionMatrix& cm) {
  const auto r = recalls(cm);
  double sum = 0.0;
  for (double v : r) sum += v;
  return sum / static_cast<double>(r.size());
}

double macro_fscore(const ConfusionMatrix& cm) {
  const auto r = recalls(cm);
  double sum = 0.0;
  for (std::size_t c = 0; c < r.size(); ++c) {
    const auto predicted = cm.predicted(c);
    const double precision = predicted == 0 ? 0.0 : static_cast<double>(cm.at(c, c)) / static_cast<double>(predicted);
    const double denom = precision + r[c];
    sum += denom == 0.0 ? 0.0 : 2.0 * precision * r[c] / denom;
  }
  return sum / static_cast<double>(r.size());
}

double macro_gmean(const ConfusionMatrix& cm) {
  const auto r = recalls(cm);
  double product = 1.0;
  for (double v : r) product *= v;
  return std::pow(product, 1.0 / static_cast<double>(r.size()));
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) {
    fail("LengthMismatch", ErrorKind::Data, "empty confusion matrix");
  }
  std::size_t hits = 0;
  for (std::size_t c = 0; c < cm.n_classes(); ++c) hits += cm.at(c, c);
  return static_cast<double>(hits) / static_cast<double>(total);
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"balanced_acc", "macro_f1", "macro_gmean", "accuracy"};
  return names;
}

bool is_metric(const std::string& name) {
  const auto& names = metric_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

double compute_metric(const std::string& name, const ConfusionMatrix& cm) {
  if (name == "balanced_acc") return balanced_accuracy(cm);
  if (name == "macro_f1") return macro_fscore(cm);
  if (name == "macro_gmean") return macro_gmean(cm);
  if (name == "accuracy") return accuracy(cm);
  fail("UnknownMetric", ErrorKind::Usage, "unknown metric '" + name + "'");
}

std::string format_3dp(double value) {
  // Round in integer thousandths first so printf never sees a half-way case.
  const double thousandths = std::floor(value * 1000.0 + 0.5);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", thousandths / 1000.0);
  return buf;
}

std::string evaluate_print(const std::string& name, const ConfusionMatrix& cm) {
  return name + " balanced Acc: " + format_3dp(balanced_accuracy(cm)) + " | macro Fscore: " +
         format_3dp(macro_fscore(cm)) + " | macro Gmean: " + format_3dp(macro_gmean(cm));
}

std::string evaluate_print(const std::string& name, std::span<const int> y_true, std::span<const int> y_pred) {
  int max_label = 0;
  for (int y : y_true) max_label = std::max(max_label, y);
  for (int y : y_pred) max_label = std::max(max_label, y);
  return evaluate_print(name, confusion_matrix(y_true, y_pred, static_cast<std::size_t>(max_label) + 1));
}

}  // namespace imbens
