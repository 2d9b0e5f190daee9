#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "imbens/matrix.hpp"
#include "imbens/random.hpp"

namespace imbens {

using ClassCounts = std::map<int, std::size_t>;

/// Per-class sample tally of a label sequence. Only classes that occur are
/// listed, so every entry is >= 1.
struct ClassDistribution {
  ClassCounts counts;

  std::size_t total() const;
  std::size_t count(int label) const;
  std::size_t min_count() const;
  std::size_t max_count() const;
  /// Smallest class (lowest id on ties).
  int minority_class() const;
  /// Largest class (lowest id on ties).
  int majority_class() const;

  friend bool operator==(const ClassDistribution&, const ClassDistribution&) = default;
};

/// Desired per-class sample counts for a resampling step.
struct SamplingTargets {
  ClassCounts targets;

  std::size_t at(int label) const;
  std::size_t total() const;

  friend bool operator==(const SamplingTargets&, const SamplingTargets&) = default;
};

/// Feature matrix plus integer class ids in [0, n_classes).
class Dataset {
 public:
  Dataset() = default;

  /// n_classes == 0 infers max(label) + 1. Throws InvalidDataset on shape
  /// mismatch, out-of-range labels or non-finite features.
  Dataset(Matrix features, std::vector<int> labels, std::size_t n_classes = 0,
          std::vector<std::string> class_names = {});

  const Matrix& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t n_features() const noexcept { return features_.cols(); }
  std::size_t n_classes() const noexcept { return n_classes_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  /// Display name of a class: the stored name, or the decimal id.
  std::string class_name(int label) const;

  Dataset subset(std::span<const std::size_t> rows) const;

  /// Throws unless every class in [0, n_classes) is present and n_classes >= 2.
  void require_fittable() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  Matrix features_;
  std::vector<int> labels_;
  std::size_t n_classes_ = 0;
  std::vector<std::string> class_names_;
};

/// Throws EmptyDataset on empty input.
ClassDistribution class_distribution(std::span<const int> labels);

/// Indices of rows per class, ascending.
std::map<int, std::vector<std::size_t>> rows_by_class(std::span<const int> labels);

struct GenerateOptions {
  std::size_t n_samples = 200;
  std::vector<double> class_weights{0.9, 0.1};
  std::size_t n_features = 2;
  double test_fraction = 0.5;
  Seed seed{};
};

/// Per-class totals from weights (normalized, largest-remainder rounding).
std::vector<std::size_t> allocate_class_totals(std::size_t n_samples, std::span<const double> class_weights);

/// Gaussian cluster means, one per class, pairwise distance 3.0 when the
/// feature space has room for a regular simplex.
Matrix cluster_means(std::size_t n_classes, std::size_t n_features, Seed seed);

/// Synthetic imbalanced classification data: one unit-covariance Gaussian
/// cluster per class, split stratified into (train, test).
std::pair<Dataset, Dataset> generate_imbalance_data(const GenerateOptions& options);

/// Subsample without replacement down to exactly `target_counts`, keeping
/// the original relative row order.
Dataset make_imbalance(const Dataset& dataset, const SamplingTargets& target_counts, Seed seed);

/// Returns (train, test). Both parts keep the original relative row order.
std::pair<Dataset, Dataset> train_test_split(const Dataset& dataset, double test_fraction, bool stratified,
                                             Seed seed);

/// Half-up rounding to the nearest integer.
long long round_half_up(double x);

/// Rounds nonnegative real shares so they sum to `total` exactly. Remaining
/// units go to the largest fractional parts, lowest index first on ties.
std::vector<std::size_t> largest_remainder(std::span<const double> shares, std::size_t total);

}  // namespace imbens
