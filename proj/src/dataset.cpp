#include "imbens/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "imbens/error.hpp"

namespace imbens {

// ---------------------------------------------------------------------------
// Matrix

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    fail("ShapeMismatch", ErrorKind::Data, "matrix data size does not match rows x cols");
  }
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) {
    cols_ = values.size();
  }
  if (values.size() != cols_) {
    fail("ShapeMismatch", ErrorKind::Data, "row width does not match matrix width");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto src = row(indices[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distributions

std::size_t ClassDistribution::total() const {
  std::size_t n = 0;
  for (const auto& [label, c] : counts) n += c;
  return n;
}

std::size_t ClassDistribution::count(int label) const {
  const auto it = counts.find(label);
  return it == counts.end() ? 0 : it->second;
}

std::size_t ClassDistribution::min_count() const {
  std::size_t m = std::numeric_limits<std::size_t>::max();
  for (const auto& [label, c] : counts) m = std::min(m, c);
  return counts.empty() ? 0 : m;
}

std::size_t ClassDistribution::max_count() const {
  std::size_t m = 0;
  for (const auto& [label, c] : counts) m = std::max(m, c);
  return m;
}

int ClassDistribution::minority_class() const {
  int best = -1;
  std::size_t best_count = 0;
  for (const auto& [label, c] : counts) {
    if (best < 0 || c < best_count) {
      best = label;
      best_count = c;
    }
  }
  return best;
}

int ClassDistribution::majority_class() const {
  int best = -1;
  std::size_t best_count = 0;
  for (const auto& [label, c] : counts) {
    if (best < 0 || c > best_count) {
      best = label;
      best_count = c;
    }
  }
  return best;
}

std::size_t SamplingTargets::at(int label) const {
  const auto it = targets.find(label);
  if (it == targets.end()) {
    fail("UnknownClass", ErrorKind::Usage, "no sampling target for class " + std::to_string(label));
  }
  return it->second;
}

std::size_t SamplingTargets::total() const {
  std::size_t n = 0;
  for (const auto& [label, c] : targets) n += c;
  return n;
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(Matrix features, std::vector<int> labels, std::size_t n_classes,
                 std::vector<std::string> class_names)
    : features_(std::move(features)), labels_(std::move(labels)), n_classes_(n_classes),
      class_names_(std::move(class_names)) {
  if (features_.rows() != labels_.size()) {
    fail("InvalidDataset", ErrorKind::Data,
         "feature rows (" + std::to_string(features_.rows()) + ") != labels (" + std::to_string(labels_.size()) + ")");
  }
  if (n_classes_ == 0) {
    int max_label = -1;
    for (int y : labels_) max_label = std::max(max_label, y);
    n_classes_ = static_cast<std::size_t>(max_label + 1);
    n_classes_ = std::max(n_classes_, class_names_.size());
  }
  if (!class_names_.empty() && class_names_.size() != n_classes_) {
    fail("InvalidDataset", ErrorKind::Data, "class_names length must equal the class count");
  }
  for (int y : labels_) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes_) {
      fail("InvalidDataset", ErrorKind::Data, "label " + std::to_string(y) + " outside [0, n_classes)");
    }
  }
  for (double v : features_.data()) {
    if (!std::isfinite(v)) {
      fail("InvalidDataset", ErrorKind::Data, "non-finite feature value");
    }
  }
}

std::string Dataset::class_name(int label) const {
  if (!class_names_.empty()) return class_names_.at(static_cast<std::size_t>(label));
  return std::to_string(label);
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t r : rows) labels.push_back(labels_[r]);
  Dataset out;
  out.features_ = features_.select_rows(rows);
  out.labels_ = std::move(labels);
  out.n_classes_ = n_classes_;
  out.class_names_ = class_names_;
  return out;
}

void Dataset::require_fittable() const {
  if (labels_.empty()) {
    fail("EmptyDataset", ErrorKind::Data, "dataset has no rows");
  }
  if (n_classes_ < 2) {
    fail("InsufficientClasses", ErrorKind::Data, "fitting needs at least 2 classes");
  }
  std::vector<bool> seen(n_classes_, false);
  for (int y : labels_) seen[static_cast<std::size_t>(y)] = true;
  for (std::size_t c = 0; c < n_classes_; ++c) {
    if (!seen[c]) {
      fail("InsufficientClasses", ErrorKind::Data, "class " + std::to_string(c) + " has no samples");
    }
  }
}

ClassDistribution class_distribution(std::span<const int> labels) {
  if (labels.empty()) {
    fail("EmptyDataset", ErrorKind::Data, "cannot tally an empty label sequence");
  }
  ClassDistribution dist;
  for (int y : labels) ++dist.counts[y];
  return dist;
}

std::map<int, std::vector<std::size_t>> rows_by_class(std::span<const int> labels) {
  std::map<int, std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
  return out;
}

long long round_half_up(double x) { return static_cast<long long>(std::floor(x + 0.5)); }

std::vector<std::size_t> largest_remainder(std::span<const double> shares, std::size_t total) {
  std::vector<std::size_t> out(shares.size(), 0);
  std::vector<double> frac(shares.size(), 0.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const double f = std::floor(shares[i]);
    out[i] = static_cast<std::size_t>(f);
    frac[i] = shares[i] - f;
    assigned += out[i];
  }
  std::vector<std::size_t> order(shares.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
  for (std::size_t i = 0; assigned < total && !order.empty(); i = (i + 1) % order.size()) {
    ++out[order[i]];
    ++assigned;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generation and reshaping

std::vector<std::size_t> allocate_class_totals(std::size_t n_samples, std::span<const double> class_weights) {
  if (class_weights.empty()) {
    fail("InvalidWeights", ErrorKind::Usage, "class weights must be nonempty");
  }
  double sum = 0.0;
  for (double w : class_weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      fail("InvalidWeights", ErrorKind::Usage, "class weights must be positive and finite");
    }
    sum += w;
  }
  std::vector<double> shares;
  shares.reserve(class_weights.size());
  for (double w : class_weights) shares.push_back(static_cast<double>(n_samples) * (w / sum));
  return largest_remainder(shares, n_samples);
}

namespace {

constexpr double kClusterSeparation = 3.0;

// In-place Gram-Schmidt on the rows of `m`; rows that collapse are left zero.
void orthonormalize_rows(std::vector<std::vector<double>>& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double dot = std::inner_product(m[i].begin(), m[i].end(), m[j].begin(), 0.0);
      for (std::size_t k = 0; k < m[i].size(); ++k) m[i][k] -= dot * m[j][k];
    }
    const double norm = std::sqrt(std::inner_product(m[i].begin(), m[i].end(), m[i].begin(), 0.0));
    if (norm > 1e-12) {
      for (double& v : m[i]) v /= norm;
    } else {
      std::fill(m[i].begin(), m[i].end(), 0.0);
    }
  }
}

}  // namespace

Matrix cluster_means(std::size_t n_classes, std::size_t n_features, Seed seed) {
  Matrix means(n_classes, n_features);
  if (n_classes < 2 || n_features == 0) return means;

  // Regular simplex: scaled basis vectors of R^K, centered, then expressed in
  // an orthonormal basis of their (K-1)-dimensional span.
  const std::size_t k = n_classes;
  const double scale = kClusterSeparation / std::sqrt(2.0);
  std::vector<std::vector<double>> vertices(k, std::vector<double>(k, -scale / static_cast<double>(k)));
  for (std::size_t c = 0; c < k; ++c) vertices[c][c] += scale;

  std::vector<std::vector<double>> basis(vertices.begin(), vertices.end() - 1);
  orthonormalize_rows(basis);

  const std::size_t dim = std::max(n_features, k - 1);
  std::vector<std::vector<double>> coords(k, std::vector<double>(dim, 0.0));
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t b = 0; b + 1 < k; ++b) {
      coords[c][b] = std::inner_product(vertices[c].begin(), vertices[c].end(), basis[b].begin(), 0.0);
    }
  }

  // Seeded random rotation of the simplex.
  Rng rng(derive_seed(seed, "cluster-rotation"));
  std::vector<std::vector<double>> rotation(dim, std::vector<double>(dim));
  for (auto& r : rotation) {
    for (double& v : r) v = rng.normal();
  }
  orthonormalize_rows(rotation);

  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t f = 0; f < n_features; ++f) {
      means(c, f) = std::inner_product(rotation[f].begin(), rotation[f].end(), coords[c].begin(), 0.0);
    }
  }

  if (n_features < k - 1) {
    // Projection shrank some distances; restore the closest pair to the
    // nominal separation.
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        double d2 = 0.0;
        for (std::size_t f = 0; f < n_features; ++f) {
          const double diff = means(a, f) - means(b, f);
          d2 += diff * diff;
        }
        min_dist = std::min(min_dist, std::sqrt(d2));
      }
    }
    if (min_dist > 1e-12) {
      const double factor = kClusterSeparation / min_dist;
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t f = 0; f < n_features; ++f) means(c, f) *= factor;
      }
    }
  }
  return means;
}

std::pair<Dataset, Dataset> generate_imbalance_data(const GenerateOptions& options) {
  if (!(options.test_fraction > 0.0 && options.test_fraction < 1.0)) {
    fail("InvalidFraction", ErrorKind::Usage, "test fraction must lie in (0, 1)");
  }
  const auto totals = allocate_class_totals(options.n_samples, options.class_weights);
  if (options.n_samples < totals.size()) {
    fail("InvalidWeights", ErrorKind::Usage, "n_samples must be at least the number of classes");
  }
  if (options.n_features == 0) {
    fail("InvalidDataset", ErrorKind::Usage, "n_features must be >= 1");
  }
  const std::size_t k = totals.size();
  const Matrix means = cluster_means(k, options.n_features, options.seed);

  Rng rng(derive_seed(options.seed, "samples"));
  Matrix features(options.n_samples, options.n_features);
  std::vector<int> labels;
  labels.reserve(options.n_samples);
  std::size_t r = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < totals[c]; ++i, ++r) {
      for (std::size_t f = 0; f < options.n_features; ++f) features(r, f) = means(c, f) + rng.normal();
      labels.push_back(static_cast<int>(c));
    }
  }

  std::vector<std::size_t> order(options.n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(options.seed, "shuffle"));
  shuffle_rng.shuffle(order);

  Dataset pooled(std::move(features), std::move(labels), k);
  return train_test_split(pooled.subset(order), options.test_fraction, true, derive_seed(options.seed, "split"));
}

Dataset make_imbalance(const Dataset& dataset, const SamplingTargets& target_counts, Seed seed) {
  const auto by_class = rows_by_class(dataset.labels());
  for (const auto& [label, target] : target_counts.targets) {
    if (!by_class.contains(label) && target > 0) {
      fail("UnknownClass", ErrorKind::Usage, "class " + std::to_string(label) + " is not in the dataset");
    }
  }
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (const auto& [label, rows] : by_class) {
    const auto it = target_counts.targets.find(label);
    const std::size_t target = it == target_counts.targets.end() ? rows.size() : it->second;
    if (target > rows.size()) {
      fail("TargetExceedsAvailable", ErrorKind::Usage,
           "class " + std::to_string(label) + " has " + std::to_string(rows.size()) + " rows, target " +
               std::to_string(target));
    }
    for (std::size_t pos : rng.sample_without_replacement(rows.size(), target)) keep.push_back(rows[pos]);
  }
  std::sort(keep.begin(), keep.end());
  return dataset.subset(keep);
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& dataset, double test_fraction, bool stratified,
                                             Seed seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail("InvalidFraction", ErrorKind::Usage, "test fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  std::vector<std::size_t> test;
  std::vector<std::size_t> train;

  auto split_group = [&](std::vector<std::size_t> rows, const std::string& what) {
    if (rows.size() < 2) {
      fail("InsufficientClassSamples", ErrorKind::Data, what + " needs at least 2 samples to split");
    }
    const auto n = static_cast<long long>(rows.size());
    const long long n_test = std::clamp(round_half_up(static_cast<double>(n) * test_fraction), 1LL, n - 1);
    rng.shuffle(rows);
    test.insert(test.end(), rows.begin(), rows.begin() + n_test);
    train.insert(train.end(), rows.begin() + n_test, rows.end());
  };

  if (stratified) {
    for (auto& [label, rows] : rows_by_class(dataset.labels())) {
      split_group(std::move(rows), "class " + std::to_string(label));
    }
  } else {
    std::vector<std::size_t> all(dataset.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    split_group(std::move(all), "dataset");
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {dataset.subset(train), dataset.subset(test)};
}

}  // namespace imbens
