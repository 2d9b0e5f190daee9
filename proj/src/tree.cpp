#include "imbens/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "imbens/error.hpp"

namespace imbens {

namespace {

// Gains closer than this (relative to node weight) count as ties.
constexpr double kGainTolerance = 1e-12;

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, std::span<const double> weights, const TreeParams& params, Seed seed)
      : data_(data), weights_(weights), params_(params), rng_(seed), k_(data.n_classes()) {}

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::size_t> rows, std::size_t depth) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.emplace_back();

    std::vector<double> class_weight(k_, 0.0);
    for (std::size_t r : rows) class_weight[static_cast<std::size_t>(data_.labels()[r])] += weights_[r];
    const double total = std::accumulate(class_weight.begin(), class_weight.end(), 0.0);

    const auto populated = std::count_if(class_weight.begin(), class_weight.end(), [](double w) { return w > 0.0; });
    const bool depth_reached = params_.max_depth && depth >= *params_.max_depth;
    const bool too_small = rows.size() < 2 * params_.min_samples_leaf;

    SplitChoice split;
    if (populated > 1 && !depth_reached && !too_small) {
      split = best_split(rows, class_weight, total);
    }
    if (split.feature < 0) {
      for (double& w : class_weight) w /= total;
      nodes_[static_cast<std::size_t>(id)].proba = std::move(class_weight);
      return id;
    }

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : rows) {
      (data_.features()(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left_rows : right_rows)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    const int left = grow(std::move(left_rows), depth + 1);
    const int right = grow(std::move(right_rows), depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = left;
    node.right = right;
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    const std::size_t d = data_.n_features();
    std::size_t m = d;
    switch (params_.max_features) {
      case MaxFeatures::All: return iota(d);
      case MaxFeatures::Sqrt: m = std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(d)))); break;
      case MaxFeatures::Count: m = std::clamp<std::size_t>(params_.max_features_count, 1, d); break;
    }
    if (m >= d) return iota(d);
    auto picked = rng_.sample_without_replacement(d, m);
    std::sort(picked.begin(), picked.end());
    return picked;
  }

  static std::vector<std::size_t> iota(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), std::size_t{0});
    return v;
  }

  static double sum_sq(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
  }

  SplitChoice best_split(const std::vector<std::size_t>& rows, const std::vector<double>& class_weight, double total) {
    SplitChoice best;
    const double parent_term = sum_sq(class_weight) / total;
    const double tolerance = kGainTolerance * total;
    const std::size_t n = rows.size();
    const std::size_t min_leaf = params_.min_samples_leaf;

    std::vector<std::pair<double, std::size_t>> sorted(n);
    std::vector<double> left(k_);
    std::vector<double> right(k_);
    for (std::size_t f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) sorted[i] = {data_.features()(rows[i], f), rows[i]};
      std::sort(sorted.begin(), sorted.end());
      std::fill(left.begin(), left.end(), 0.0);
      right = class_weight;
      double left_total = 0.0;
      for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t r = sorted[i].second;
        const auto y = static_cast<std::size_t>(data_.labels()[r]);
        left[y] += weights_[r];
        right[y] -= weights_[r];
        left_total += weights_[r];
        const double v = sorted[i].first;
        const double next = sorted[i + 1].first;
        if (!(v < next)) continue;
        if (i + 1 < min_leaf || n - i - 1 < min_leaf) continue;
        const double right_total = total - left_total;
        if (left_total <= 0.0 || right_total <= 0.0) continue;
        const double gain = sum_sq(left) / left_total + sum_sq(right) / right_total - parent_term;
        if (best.feature < 0 || gain > best.gain + tolerance) {
          double mid = v + (next - v) / 2.0;
          if (!(mid < next)) mid = v;
          best = {static_cast<int>(f), mid, gain};
        }
      }
    }
    return best;
  }

  const Dataset& data_;
  std::span<const double> weights_;
  const TreeParams& params_;
  Rng rng_;
  std::size_t k_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

FittedTree::FittedTree(std::vector<TreeNode> nodes, std::size_t n_classes, std::size_t n_features)
    : nodes_(std::move(nodes)), n_classes_(n_classes), n_features_(n_features) {
  if (nodes_.empty()) {
    fail("InvalidTree", ErrorKind::Data, "tree has no nodes");
  }
  const int count = static_cast<int>(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    const int self = static_cast<int>(i);
    if (node.is_leaf()) {
      if (node.proba.size() != n_classes_) {
        fail("InvalidTree", ErrorKind::Data, "leaf " + std::to_string(i) + " has the wrong probability width");
      }
      double sum = 0.0;
      for (double p : node.proba) {
        if (!(p >= 0.0) || !std::isfinite(p)) fail("InvalidTree", ErrorKind::Data, "negative leaf probability");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        fail("InvalidTree", ErrorKind::Data, "leaf " + std::to_string(i) + " probabilities do not sum to 1");
      }
    } else {
      if (static_cast<std::size_t>(node.feature) >= n_features_ || !std::isfinite(node.threshold)) {
        fail("InvalidTree", ErrorKind::Data, "node " + std::to_string(i) + " has an invalid split");
      }
      // Children always follow their parent, so routing terminates.
      if (node.left <= self || node.right <= self || node.left >= count || node.right >= count) {
        fail("InvalidTree", ErrorKind::Data, "node " + std::to_string(i) + " has invalid children");
      }
    }
  }
}

std::size_t FittedTree::depth() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, depth[i]);
    if (!nodes_[i].is_leaf()) {
      depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
    }
  }
  return best;
}

std::size_t FittedTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::span<const double> FittedTree::leaf_proba(std::span<const double> row) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right);
  }
  return nodes_[i].proba;
}

FittedTree fit_tree(const Dataset& dataset, std::span<const double> sample_weights, const TreeParams& params,
                    Seed seed) {
  if (sample_weights.size() != dataset.size()) {
    fail("ShapeMismatch", ErrorKind::Usage, "sample weight count must equal the dataset size");
  }
  if (params.max_depth && *params.max_depth == 0) {
    fail("InvalidParameter", ErrorKind::Usage, "max_depth must be >= 1");
  }
  if (params.min_samples_leaf == 0) {
    fail("InvalidParameter", ErrorKind::Usage, "min_samples_leaf must be >= 1");
  }
  double total = 0.0;
  std::vector<std::size_t> rows;
  rows.reserve(dataset.size());
  for (std::size_t i = 0; i < sample_weights.size(); ++i) {
    const double w = sample_weights[i];
    if (!(w >= 0.0) || !std::isfinite(w)) {
      fail("DegenerateWeights", ErrorKind::Runtime, "sample weights must be finite and nonnegative");
    }
    if (w > 0.0) rows.push_back(i);
    total += w;
  }
  if (!(total > 0.0)) {
    fail("DegenerateWeights", ErrorKind::Runtime, "total sample weight must be positive");
  }
  TreeBuilder builder(dataset, sample_weights, params, seed);
  return FittedTree(builder.build(std::move(rows)), dataset.n_classes(), dataset.n_features());
}

FittedTree fit_tree(const Dataset& dataset, const TreeParams& params, Seed seed) {
  const std::vector<double> ones(dataset.size(), 1.0);
  return fit_tree(dataset, ones, params, seed);
}

Matrix tree_predict_proba(const FittedTree& tree, const Matrix& features) {
  if (features.cols() != tree.n_features()) {
    fail("ShapeMismatch", ErrorKind::Data,
         "expected " + std::to_string(tree.n_features()) + " features, got " + std::to_string(features.cols()));
  }
  Matrix out(features.rows(), tree.n_classes());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto p = tree.leaf_proba(features.row(i));
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

std::vector<int> tree_predict(const FittedTree& tree, const Matrix& features) {
  const Matrix proba = tree_predict_proba(tree, features);
  std::vector<int> out(proba.rows());
  for (std::size_t i = 0; i < proba.rows(); ++i) out[i] = argmax(proba.row(i));
  return out;
}

int argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return static_cast<int>(best);
}

}  // namespace imbens
