#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "imbens/dataset.hpp"
#include "imbens/matrix.hpp"
#include "imbens/random.hpp"

namespace imbens {

enum class MaxFeatures { All, Sqrt, Count };

struct TreeParams {
  std::optional<std::size_t> max_depth = 10;
  std::size_t min_samples_leaf = 1;
  MaxFeatures max_features = MaxFeatures::All;
  std::size_t max_features_count = 0;  // used when max_features == Count

  static TreeParams stump() {
    TreeParams p;
    p.max_depth = 1;
    return p;
  }
};

/// Internal node when `feature >= 0` (x[feature] <= threshold goes left),
/// leaf otherwise.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> proba;

  bool is_leaf() const noexcept { return feature < 0; }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class FittedTree {
 public:
  FittedTree() = default;

  /// Validates structure: children in range, finite thresholds, leaf vectors
  /// of length n_classes summing to 1.
  FittedTree(std::vector<TreeNode> nodes, std::size_t n_classes, std::size_t n_features);

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t n_classes() const noexcept { return n_classes_; }
  std::size_t n_features() const noexcept { return n_features_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

  /// Leaf probability vector for one row (no width check).
  std::span<const double> leaf_proba(std::span<const double> row) const;

  friend bool operator==(const FittedTree&, const FittedTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t n_classes_ = 0;
  std::size_t n_features_ = 0;
};

/// Greedy weighted-Gini CART. Zero-weight rows are ignored entirely; ties
/// between equal-gain splits go to the lowest feature, then lowest threshold.
FittedTree fit_tree(const Dataset& dataset, std::span<const double> sample_weights, const TreeParams& params,
                    Seed seed);

/// Unit-weight convenience overload.
FittedTree fit_tree(const Dataset& dataset, const TreeParams& params, Seed seed);

/// n x K matrix of leaf probabilities. Throws ShapeMismatch on width mismatch.
Matrix tree_predict_proba(const FittedTree& tree, const Matrix& features);

/// Argmax of the leaf probabilities, lowest class on ties.
std::vector<int> tree_predict(const FittedTree& tree, const Matrix& features);

/// Lowest index of the maximum entry.
int argmax(std::span<const double> values);

}  // namespace imbens
