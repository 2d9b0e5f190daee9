#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "imbens/dataset.hpp"
#include "imbens/random.hpp"

namespace imbens {

enum class TargetMode { UnderToMinority, OverToMajority, Explicit };

/// User-facing resampling request (`target_label` / `n_target_samples`).
struct TargetRequest {
  std::optional<int> target_label;
  std::optional<std::size_t> n_target_samples;
  std::optional<ClassCounts> per_class;

  bool empty() const { return !target_label && !n_target_samples && !per_class; }
};

/// Turns a mode plus optional user request into concrete per-class targets.
///
/// UnderToMinority / OverToMajority apply the min/max rule to every class, or
/// only to `target_label` when one is given. Explicit mode needs either a
/// scalar count with a label, or a per-class map (missing classes keep their
/// current counts); when both are given they must agree.
SamplingTargets resolve_sampling_targets(const ClassDistribution& dist, TargetMode mode,
                                         const TargetRequest& request = {});

/// Throws unless `targets` has an entry for exactly the classes of `dist`
/// and at least one positive target.
void validate_targets(const ClassDistribution& dist, const SamplingTargets& targets);

/// Origin of one interpolated row: seed + u * (neighbor - seed).
struct SyntheticRecord {
  std::size_t seed_row = 0;
  std::size_t neighbor_row = 0;
  double gap = 0.0;
};

/// Output rows are the kept source rows (in `kept_indices` order) followed by
/// the synthetic rows (in `synthetic` order).
struct ResampleTrace {
  std::vector<std::size_t> kept_indices;
  std::size_t synthetic_count = 0;
  std::vector<SyntheticRecord> synthetic;
};

struct ResampleResult {
  Dataset data;
  ResampleTrace trace;
};

ResampleResult random_under_sample(const Dataset& dataset, const SamplingTargets& targets, bool with_replacement,
                                   Seed seed);

/// Keeps every original row and fills each class deficit by duplication.
ResampleResult random_over_sample(const Dataset& dataset, const SamplingTargets& targets, Seed seed);

/// SMOTE. k shrinks to the available same-class neighbors; single-sample
/// classes fall back to duplication.
ResampleResult smote_sample(const Dataset& dataset, const SamplingTargets& targets, std::size_t k_neighbors,
                            Seed seed);

struct KMeansResult {
  std::vector<std::size_t> assignment;
  Matrix centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding, at most 100 iterations, stopping
/// once the relative inertia change drops below 1e-4.
KMeansResult kmeans(const Matrix& points, std::size_t n_clusters, Seed seed);

ResampleResult kmeans_smote_sample(const Dataset& dataset, const SamplingTargets& targets, std::size_t n_clusters,
                                   std::size_t k_neighbors, double imbalance_ratio_threshold, Seed seed);

/// Per-bin sample budgets proportional to 1 / (bin_mean + alpha), capped at
/// each bin's population and rounded to hit `target` exactly. Empty bins get 0.
std::vector<std::size_t> allocate_bin_budgets(std::span<const std::size_t> bin_sizes,
                                              std::span<const double> bin_means, double alpha, std::size_t target);

/// Hardness-binned under-sampling (self-paced). `hardness` has one entry per
/// row, each in [0, 1].
ResampleResult self_paced_under_sample(const Dataset& dataset, const SamplingTargets& targets,
                                       std::span<const double> hardness, std::size_t k_bins, double alpha, Seed seed);

/// k nearest rows to each row of `pool` among `pool` itself (self excluded),
/// by Euclidean distance, ties broken by lower row index.
std::vector<std::vector<std::size_t>> nearest_neighbors(const Matrix& features, std::span<const std::size_t> pool,
                                                        std::size_t k);

}  // namespace imbens
