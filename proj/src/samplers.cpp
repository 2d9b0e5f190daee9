#include "imbens/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "imbens/error.hpp"

namespace imbens {

namespace {

std::string cls(int label) { return "class " + std::to_string(label); }

void require_known(const ClassDistribution& dist, int label) {
  if (!dist.counts.contains(label)) {
    fail("UnknownClass", ErrorKind::Usage, cls(label) + " is not present in the data");
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

// Kept rows first, then synthetic rows computed from their records.
ResampleResult assemble(const Dataset& dataset, ResampleTrace trace) {
  trace.synthetic_count = trace.synthetic.size();
  Dataset kept = dataset.subset(trace.kept_indices);
  if (trace.synthetic.empty()) return {std::move(kept), std::move(trace)};

  Matrix features = kept.features();
  std::vector<int> labels = kept.labels();
  const std::size_t width = dataset.n_features();
  if (features.cols() == 0) features = Matrix(0, width);
  std::vector<double> point(width);
  for (const auto& rec : trace.synthetic) {
    const auto a = dataset.features().row(rec.seed_row);
    const auto b = dataset.features().row(rec.neighbor_row);
    for (std::size_t f = 0; f < width; ++f) point[f] = a[f] + rec.gap * (b[f] - a[f]);
    features.append_row(point);
    labels.push_back(dataset.labels()[rec.seed_row]);
  }
  return {Dataset(std::move(features), std::move(labels), dataset.n_classes(), dataset.class_names()),
          std::move(trace)};
}

std::vector<std::size_t> all_rows(const Dataset& dataset) {
  std::vector<std::size_t> rows(dataset.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

void require_oversampling_targets(const ClassDistribution& dist, const SamplingTargets& targets) {
  for (const auto& [label, count] : dist.counts) {
    if (targets.at(label) < count) {
      fail("TargetBelowAvailable", ErrorKind::Runtime,
           cls(label) + " has " + std::to_string(count) + " rows, target " + std::to_string(targets.at(label)) +
               " would require removing rows");
    }
  }
}

// SMOTE over one pool of same-class rows. Single-row pools fall back to
// duplication, recorded as kept rows.
void smote_pool(const Matrix& features, std::span<const std::size_t> pool, std::size_t deficit,
                std::size_t k_neighbors, Rng& rng, ResampleTrace& trace) {
  if (deficit == 0 || pool.empty()) return;
  if (pool.size() == 1) {
    trace.kept_indices.insert(trace.kept_indices.end(), deficit, pool[0]);
    return;
  }
  const std::size_t k = std::min(k_neighbors, pool.size() - 1);
  const auto neighbors = nearest_neighbors(features, pool, k);
  for (std::size_t s = 0; s < deficit; ++s) {
    const std::size_t i = rng.index(pool.size());
    const std::size_t z = neighbors[i][rng.index(k)];
    const double gap = rng.uniform_closed();
    trace.synthetic.push_back({pool[i], z, gap});
  }
}

}  // namespace

SamplingTargets resolve_sampling_targets(const ClassDistribution& dist, TargetMode mode,
                                         const TargetRequest& request) {
  if (dist.counts.empty()) {
    fail("EmptyDataset", ErrorKind::Data, "no classes to resample");
  }
  SamplingTargets out{dist.counts};

  if (mode == TargetMode::Explicit) {
    if (!request.n_target_samples && !request.per_class) {
      fail("InvalidTargets", ErrorKind::Usage, "explicit targets need n_target_samples (count or per-class map)");
    }
    if (request.per_class) {
      for (const auto& [label, count] : *request.per_class) {
        require_known(dist, label);
        out.targets[label] = count;
      }
    }
    if (request.n_target_samples) {
      if (!request.target_label) {
        fail("InvalidTargets", ErrorKind::Usage, "a scalar n_target_samples needs target_label");
      }
      const int label = *request.target_label;
      require_known(dist, label);
      if (request.per_class && request.per_class->contains(label) &&
          request.per_class->at(label) != *request.n_target_samples) {
        fail("ConflictingTargets", ErrorKind::Usage,
             "per-class target for " + cls(label) + " disagrees with n_target_samples");
      }
      out.targets[label] = *request.n_target_samples;
    }
  } else {
    const std::size_t rule = mode == TargetMode::UnderToMinority ? dist.min_count() : dist.max_count();
    if (request.target_label) {
      require_known(dist, *request.target_label);
      out.targets[*request.target_label] = rule;
    } else {
      for (auto& [label, target] : out.targets) target = rule;
    }
  }
  validate_targets(dist, out);
  return out;
}

void validate_targets(const ClassDistribution& dist, const SamplingTargets& targets) {
  for (const auto& [label, count] : dist.counts) {
    if (!targets.targets.contains(label)) {
      fail("InvalidTargets", ErrorKind::Usage, "missing target for " + cls(label));
    }
  }
  bool any_positive = false;
  for (const auto& [label, target] : targets.targets) {
    if (!dist.counts.contains(label)) {
      fail("UnknownClass", ErrorKind::Usage, "target given for absent " + cls(label));
    }
    any_positive = any_positive || target > 0;
  }
  if (!any_positive) {
    fail("InvalidTargets", ErrorKind::Usage, "at least one class target must be positive");
  }
}

ResampleResult random_under_sample(const Dataset& dataset, const SamplingTargets& targets, bool with_replacement,
                                   Seed seed) {
  const auto dist = class_distribution(dataset.labels());
  validate_targets(dist, targets);
  Rng rng(seed);
  ResampleTrace trace;
  for (const auto& [label, rows] : rows_by_class(dataset.labels())) {
    const std::size_t target = targets.at(label);
    if (with_replacement) {
      for (std::size_t i = 0; i < target; ++i) trace.kept_indices.push_back(rows[rng.index(rows.size())]);
    } else {
      if (target > rows.size()) {
        fail("TargetExceedsAvailable", ErrorKind::Runtime,
             cls(label) + " has " + std::to_string(rows.size()) + " rows, target " + std::to_string(target));
      }
      for (std::size_t pos : rng.sample_without_replacement(rows.size(), target)) {
        trace.kept_indices.push_back(rows[pos]);
      }
    }
  }
  std::sort(trace.kept_indices.begin(), trace.kept_indices.end());
  return assemble(dataset, std::move(trace));
}

ResampleResult random_over_sample(const Dataset& dataset, const SamplingTargets& targets, Seed seed) {
  const auto dist = class_distribution(dataset.labels());
  validate_targets(dist, targets);
  require_oversampling_targets(dist, targets);
  Rng rng(seed);
  ResampleTrace trace;
  trace.kept_indices = all_rows(dataset);
  for (const auto& [label, rows] : rows_by_class(dataset.labels())) {
    const std::size_t deficit = targets.at(label) - rows.size();
    for (std::size_t i = 0; i < deficit; ++i) trace.kept_indices.push_back(rows[rng.index(rows.size())]);
  }
  std::sort(trace.kept_indices.begin(), trace.kept_indices.end());
  return assemble(dataset, std::move(trace));
}

std::vector<std::vector<std::size_t>> nearest_neighbors(const Matrix& features, std::span<const std::size_t> pool,
                                                        std::size_t k) {
  std::vector<std::vector<std::size_t>> out(pool.size());
  std::vector<std::pair<double, std::size_t>> cand;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    cand.clear();
    const auto xi = features.row(pool[i]);
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (j == i) continue;
      cand.emplace_back(squared_distance(xi, features.row(pool[j])), pool[j]);
    }
    const std::size_t take = std::min(k, cand.size());
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(take), cand.end());
    out[i].reserve(take);
    for (std::size_t t = 0; t < take; ++t) out[i].push_back(cand[t].second);
  }
  return out;
}

ResampleResult smote_sample(const Dataset& dataset, const SamplingTargets& targets, std::size_t k_neighbors,
                            Seed seed) {
  if (k_neighbors == 0) {
    fail("InvalidParameter", ErrorKind::Usage, "k_neighbors must be >= 1");
  }
  const auto dist = class_distribution(dataset.labels());
  validate_targets(dist, targets);
  require_oversampling_targets(dist, targets);
  Rng rng(seed);
  ResampleTrace trace;
  trace.kept_indices = all_rows(dataset);
  for (const auto& [label, rows] : rows_by_class(dataset.labels())) {
    smote_pool(dataset.features(), rows, targets.at(label) - rows.size(), k_neighbors, rng, trace);
  }
  return assemble(dataset, std::move(trace));
}

KMeansResult kmeans(const Matrix& points, std::size_t n_clusters, Seed seed) {
  constexpr std::size_t kMaxIterations = 100;
  constexpr double kTolerance = 1e-4;
  if (points.rows() == 0 || n_clusters == 0) {
    fail("InvalidParameter", ErrorKind::Usage, "k-means needs points and n_clusters >= 1");
  }
  const std::size_t n = points.rows();
  const std::size_t k = std::min(n_clusters, n);
  Rng rng(seed);

  // k-means++ seeding.
  KMeansResult result;
  result.centroids = Matrix(0, points.cols());
  result.centroids.append_row(points.row(rng.index(n)));
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (result.centroids.rows() < k) {
    const auto last = result.centroids.row(result.centroids.rows() - 1);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points.row(i), last));
      total += d2[i];
    }
    std::size_t pick = n - 1;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (std::size_t i = 0; i < n; ++i) {
        if (u < d2[i]) {
          pick = i;
          break;
        }
        u -= d2[i];
      }
    } else {
      pick = rng.index(n);
    }
    result.centroids.append_row(points.row(pick));
  }

  result.assignment.assign(n, 0);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t iter = 0; iter < kMaxIterations; ++iter) {
    result.iterations = iter + 1;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(points.row(i), result.centroids.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      result.assignment[i] = best;
      inertia += best_d;
    }
    Matrix sums(k, points.cols());
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = result.assignment[i];
      ++sizes[c];
      const auto p = points.row(i);
      for (std::size_t f = 0; f < points.cols(); ++f) sums(c, f) += p[f];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] == 0) continue;  // empty clusters keep their centroid
      for (std::size_t f = 0; f < points.cols(); ++f) {
        result.centroids(c, f) = sums(c, f) / static_cast<double>(sizes[c]);
      }
    }
    result.inertia = inertia;
    if (std::abs(previous - inertia) <= kTolerance * previous || inertia == 0.0) break;
    previous = inertia;
  }
  return result;
}

ResampleResult kmeans_smote_sample(const Dataset& dataset, const SamplingTargets& targets, std::size_t n_clusters,
                                   std::size_t k_neighbors, double imbalance_ratio_threshold, Seed seed) {
  if (k_neighbors == 0 || n_clusters == 0) {
    fail("InvalidParameter", ErrorKind::Usage, "k_neighbors and n_clusters must be >= 1");
  }
  const auto dist = class_distribution(dataset.labels());
  validate_targets(dist, targets);
  require_oversampling_targets(dist, targets);

  const KMeansResult km = kmeans(dataset.features(), n_clusters, derive_seed(seed, "kmeans"));
  const std::size_t n_found = km.centroids.rows();
  std::vector<std::size_t> cluster_sizes(n_found, 0);
  for (auto c : km.assignment) ++cluster_sizes[c];

  // Interpolation draws from the same stream as smote_sample, so the
  // single-cluster case reproduces it exactly.
  Rng rng(seed);
  ResampleTrace trace;
  trace.kept_indices = all_rows(dataset);
  for (const auto& [label, rows] : rows_by_class(dataset.labels())) {
    const std::size_t deficit = targets.at(label) - rows.size();
    if (deficit == 0) continue;

    std::vector<std::vector<std::size_t>> members(n_found);
    for (std::size_t r : rows) members[km.assignment[r]].push_back(r);

    std::vector<std::size_t> eligible;
    for (std::size_t c = 0; c < n_found; ++c) {
      const double fraction = static_cast<double>(members[c].size()) / static_cast<double>(cluster_sizes[c] ? cluster_sizes[c] : 1);
      if (members[c].size() >= 2 && fraction >= imbalance_ratio_threshold) eligible.push_back(c);
    }
    if (eligible.empty()) {
      smote_pool(dataset.features(), rows, deficit, k_neighbors, rng, trace);
      continue;
    }

    std::vector<double> sparsity;
    double total = 0.0;
    for (std::size_t c : eligible) {
      const auto& m = members[c];
      double sum = 0.0;
      std::size_t pairs = 0;
      for (std::size_t a = 0; a < m.size(); ++a) {
        for (std::size_t b = a + 1; b < m.size(); ++b, ++pairs) {
          sum += std::sqrt(squared_distance(dataset.features().row(m[a]), dataset.features().row(m[b])));
        }
      }
      sparsity.push_back(sum / static_cast<double>(pairs));
      total += sparsity.back();
    }
    std::vector<double> shares;
    for (double s : sparsity) {
      const double w = total > 0.0 ? s / total : 1.0 / static_cast<double>(sparsity.size());
      shares.push_back(w * static_cast<double>(deficit));
    }
    const auto budgets = largest_remainder(shares, deficit);
    for (std::size_t e = 0; e < eligible.size(); ++e) {
      smote_pool(dataset.features(), members[eligible[e]], budgets[e], k_neighbors, rng, trace);
    }
  }
  return assemble(dataset, std::move(trace));
}

std::vector<std::size_t> allocate_bin_budgets(std::span<const std::size_t> bin_sizes,
                                              std::span<const double> bin_means, double alpha, std::size_t target) {
  const std::size_t n_bins = bin_sizes.size();
  const std::size_t available = std::accumulate(bin_sizes.begin(), bin_sizes.end(), std::size_t{0});
  if (target > available) {
    fail("TargetExceedsAvailable", ErrorKind::Runtime,
         "bins hold " + std::to_string(available) + " rows, target " + std::to_string(target));
  }
  std::vector<std::size_t> budgets(n_bins, 0);
  std::vector<bool> active(n_bins, false);
  for (std::size_t b = 0; b < n_bins; ++b) active[b] = bin_sizes[b] > 0;
  std::size_t remaining = target;

  while (true) {
    // A zero denominator (mean 0, alpha 0) is an infinite weight: such bins
    // split the budget among themselves before any finite bin sees a share.
    bool any_infinite = false;
    for (std::size_t b = 0; b < n_bins; ++b) any_infinite = any_infinite || (active[b] && bin_means[b] + alpha <= 0.0);
    std::vector<double> weight(n_bins, 0.0);
    double total = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
      if (!active[b]) continue;
      const double denom = bin_means[b] + alpha;
      weight[b] = any_infinite ? (denom <= 0.0 ? 1.0 : 0.0) : 1.0 / denom;
      total += weight[b];
    }
    if (total <= 0.0) break;

    std::vector<double> share(n_bins, 0.0);
    bool capped = false;
    for (std::size_t b = 0; b < n_bins; ++b) {
      if (!active[b]) continue;
      share[b] = static_cast<double>(remaining) * weight[b] / total;
      if (share[b] >= static_cast<double>(bin_sizes[b])) {
        budgets[b] = bin_sizes[b];
        remaining -= bin_sizes[b];
        active[b] = false;
        capped = true;
      }
    }
    if (capped) continue;

    std::vector<std::size_t> idx;
    std::vector<double> open_shares;
    for (std::size_t b = 0; b < n_bins; ++b) {
      if (!active[b]) continue;
      idx.push_back(b);
      open_shares.push_back(share[b]);
    }
    const auto rounded = largest_remainder(open_shares, remaining);
    for (std::size_t i = 0; i < idx.size(); ++i) budgets[idx[i]] = rounded[i];
    remaining = 0;
    break;
  }
  return budgets;
}

ResampleResult self_paced_under_sample(const Dataset& dataset, const SamplingTargets& targets,
                                       std::span<const double> hardness, std::size_t k_bins, double alpha,
                                       Seed seed) {
  if (hardness.size() != dataset.size()) {
    fail("ShapeMismatch", ErrorKind::Usage, "hardness length must equal the dataset size");
  }
  for (double h : hardness) {
    if (!(h >= 0.0 && h <= 1.0)) {
      fail("InvalidHardness", ErrorKind::Usage, "hardness values must lie in [0, 1]");
    }
  }
  if (k_bins == 0 || !(alpha >= 0.0)) {
    fail("InvalidParameter", ErrorKind::Usage, "k_bins must be >= 1 and alpha >= 0");
  }
  const auto dist = class_distribution(dataset.labels());
  validate_targets(dist, targets);

  Rng rng(seed);
  ResampleTrace trace;
  for (const auto& [label, rows] : rows_by_class(dataset.labels())) {
    const std::size_t target = targets.at(label);
    if (target > rows.size()) {
      fail("TargetExceedsAvailable", ErrorKind::Runtime,
           cls(label) + " has " + std::to_string(rows.size()) + " rows, target " + std::to_string(target));
    }
    if (target == rows.size()) {
      trace.kept_indices.insert(trace.kept_indices.end(), rows.begin(), rows.end());
      continue;
    }
    double lo = 1.0;
    double hi = 0.0;
    for (std::size_t r : rows) {
      lo = std::min(lo, hardness[r]);
      hi = std::max(hi, hardness[r]);
    }
    std::vector<std::vector<std::size_t>> bins(k_bins);
    for (std::size_t r : rows) {
      std::size_t b = 0;
      if (hi > lo) {
        const double pos = (hardness[r] - lo) / (hi - lo) * static_cast<double>(k_bins);
        b = std::min(k_bins - 1, static_cast<std::size_t>(pos));
      }
      bins[b].push_back(r);
    }
    std::vector<std::size_t> sizes(k_bins);
    std::vector<double> means(k_bins, 0.0);
    for (std::size_t b = 0; b < k_bins; ++b) {
      sizes[b] = bins[b].size();
      if (sizes[b] == 0) continue;
      double sum = 0.0;
      for (std::size_t r : bins[b]) sum += hardness[r];
      means[b] = sum / static_cast<double>(sizes[b]);
    }
    const auto budgets = allocate_bin_budgets(sizes, means, alpha, target);
    for (std::size_t b = 0; b < k_bins; ++b) {
      for (std::size_t pos : rng.sample_without_replacement(bins[b].size(), budgets[b])) {
        trace.kept_indices.push_back(bins[b][pos]);
      }
    }
  }
  std::sort(trace.kept_indices.begin(), trace.kept_indices.end());
  return assemble(dataset, std::move(trace));
}

}  // namespace imbens
