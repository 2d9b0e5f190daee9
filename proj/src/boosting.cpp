#include <algorithm>
#include <cstdio>
#include <map>
#include <cmath>
#include <numeric>

#include "ensemble_internal.hpp"
#include "imbens/error.hpp"

namespace imbens {

namespace detail {

namespace {

// Vote weight for a perfect round, ln(1e9) + ln(K - 1).
double capped_alpha(std::size_t k) { return std::log(1e9) + std::log(static_cast<double>(k - 1)); }

void normalize(std::vector<double>& w) {
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
}

}  // namespace

void run_boosting(const Dataset& dataset, std::size_t rounds, const TreeParams& params, Seed seed,
                  BoostPolicy& policy, const TrainConfig& config, TrainingLogger* logger, EnsembleModel& model) {
  const std::size_t n = dataset.size();
  const std::size_t k = dataset.n_classes();
  const double reject_at = 1.0 - 1.0 / static_cast<double>(k);
  const auto& labels = dataset.labels();

  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  std::size_t failures = 0;
  std::size_t round = 0;
  bool stop = false;

  while (round < rounds && !stop) {
    if (policy.before_round(round, weights)) normalize(weights);

    RoundSample sample = policy.prepare(round, failures, weights);
    const FittedTree tree =
        fit_tree(sample.data, sample.weights, params, derive_seed(seed, "boost-tree", round * 2 + failures));
    const std::vector<int> pred = tree_predict(tree, dataset.features());

    double miss = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += weights[i];
      if (pred[i] != labels[i]) miss += weights[i];
    }
    const double error = miss / total;

    if (error >= reject_at) {
      // Discard, restart from uniform weights, retry the round once.
      if (++failures >= 2) break;
      std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
      continue;
    }
    failures = 0;

    double alpha;
    if (error <= 0.0) {
      alpha = capped_alpha(k);
      stop = true;
    } else {
      alpha = std::log((1.0 - error) / error) + std::log(static_cast<double>(k - 1));
      for (std::size_t i = 0; i < n; ++i) {
        weights[i] *= std::exp(policy.update_exponent(i, labels[i], pred[i], alpha));
      }
      normalize(weights);
    }

    model.members.push_back(Member{{tree}, {1.0}, alpha});
    const ClassCounts counts = class_distribution(sample.data.labels()).counts;
    if (config.on_round) {
      RoundInfo info;
      info.iteration = round;
      info.resampled_counts = counts;
      info.weights = weights;
      config.on_round(info);
    }
    if (logger) logger->add(model.members.back(), round, counts, stop || round + 1 == rounds);
    ++round;
  }

  if (logger) logger->finish();
  if (model.members.empty()) {
    fail("AllRoundsRejected", ErrorKind::Runtime,
         "every boosting round had weighted error >= 1 - 1/K; no member was accepted");
  }
}

namespace {

class ResamplePolicy : public BoostPolicy {
 public:
  ResamplePolicy(ResampleBoostVariant variant, const Dataset& data, const TrainConfig& config)
      : variant_(variant), data_(data), config_(config), origin_(class_distribution(data.labels())),
        by_class_(rows_by_class(data.labels())) {
    const bool under = variant == ResampleBoostVariant::RusBoost;
    final_ = final_targets(origin_, under ? TargetMode::UnderToMinority : TargetMode::OverToMajority, config);
  }

  RoundSample prepare(std::size_t round, std::size_t attempt, const std::vector<double>& weights) override {
    const SamplingTargets targets =
        schedule_targets(config_.balancing_schedule, origin_, final_, round, config_.n_estimators);
    const Seed seed = derive_seed(config_.seed, "boost-sample", round * 2 + attempt);
    ResampleResult res;
    try {
      switch (variant_) {
        case ResampleBoostVariant::RusBoost: res = random_under_sample(data_, targets, false, seed); break;
        case ResampleBoostVariant::OverBoost: res = random_over_sample(data_, targets, seed); break;
        case ResampleBoostVariant::SmoteBoost: res = smote_sample(data_, targets, config_.k_neighbors, seed); break;
        case ResampleBoostVariant::KmeansSmoteBoost:
          res = kmeans_smote_sample(data_, targets, config_.n_clusters, config_.k_neighbors,
                                    config_.imbalance_ratio_threshold, seed);
          break;
      }
    } catch (const Error& e) {
      rethrow_with_context(e, "round " + std::to_string(round));
    }

    // Kept rows carry their source weight; synthetic rows the class mean.
    std::map<int, double> class_mean;
    for (const auto& [label, rows] : by_class_) {
      double sum = 0.0;
      for (std::size_t r : rows) sum += weights[r];
      class_mean[label] = sum / static_cast<double>(rows.size());
    }
    RoundSample out;
    out.weights.reserve(res.data.size());
    for (std::size_t r : res.trace.kept_indices) out.weights.push_back(weights[r]);
    for (const auto& rec : res.trace.synthetic) out.weights.push_back(class_mean[data_.labels()[rec.seed_row]]);
    out.data = std::move(res.data);
    return out;
  }

 private:
  ResampleBoostVariant variant_;
  const Dataset& data_;
  const TrainConfig& config_;
  ClassDistribution origin_;
  std::map<int, std::vector<std::size_t>> by_class_;
  SamplingTargets final_;
};

class CostPolicy : public PlainBoostPolicy {
 public:
  CostPolicy(ReweightVariant variant, const Dataset& data, const CostMatrix& cost, std::size_t rounds)
      : PlainBoostPolicy(data), variant_(variant), cost_(cost), rounds_(rounds) {
    const std::size_t k = cost.n_classes();
    const double max_cost = cost.max_cost();
    row_cost_.resize(k);
    asym_.resize(k, 1.0);
    for (std::size_t i = 0; i < k; ++i) {
      double row_max = 0.0;
      double col_max = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (i == j) continue;
        row_max = std::max(row_max, cost(i, j));
        col_max = std::max(col_max, cost(j, i));
      }
      row_cost_[i] = row_max / max_cost;
      if (variant == ReweightVariant::AsymBoost) {
        if (row_max <= 0.0 || col_max <= 0.0) {
          fail("InvalidCostMatrix", ErrorKind::Usage,
               "asym-boost needs a positive misclassification cost into and out of every class");
        }
        asym_[i] = row_max / col_max;
      }
    }
  }

  bool before_round(std::size_t, std::vector<double>& weights) override {
    if (variant_ != ReweightVariant::AsymBoost) return false;
    bool changed = false;
    const auto& labels = data_.labels();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double ratio = asym_[static_cast<std::size_t>(labels[i])];
      if (ratio == 1.0) continue;
      weights[i] *= std::exp(std::log(std::sqrt(ratio)) / static_cast<double>(rounds_));
      changed = true;
    }
    return changed;
  }

  double update_exponent(std::size_t, int truth, int pred, double alpha) override {
    const auto t = static_cast<std::size_t>(truth);
    const bool miss = truth != pred;
    switch (variant_) {
      case ReweightVariant::AdaCost: {
        // Misclassified rows scale by the realized error's cost, correct rows
        // by the row's own misclassification cost.
        const double c = miss ? cost_(t, static_cast<std::size_t>(pred)) / cost_.max_cost() : row_cost_[t];
        return miss ? alpha * (0.5 * c + 0.5) : -alpha * (-0.5 * c + 0.5);
      }
      case ReweightVariant::AdaUBoost:
        return miss ? alpha * cost_(t, static_cast<std::size_t>(pred)) / cost_.max_cost() : 0.0;
      case ReweightVariant::AsymBoost:
        return miss ? alpha : 0.0;
    }
    return miss ? alpha : 0.0;
  }

 private:
  ReweightVariant variant_;
  const CostMatrix& cost_;
  std::size_t rounds_;
  std::vector<double> row_cost_;
  std::vector<double> asym_;
};

}  // namespace

}  // namespace detail

EnsembleModel fit_resample_boost(ResampleBoostVariant variant, const Dataset& dataset, const TrainConfig& config) {
  detail::validate(dataset, config);
  static constexpr Method kMethod[] = {Method::RusBoost, Method::OverBoost, Method::SmoteBoost,
                                       Method::KmeansSmoteBoost};
  EnsembleModel model = detail::start_model(kMethod[static_cast<int>(variant)], dataset, config);
  if (variant == ResampleBoostVariant::SmoteBoost || variant == ResampleBoostVariant::KmeansSmoteBoost) {
    model.config["k_neighbors"] = std::to_string(config.k_neighbors);
  }
  if (variant == ResampleBoostVariant::KmeansSmoteBoost) {
    model.config["n_clusters"] = std::to_string(config.n_clusters);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", config.imbalance_ratio_threshold);
    model.config["imbalance_ratio_threshold"] = buf;
  }
  detail::ResamplePolicy policy(variant, dataset, config);
  detail::TrainingLogger logger(dataset, config, dataset.n_classes());
  detail::run_boosting(dataset, config.n_estimators, detail::tree_params_or(config, TreeParams::stump()), config.seed,
                       policy, config, &logger, model);
  model.training_log = logger.take();
  return model;
}

EnsembleModel fit_reweight_boost(ReweightVariant variant, const Dataset& dataset, const CostMatrix& cost_matrix,
                                 const TrainConfig& config) {
  detail::validate(dataset, config);
  if (cost_matrix.n_classes() != dataset.n_classes()) {
    fail("InvalidCostMatrix", ErrorKind::Usage,
         "cost matrix is " + std::to_string(cost_matrix.n_classes()) + " x " + std::to_string(cost_matrix.n_classes()) +
             " but the data has " + std::to_string(dataset.n_classes()) + " classes");
  }
  static constexpr Method kMethod[] = {Method::AdaCost, Method::AdaUBoost, Method::AsymBoost};
  EnsembleModel model = detail::start_model(kMethod[static_cast<int>(variant)], dataset, config);
  model.config["cost_matrix"] = cost_matrix.to_string();
  detail::CostPolicy policy(variant, dataset, cost_matrix, config.n_estimators);
  detail::TrainingLogger logger(dataset, config, dataset.n_classes());
  detail::run_boosting(dataset, config.n_estimators, detail::tree_params_or(config, TreeParams::stump()), config.seed,
                       policy, config, &logger, model);
  model.training_log = logger.take();
  return model;
}

EnsembleModel fit_samme(const Dataset& dataset, const TrainConfig& config) {
  detail::validate(dataset, config);
  EnsembleModel model = detail::start_model(Method::Samme, dataset, config);
  detail::PlainBoostPolicy policy(dataset);
  detail::TrainingLogger logger(dataset, config, dataset.n_classes());
  detail::run_boosting(dataset, config.n_estimators, detail::tree_params_or(config, TreeParams::stump()), config.seed,
                       policy, config, &logger, model);
  model.training_log = logger.take();
  return model;
}

}  // namespace imbens
