#include <algorithm>
#include <cmath>
#include <numbers>

#include "ensemble_internal.hpp"
#include "imbens/error.hpp"

namespace imbens {

EnsembleModel fit_self_paced_ensemble(const Dataset& dataset, const TrainConfig& config) {
  detail::validate(dataset, config);
  EnsembleModel model = detail::start_model(Method::SelfPacedEnsemble, dataset, config);
  model.config["k_bins"] = std::to_string(config.k_bins);

  const auto origin = class_distribution(dataset.labels());
  const SamplingTargets final_targets = detail::final_targets(origin, TargetMode::UnderToMinority, config);
  const TreeParams params = detail::tree_params_or(config, detail::full_tree_params());
  const std::size_t rounds = config.n_estimators;
  const auto& labels = dataset.labels();

  ProbaAccumulator current(dataset.features(), dataset.n_classes());
  detail::TrainingLogger logger(dataset, config, dataset.n_classes());
  std::vector<double> hardness(dataset.size());

  for (std::size_t i = 0; i < rounds; ++i) {
    const SamplingTargets targets = schedule_targets(config.balancing_schedule, origin, final_targets, i, rounds);
    const Seed sample_seed = derive_seed(config.seed, "spe-sample", i);
    ResampleResult sample;
    try {
      if (i == 0) {
        sample = random_under_sample(dataset, targets, false, sample_seed);
      } else {
        const Matrix proba = current.proba();
        for (std::size_t r = 0; r < dataset.size(); ++r) {
          hardness[r] = std::clamp(1.0 - proba(r, static_cast<std::size_t>(labels[r])), 0.0, 1.0);
        }
        const double alpha = std::tan(static_cast<double>(i) * std::numbers::pi / (2.0 * static_cast<double>(rounds)));
        sample = self_paced_under_sample(dataset, targets, hardness, config.k_bins, alpha, sample_seed);
      }
    } catch (const Error& e) {
      detail::rethrow_with_context(e, "round " + std::to_string(i));
    }

    model.members.push_back(Member{{fit_tree(sample.data, params, derive_seed(config.seed, "spe-tree", i))}, {1.0}, 1.0});
    current.add(model.members.back());
    const ClassCounts counts = class_distribution(sample.data.labels()).counts;
    if (config.on_round) {
      RoundInfo info;
      info.iteration = i;
      info.resampled_counts = counts;
      config.on_round(info);
    }
    logger.add(model.members.back(), i, counts, i + 1 == rounds);
  }
  logger.finish();
  model.training_log = logger.take();
  return model;
}

}  // namespace imbens
