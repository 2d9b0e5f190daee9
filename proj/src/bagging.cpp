#include "ensemble_internal.hpp"
#include "imbens/error.hpp"

namespace imbens {

namespace {

Method method_of(BaggingVariant variant) {
  switch (variant) {
    case BaggingVariant::UnderBagging: return Method::UnderBagging;
    case BaggingVariant::OverBagging: return Method::OverBagging;
    case BaggingVariant::SmoteBagging: return Method::SmoteBagging;
    case BaggingVariant::BalancedRandomForest: return Method::BalancedRandomForest;
    case BaggingVariant::EasyEnsemble: return Method::EasyEnsemble;
  }
  return Method::UnderBagging;
}

bool undersamples(BaggingVariant variant) {
  return variant == BaggingVariant::UnderBagging || variant == BaggingVariant::BalancedRandomForest ||
         variant == BaggingVariant::EasyEnsemble;
}

}  // namespace

EnsembleModel fit_bagging_ensemble(BaggingVariant variant, const Dataset& dataset, const TrainConfig& config) {
  detail::validate(dataset, config);
  EnsembleModel model = detail::start_model(method_of(variant), dataset, config);

  const auto dist = class_distribution(dataset.labels());
  const SamplingTargets targets = detail::final_targets(
      dist, undersamples(variant) ? TargetMode::UnderToMinority : TargetMode::OverToMajority, config);

  TreeParams params = detail::tree_params_or(config, detail::full_tree_params());
  if (variant == BaggingVariant::BalancedRandomForest && !config.tree_params) params.max_features = MaxFeatures::Sqrt;
  if (variant == BaggingVariant::EasyEnsemble) {
    params = detail::tree_params_or(config, TreeParams::stump());
    model.config["inner_rounds"] = std::to_string(config.inner_rounds);
  }
  if (variant == BaggingVariant::SmoteBagging) model.config["k_neighbors"] = std::to_string(config.k_neighbors);

  const std::size_t n_members = config.n_estimators;
  std::vector<Member> members(n_members);
  std::vector<ClassCounts> counts(n_members);

  detail::parallel_for(n_members, config.jobs, "member", [&](std::size_t m) {
    const Seed member_seed = derive_seed(config.seed, "member", m);
    const Seed sample_seed = derive_seed(member_seed, "sample");
    ResampleResult sample;
    switch (variant) {
      case BaggingVariant::UnderBagging:
      case BaggingVariant::BalancedRandomForest:
      case BaggingVariant::EasyEnsemble:
        sample = random_under_sample(dataset, targets, false, sample_seed);
        break;
      case BaggingVariant::OverBagging: sample = random_over_sample(dataset, targets, sample_seed); break;
      case BaggingVariant::SmoteBagging:
        sample = smote_sample(dataset, targets, config.k_neighbors, sample_seed);
        break;
    }
    counts[m] = class_distribution(sample.data.labels()).counts;

    if (variant == BaggingVariant::EasyEnsemble) {
      // The inner chain is plain SAMME over the balanced subset.
      EnsembleModel chain;
      detail::PlainBoostPolicy policy(sample.data);
      TrainConfig inner;
      inner.seed = derive_seed(member_seed, "chain");
      detail::run_boosting(sample.data, config.inner_rounds, params, inner.seed, policy, inner, nullptr, chain);
      Member member;
      for (auto& link : chain.members) {
        member.trees.push_back(std::move(link.trees.front()));
        member.tree_weights.push_back(link.vote_weight);
      }
      members[m] = std::move(member);
    } else {
      members[m] = Member{{fit_tree(sample.data, params, derive_seed(member_seed, "tree"))}, {1.0}, 1.0};
    }
  });

  detail::TrainingLogger logger(dataset, config, dataset.n_classes());
  for (std::size_t m = 0; m < n_members; ++m) {
    model.members.push_back(std::move(members[m]));
    if (config.on_round) {
      RoundInfo info;
      info.iteration = m;
      info.resampled_counts = counts[m];
      config.on_round(info);
    }
    logger.add(model.members.back(), m, counts[m], m + 1 == n_members);
  }
  logger.finish();
  model.training_log = logger.take();
  return model;
}

}  // namespace imbens
