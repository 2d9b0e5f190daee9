#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "ensemble_internal.hpp"
#include "imbens/error.hpp"

namespace imbens {

EnsembleModel fit_balance_cascade(const Dataset& dataset, const TrainConfig& config) {
  detail::validate(dataset, config);
  EnsembleModel model = detail::start_model(Method::BalanceCascade, dataset, config);

  const auto dist = class_distribution(dataset.labels());
  const std::size_t n_min = dist.min_count();
  const std::size_t rounds = config.n_estimators;
  const TreeParams params = detail::tree_params_or(config, detail::full_tree_params());

  // Every class larger than the minority keeps a shrinking pool.
  std::map<int, std::vector<std::size_t>> pools;
  std::map<int, double> keep_factor;
  const auto by_class = rows_by_class(dataset.labels());
  for (const auto& [label, rows] : by_class) {
    if (rows.size() <= n_min) continue;
    pools[label] = rows;
    keep_factor[label] = rounds > 1 ? std::pow(static_cast<double>(n_min) / static_cast<double>(rows.size()),
                                               1.0 / static_cast<double>(rounds - 1))
                                    : 1.0;
  }
  if (pools.empty()) {
    fail("TooFewMajority", ErrorKind::Runtime, "no class is larger than the minority class; nothing to cascade");
  }

  ProbaAccumulator current(dataset.features(), dataset.n_classes());
  detail::TrainingLogger logger(dataset, config, dataset.n_classes());

  for (std::size_t t = 0; t < rounds; ++t) {
    Rng rng(derive_seed(config.seed, "cascade-sample", t));
    std::vector<std::size_t> rows;
    ClassCounts pool_sizes;
    for (const auto& [label, class_rows] : by_class) {
      const auto pool = pools.find(label);
      if (pool == pools.end()) {
        rows.insert(rows.end(), class_rows.begin(), class_rows.end());
        continue;
      }
      pool_sizes[label] = pool->second.size();
      for (std::size_t pos : rng.sample_without_replacement(pool->second.size(), n_min)) {
        rows.push_back(pool->second[pos]);
      }
    }
    std::sort(rows.begin(), rows.end());
    const Dataset sample = dataset.subset(rows);

    const bool last = t + 1 == rounds;
    model.members.push_back(Member{{fit_tree(sample, params, derive_seed(config.seed, "cascade-tree", t))}, {1.0}, 1.0});
    current.add(model.members.back());
    const ClassCounts counts = class_distribution(sample.labels()).counts;
    if (config.on_round) {
      RoundInfo info;
      info.iteration = t;
      info.resampled_counts = counts;
      info.pool_sizes = pool_sizes;
      config.on_round(info);
    }

    bool stop = false;
    if (!last) {
      // Drop the most confidently correct rows so each pool follows
      // n_c * f^(t+1).
      const Matrix proba = current.proba();
      for (auto& [label, pool] : pools) {
        const double wanted = static_cast<double>(by_class.at(label).size()) *
                              std::pow(keep_factor[label], static_cast<double>(t + 1));
        const auto new_size = static_cast<std::size_t>(std::max(0LL, round_half_up(wanted)));
        if (new_size < n_min) {
          stop = true;
          break;
        }
        if (new_size >= pool.size()) continue;
        std::vector<std::pair<double, std::size_t>> correct;
        const auto c = static_cast<std::size_t>(label);
        for (std::size_t r : pool) {
          if (argmax(proba.row(r)) == label) correct.emplace_back(-proba(r, c), r);
        }
        std::sort(correct.begin(), correct.end());
        const std::size_t remove = std::min(pool.size() - new_size, correct.size());
        std::vector<std::size_t> dropped;
        for (std::size_t i = 0; i < remove; ++i) dropped.push_back(correct[i].second);
        std::sort(dropped.begin(), dropped.end());
        std::erase_if(pool, [&](std::size_t r) { return std::binary_search(dropped.begin(), dropped.end(), r); });
      }
    }
    logger.add(model.members.back(), t, counts, last || stop);
    if (stop) break;
  }
  logger.finish();
  model.training_log = logger.take();
  return model;
}

}  // namespace imbens
