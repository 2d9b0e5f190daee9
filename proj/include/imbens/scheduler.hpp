#pragma once

#include <cstddef>
#include <functional>

#include "imbens/dataset.hpp"

namespace imbens {

/// Rule mapping (origin, final, i, T) to round-i targets. Must be pure.
using ScheduleRule = std::function<SamplingTargets(const ClassDistribution& origin, const SamplingTargets& final_targets,
                                                   std::size_t i_estimator, std::size_t total_estimators)>;

/// How per-round resampling targets evolve across an iterative ensemble.
struct BalancingSchedule {
  enum class Kind { Uniform, Progressive, Custom };

  Kind kind = Kind::Uniform;
  ScheduleRule rule;

  static BalancingSchedule uniform() { return {}; }
  static BalancingSchedule progressive() { return {Kind::Progressive, {}}; }
  static BalancingSchedule custom(ScheduleRule r) { return {Kind::Custom, std::move(r)}; }
};

const char* to_string(BalancingSchedule::Kind kind);

/// Uniform: always `final_targets`. Progressive: per class
/// round(origin + (final - origin) * i / (T - 1)), T == 1 giving `final_targets`.
/// Custom: the rule's output, rejected with InvalidScheduleOutput if malformed.
SamplingTargets schedule_targets(const BalancingSchedule& schedule, const ClassDistribution& origin,
                                 const SamplingTargets& final_targets, std::size_t i_estimator,
                                 std::size_t total_estimators);

}  // namespace imbens
