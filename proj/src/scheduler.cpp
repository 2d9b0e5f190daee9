#include "imbens/scheduler.hpp"

#include <string>

#include "imbens/error.hpp"

namespace imbens {

const char* to_string(BalancingSchedule::Kind kind) {
  switch (kind) {
    case BalancingSchedule::Kind::Uniform: return "uniform";
    case BalancingSchedule::Kind::Progressive: return "progressive";
    case BalancingSchedule::Kind::Custom: return "custom";
  }
  return "?";
}

SamplingTargets schedule_targets(const BalancingSchedule& schedule, const ClassDistribution& origin,
                                 const SamplingTargets& final_targets, std::size_t i_estimator,
                                 std::size_t total_estimators) {
  if (total_estimators == 0 || i_estimator >= total_estimators) {
    fail("InvalidParameter", ErrorKind::Usage,
         "schedule needs 0 <= i < T (got i=" + std::to_string(i_estimator) + ", T=" +
             std::to_string(total_estimators) + ")");
  }
  switch (schedule.kind) {
    case BalancingSchedule::Kind::Uniform:
      return final_targets;

    case BalancingSchedule::Kind::Progressive: {
      if (total_estimators == 1) return final_targets;
      const double progress = static_cast<double>(i_estimator) / static_cast<double>(total_estimators - 1);
      SamplingTargets out;
      for (const auto& [label, target] : final_targets.targets) {
        const double start = static_cast<double>(origin.count(label));
        const double end = static_cast<double>(target);
        const long long v = round_half_up(start + (end - start) * progress);
        out.targets[label] = static_cast<std::size_t>(v < 0 ? 0 : v);
      }
      return out;
    }

    case BalancingSchedule::Kind::Custom: {
      if (!schedule.rule) {
        fail("InvalidSchedule", ErrorKind::Usage, "custom schedule has no rule");
      }
      SamplingTargets out = schedule.rule(origin, final_targets, i_estimator, total_estimators);
      bool any_positive = false;
      for (const auto& [label, count] : origin.counts) {
        if (!out.targets.contains(label)) {
          fail("InvalidScheduleOutput", ErrorKind::Runtime,
               "custom schedule omitted class " + std::to_string(label) + " at round " + std::to_string(i_estimator));
        }
      }
      for (const auto& [label, target] : out.targets) {
        if (!origin.counts.contains(label)) {
          fail("InvalidScheduleOutput", ErrorKind::Runtime,
               "custom schedule produced unknown class " + std::to_string(label));
        }
        any_positive = any_positive || target > 0;
      }
      if (!any_positive) {
        fail("InvalidScheduleOutput", ErrorKind::Runtime, "custom schedule produced all-zero targets");
      }
      return out;
    }
  }
  return final_targets;
}

}  // namespace imbens
