#pragma once

// Shared machinery for the fit_* implementations.

#include <cstddef>
#include <exception>
#include <functional>
#include <string>
#include <vector>

#include "imbens/ensemble.hpp"
#include "imbens/error.hpp"

namespace imbens::detail {

/// Tree parameters: the config's, or the method's default.
TreeParams tree_params_or(const TrainConfig& config, const TreeParams& fallback);

/// Full-depth learner used by bagging, self-paced and cascade members.
TreeParams full_tree_params();

/// Validates the parts of a config every method shares and the dataset.
void validate(const Dataset& dataset, const TrainConfig& config);

/// Starts an empty model for `method` with the shared config echo filled in.
EnsembleModel start_model(Method method, const Dataset& dataset, const TrainConfig& config);

/// Resampling targets from the method's default mode and the user's request.
SamplingTargets final_targets(const ClassDistribution& dist, TargetMode default_mode, const TrainConfig& config);

/// Tracks partial-ensemble metrics while members are appended.
class TrainingLogger {
 public:
  TrainingLogger(const Dataset& train, const TrainConfig& config, std::size_t n_classes);

  bool enabled() const noexcept { return enabled_; }

  /// Call once per appended member, in member order.
  void add(const Member& member, std::size_t iteration, const ClassCounts& counts, bool is_last);

  /// Logs the last member if the final add() did not know it was last.
  void finish();

  TrainingLog take() { return std::move(log_); }

 private:
  void record(std::size_t iteration, const ClassCounts& counts);

  const TrainConfig& config_;
  bool enabled_;
  std::size_t k_;
  std::vector<std::string> metrics_;
  std::vector<std::pair<std::string, const Dataset*>> datasets_;
  std::vector<ProbaAccumulator> accumulators_;
  TrainingLog log_;
  std::size_t last_iteration_ = 0;
  ClassCounts last_counts_;
  bool any_ = false;
};

/// What one boosting round trains its tree on.
struct RoundSample {
  Dataset data;
  std::vector<double> weights;
};

/// Variant-specific hooks around the SAMME loop.
class BoostPolicy {
 public:
  virtual ~BoostPolicy() = default;

  /// Adjusts weights before the round (AsymBoost). Returns true if it changed them.
  virtual bool before_round(std::size_t /*round*/, std::vector<double>& /*weights*/) { return false; }

  /// Training data for the round given the current weights on the original set.
  virtual RoundSample prepare(std::size_t round, std::size_t attempt, const std::vector<double>& weights) = 0;

  /// Exponent e in w <- w * exp(e) for one original row after the round.
  virtual double update_exponent(std::size_t row, int truth, int pred, double alpha) {
    (void)row;
    return truth == pred ? 0.0 : alpha;
  }
};

/// Trains every round on the original rows with the boosting weights.
class PlainBoostPolicy : public BoostPolicy {
 public:
  explicit PlainBoostPolicy(const Dataset& data) : data_(data) {}

  RoundSample prepare(std::size_t, std::size_t, const std::vector<double>& weights) override {
    return {data_, weights};
  }

 protected:
  const Dataset& data_;
};

/// Runs SAMME over `dataset` with the given policy, appending members to
/// `model`. Errors with AllRoundsRejected when no round is accepted.
void run_boosting(const Dataset& dataset, std::size_t rounds, const TreeParams& params, Seed seed,
                  BoostPolicy& policy, const TrainConfig& config, TrainingLogger* logger, EnsembleModel& model);

/// Runs task(i) for i in [0, n) on up to `jobs` threads. Exceptions are
/// rethrown after all workers stop, lowest index first, with `context` + i
/// prefixed to the message.
void parallel_for(std::size_t n, std::size_t jobs, const std::string& context,
                  const std::function<void(std::size_t)>& task);

/// Re-throws `e` with extra context, keeping its name and kind.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context);

}  // namespace imbens::detail
