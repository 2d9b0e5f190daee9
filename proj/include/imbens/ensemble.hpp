#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imbens/dataset.hpp"
#include "imbens/matrix.hpp"
#include "imbens/random.hpp"
#include "imbens/samplers.hpp"
#include "imbens/scheduler.hpp"
#include "imbens/tree.hpp"

namespace imbens {

enum class Method {
  SelfPacedEnsemble,
  BalanceCascade,
  BalancedRandomForest,
  EasyEnsemble,
  RusBoost,
  UnderBagging,
  OverBoost,
  SmoteBoost,
  KmeansSmoteBoost,
  OverBagging,
  SmoteBagging,
  AdaCost,
  AdaUBoost,
  AsymBoost,
  Samme,  // plain multi-class boosting; reference model, not one of the imbalance methods
};

/// The fourteen imbalance-aware methods, in table order.
const std::vector<Method>& imbalance_methods();
/// Kebab-case id ("self-paced-ensemble", ...).
std::string method_id(Method method);
std::optional<Method> parse_method(const std::string& id);

enum class ResampleBoostVariant { RusBoost, OverBoost, SmoteBoost, KmeansSmoteBoost };
enum class ReweightVariant { AdaCost, AdaUBoost, AsymBoost };
enum class BaggingVariant { UnderBagging, OverBagging, SmoteBagging, BalancedRandomForest, EasyEnsemble };

/// costs(i, j): cost of predicting j when the truth is i.
class CostMatrix {
 public:
  CostMatrix() = default;
  /// Throws InvalidCostMatrix unless square K x K, zero diagonal, finite,
  /// nonnegative, with at least one positive off-diagonal entry.
  CostMatrix(std::size_t n_classes, std::vector<double> row_major);

  /// All off-diagonal entries 1.
  static CostMatrix uniform(std::size_t n_classes);
  /// costs(i, j) = count(j) / count(i): errors on rare classes cost more.
  static CostMatrix inverse(const ClassDistribution& dist, std::size_t n_classes);
  /// costs(i, j) = log(1 + count(j) / count(i)).
  static CostMatrix log1p_inverse(const ClassDistribution& dist, std::size_t n_classes);

  std::size_t n_classes() const noexcept { return k_; }
  double operator()(std::size_t truth, std::size_t pred) const { return costs_[truth * k_ + pred]; }
  double max_cost() const;
  const std::vector<double>& row_major() const noexcept { return costs_; }
  std::string to_string() const;

  friend bool operator==(const CostMatrix&, const CostMatrix&) = default;

 private:
  std::size_t k_ = 0;
  std::vector<double> costs_;
};

/// How the reweighting family obtains its cost matrix.
struct CostSpec {
  enum class Kind { Uniform, Inverse, Log1pInverse, Explicit };
  Kind kind = Kind::Inverse;
  std::optional<CostMatrix> matrix;  // Explicit only

  CostMatrix resolve(const ClassDistribution& dist, std::size_t n_classes) const;
  std::string describe() const;
};

struct TrainVerbose {
  enum class Kind { Off, EveryN, Full };
  Kind kind = Kind::Off;
  std::size_t every = 1;

  static TrainVerbose off() { return {}; }
  static TrainVerbose every_n(std::size_t n) { return {Kind::EveryN, n}; }
  static TrainVerbose full() { return {Kind::Full, 1}; }
};

/// Whether iteration `i` is logged: every_n(k) logs 0, k, 2k, ... plus the last.
bool should_log(const TrainVerbose& verbose, std::size_t iteration, bool is_last);

struct LogRecord {
  std::size_t iteration = 0;
  /// dataset name -> metric name -> value, for the ensemble of members 0..iteration.
  std::map<std::string, std::map<std::string, double>> metrics;
  /// Class counts of the data the member was trained on.
  ClassCounts resampled_counts;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

struct TrainingLog {
  std::vector<LogRecord> records;

  friend bool operator==(const TrainingLog&, const TrainingLog&) = default;
};

/// Per-round diagnostics for callers that audit training (tests, CLI).
struct RoundInfo {
  std::size_t iteration = 0;
  ClassCounts resampled_counts;
  std::span<const double> weights;  // boosting weights after the round's update
  ClassCounts pool_sizes;           // balance-cascade pools at the start of the round
};

struct TrainConfig {
  std::size_t n_estimators = 50;
  std::optional<TreeParams> tree_params;  // per-method default when unset
  BalancingSchedule balancing_schedule;
  TargetRequest targets;
  CostSpec cost_matrix;
  std::map<std::string, Dataset> eval_datasets;
  std::vector<std::string> eval_metrics;  // empty: balanced_acc, macro_f1, macro_gmean
  TrainVerbose train_verbose;
  Seed seed{};
  std::size_t jobs = 1;

  std::size_t k_neighbors = 5;
  std::size_t n_clusters = 8;
  double imbalance_ratio_threshold = 0.5;
  std::size_t k_bins = 5;
  std::size_t inner_rounds = 10;

  std::function<void(const LogRecord&)> on_log;
  std::function<void(const RoundInfo&)> on_round;
};

/// One ensemble member: a single tree, or (easy-ensemble) a boosted chain
/// whose output is the tree_weights-weighted average of its trees.
struct Member {
  std::vector<FittedTree> trees;
  std::vector<double> tree_weights;
  double vote_weight = 1.0;

  friend bool operator==(const Member&, const Member&) = default;
};

struct EnsembleModel {
  Method method = Method::Samme;
  std::size_t n_classes = 0;
  std::size_t n_features = 0;
  std::vector<std::string> class_names;
  std::vector<Member> members;
  TrainingLog training_log;
  std::map<std::string, std::string> config;  // echo of the training configuration

  friend bool operator==(const EnsembleModel&, const EnsembleModel&) = default;
};

/// Accumulates vote-weighted member probabilities over a fixed feature matrix.
/// Adding members one at a time gives bit-identical results to predicting
/// with the finished model.
class ProbaAccumulator {
 public:
  ProbaAccumulator(const Matrix& features, std::size_t n_classes);

  void add(const Member& member);
  std::size_t members() const noexcept { return added_; }
  Matrix proba() const;
  std::vector<int> predict() const;

 private:
  const Matrix& features_;
  std::size_t k_;
  Matrix sums_;
  std::size_t added_ = 0;
};

/// Probability rows of one member on `features`.
Matrix member_proba(const Member& member, const Matrix& features);

EnsembleModel fit_resample_boost(ResampleBoostVariant variant, const Dataset& dataset, const TrainConfig& config);
EnsembleModel fit_reweight_boost(ReweightVariant variant, const Dataset& dataset, const CostMatrix& cost_matrix,
                                 const TrainConfig& config);
/// Plain SAMME on unmodified data.
EnsembleModel fit_samme(const Dataset& dataset, const TrainConfig& config);
EnsembleModel fit_bagging_ensemble(BaggingVariant variant, const Dataset& dataset, const TrainConfig& config);
EnsembleModel fit_self_paced_ensemble(const Dataset& dataset, const TrainConfig& config);
EnsembleModel fit_balance_cascade(const Dataset& dataset, const TrainConfig& config);

/// Dispatches to the matching fit_* (cost matrix taken from config.cost_matrix).
EnsembleModel fit_ensemble(Method method, const Dataset& dataset, const TrainConfig& config);

/// sum_t a_t P_t(x) / sum_t a_t over the first `prefix` members (all when
/// unset), rows renormalized to 1.
Matrix ensemble_predict_proba(const EnsembleModel& model, const Matrix& features,
                              std::optional<std::size_t> prefix = std::nullopt);
/// Argmax of ensemble_predict_proba, lowest class on ties.
std::vector<int> ensemble_predict(const EnsembleModel& model, const Matrix& features,
                                  std::optional<std::size_t> prefix = std::nullopt);

}  // namespace imbens
