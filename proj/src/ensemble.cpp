#include "imbens/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include "ensemble_internal.hpp"
#include "imbens/error.hpp"
#include "imbens/metrics.hpp"

namespace imbens {

namespace {

struct MethodEntry {
  Method method;
  const char* id;
};

constexpr MethodEntry kMethods[] = {
    {Method::SelfPacedEnsemble, "self-paced-ensemble"},
    {Method::BalanceCascade, "balance-cascade"},
    {Method::BalancedRandomForest, "balanced-random-forest"},
    {Method::EasyEnsemble, "easy-ensemble"},
    {Method::RusBoost, "rus-boost"},
    {Method::UnderBagging, "under-bagging"},
    {Method::OverBoost, "over-boost"},
    {Method::SmoteBoost, "smote-boost"},
    {Method::KmeansSmoteBoost, "kmeans-smote-boost"},
    {Method::OverBagging, "over-bagging"},
    {Method::SmoteBagging, "smote-bagging"},
    {Method::AdaCost, "ada-cost"},
    {Method::AdaUBoost, "ada-uboost"},
    {Method::AsymBoost, "asym-boost"},
    {Method::Samme, "samme"},
};

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<Method>& imbalance_methods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> out;
    for (const auto& m : kMethods) {
      if (m.method != Method::Samme) out.push_back(m.method);
    }
    return out;
  }();
  return methods;
}

std::string method_id(Method method) {
  for (const auto& m : kMethods) {
    if (m.method == method) return m.id;
  }
  return "unknown";
}

std::optional<Method> parse_method(const std::string& id) {
  for (const auto& m : kMethods) {
    if (id == m.id) return m.method;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Cost matrices

CostMatrix::CostMatrix(std::size_t n_classes, std::vector<double> row_major)
    : k_(n_classes), costs_(std::move(row_major)) {
  if (k_ < 2 || costs_.size() != k_ * k_) {
    fail("InvalidCostMatrix", ErrorKind::Usage,
         "cost matrix must be K x K with K >= 2 (got " + std::to_string(costs_.size()) + " entries for K=" +
             std::to_string(k_) + ")");
  }
  bool any_positive = false;
  for (std::size_t i = 0; i < k_; ++i) {
    for (std::size_t j = 0; j < k_; ++j) {
      const double c = (*this)(i, j);
      if (!std::isfinite(c) || c < 0.0) {
        fail("InvalidCostMatrix", ErrorKind::Usage, "costs must be finite and nonnegative");
      }
      if (i == j && c != 0.0) {
        fail("InvalidCostMatrix", ErrorKind::Usage, "diagonal costs must be 0");
      }
      any_positive = any_positive || (i != j && c > 0.0);
    }
  }
  if (!any_positive) {
    fail("InvalidCostMatrix", ErrorKind::Usage, "at least one off-diagonal cost must be positive");
  }
}

CostMatrix CostMatrix::uniform(std::size_t n_classes) {
  std::vector<double> c(n_classes * n_classes, 1.0);
  for (std::size_t i = 0; i < n_classes; ++i) c[i * n_classes + i] = 0.0;
  return CostMatrix(n_classes, std::move(c));
}

CostMatrix CostMatrix::inverse(const ClassDistribution& dist, std::size_t n_classes) {
  std::vector<double> c(n_classes * n_classes, 0.0);
  for (std::size_t i = 0; i < n_classes; ++i) {
    for (std::size_t j = 0; j < n_classes; ++j) {
      if (i == j) continue;
      const double ni = static_cast<double>(dist.count(static_cast<int>(i)));
      const double nj = static_cast<double>(dist.count(static_cast<int>(j)));
      c[i * n_classes + j] = ni > 0.0 ? nj / ni : 0.0;
    }
  }
  return CostMatrix(n_classes, std::move(c));
}

CostMatrix CostMatrix::log1p_inverse(const ClassDistribution& dist, std::size_t n_classes) {
  CostMatrix inv = inverse(dist, n_classes);
  for (double& v : inv.costs_) v = std::log1p(v);
  return inv;
}

double CostMatrix::max_cost() const { return *std::max_element(costs_.begin(), costs_.end()); }

std::string CostMatrix::to_string() const {
  std::string out = "[";
  for (std::size_t i = 0; i < k_; ++i) {
    out += i ? ",[" : "[";
    for (std::size_t j = 0; j < k_; ++j) {
      if (j) out += ",";
      out += fmt_real((*this)(i, j));
    }
    out += "]";
  }
  return out + "]";
}

CostMatrix CostSpec::resolve(const ClassDistribution& dist, std::size_t n_classes) const {
  switch (kind) {
    case Kind::Uniform: return CostMatrix::uniform(n_classes);
    case Kind::Inverse: return CostMatrix::inverse(dist, n_classes);
    case Kind::Log1pInverse: return CostMatrix::log1p_inverse(dist, n_classes);
    case Kind::Explicit:
      if (!matrix || matrix->n_classes() != n_classes) {
        fail("InvalidCostMatrix", ErrorKind::Usage,
             "explicit cost matrix must be " + std::to_string(n_classes) + " x " + std::to_string(n_classes));
      }
      return *matrix;
  }
  return CostMatrix::uniform(n_classes);
}

std::string CostSpec::describe() const {
  switch (kind) {
    case Kind::Uniform: return "uniform";
    case Kind::Inverse: return "inverse";
    case Kind::Log1pInverse: return "log1p-inverse";
    case Kind::Explicit: return matrix ? matrix->to_string() : "explicit";
  }
  return "?";
}

bool should_log(const TrainVerbose& verbose, std::size_t iteration, bool is_last) {
  switch (verbose.kind) {
    case TrainVerbose::Kind::Off: return false;
    case TrainVerbose::Kind::Full: return true;
    case TrainVerbose::Kind::EveryN: return is_last || verbose.every == 0 || iteration % verbose.every == 0;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Prediction

Matrix member_proba(const Member& member, const Matrix& features) {
  if (member.trees.size() == 1) return tree_predict_proba(member.trees.front(), features);
  const std::size_t k = member.trees.front().n_classes();
  Matrix out(features.rows(), k);
  double total = 0.0;
  for (std::size_t t = 0; t < member.trees.size(); ++t) {
    const double w = member.tree_weights[t];
    if (w <= 0.0) continue;
    total += w;
    for (std::size_t i = 0; i < features.rows(); ++i) {
      const auto p = member.trees[t].leaf_proba(features.row(i));
      for (std::size_t c = 0; c < k; ++c) out(i, c) += w * p[c];
    }
  }
  for (std::size_t i = 0; i < features.rows(); ++i) {
    for (std::size_t c = 0; c < k; ++c) out(i, c) /= total;
  }
  return out;
}

ProbaAccumulator::ProbaAccumulator(const Matrix& features, std::size_t n_classes)
    : features_(features), k_(n_classes), sums_(features.rows(), n_classes) {}

void ProbaAccumulator::add(const Member& member) {
  ++added_;
  if (member.vote_weight <= 0.0) return;
  const Matrix p = member_proba(member, features_);
  for (std::size_t i = 0; i < sums_.rows(); ++i) {
    for (std::size_t c = 0; c < k_; ++c) sums_(i, c) += member.vote_weight * p(i, c);
  }
}

Matrix ProbaAccumulator::proba() const {
  Matrix out = sums_;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    double row = 0.0;
    for (std::size_t c = 0; c < k_; ++c) row += out(i, c);
    for (std::size_t c = 0; c < k_; ++c) out(i, c) = row > 0.0 ? out(i, c) / row : 1.0 / static_cast<double>(k_);
  }
  return out;
}

std::vector<int> ProbaAccumulator::predict() const {
  const Matrix p = proba();
  std::vector<int> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) out[i] = argmax(p.row(i));
  return out;
}

Matrix ensemble_predict_proba(const EnsembleModel& model, const Matrix& features, std::optional<std::size_t> prefix) {
  if (features.cols() != model.n_features) {
    fail("ShapeMismatch", ErrorKind::Data,
         "model expects " + std::to_string(model.n_features) + " features, got " + std::to_string(features.cols()));
  }
  if (model.members.empty()) {
    fail("EmptyModel", ErrorKind::Data, "model has no members");
  }
  const std::size_t n = std::min(prefix.value_or(model.members.size()), model.members.size());
  ProbaAccumulator acc(features, model.n_classes);
  for (std::size_t m = 0; m < n; ++m) acc.add(model.members[m]);
  return acc.proba();
}

std::vector<int> ensemble_predict(const EnsembleModel& model, const Matrix& features,
                                  std::optional<std::size_t> prefix) {
  const Matrix p = ensemble_predict_proba(model, features, prefix);
  std::vector<int> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) out[i] = argmax(p.row(i));
  return out;
}

// ---------------------------------------------------------------------------
// Dispatch

EnsembleModel fit_ensemble(Method method, const Dataset& dataset, const TrainConfig& config) {
  auto reweight = [&](ReweightVariant v) {
    detail::validate(dataset, config);
    const auto cost = config.cost_matrix.resolve(class_distribution(dataset.labels()), dataset.n_classes());
    return fit_reweight_boost(v, dataset, cost, config);
  };
  switch (method) {
    case Method::SelfPacedEnsemble: return fit_self_paced_ensemble(dataset, config);
    case Method::BalanceCascade: return fit_balance_cascade(dataset, config);
    case Method::BalancedRandomForest:
      return fit_bagging_ensemble(BaggingVariant::BalancedRandomForest, dataset, config);
    case Method::EasyEnsemble: return fit_bagging_ensemble(BaggingVariant::EasyEnsemble, dataset, config);
    case Method::RusBoost: return fit_resample_boost(ResampleBoostVariant::RusBoost, dataset, config);
    case Method::UnderBagging: return fit_bagging_ensemble(BaggingVariant::UnderBagging, dataset, config);
    case Method::OverBoost: return fit_resample_boost(ResampleBoostVariant::OverBoost, dataset, config);
    case Method::SmoteBoost: return fit_resample_boost(ResampleBoostVariant::SmoteBoost, dataset, config);
    case Method::KmeansSmoteBoost: return fit_resample_boost(ResampleBoostVariant::KmeansSmoteBoost, dataset, config);
    case Method::OverBagging: return fit_bagging_ensemble(BaggingVariant::OverBagging, dataset, config);
    case Method::SmoteBagging: return fit_bagging_ensemble(BaggingVariant::SmoteBagging, dataset, config);
    case Method::AdaCost: return reweight(ReweightVariant::AdaCost);
    case Method::AdaUBoost: return reweight(ReweightVariant::AdaUBoost);
    case Method::AsymBoost: return reweight(ReweightVariant::AsymBoost);
    case Method::Samme: return fit_samme(dataset, config);
  }
  fail("UnknownMethod", ErrorKind::Usage, "unknown method");
}

// ---------------------------------------------------------------------------
// Shared machinery

namespace detail {

TreeParams tree_params_or(const TrainConfig& config, const TreeParams& fallback) {
  return config.tree_params.value_or(fallback);
}

TreeParams full_tree_params() { return TreeParams{}; }

void validate(const Dataset& dataset, const TrainConfig& config) {
  dataset.require_fittable();
  if (config.n_estimators == 0) {
    fail("InvalidParameter", ErrorKind::Usage, "n_estimators must be >= 1");
  }
  for (const auto& m : config.eval_metrics) {
    if (!is_metric(m)) fail("UnknownMetric", ErrorKind::Usage, "unknown eval metric '" + m + "'");
  }
  if (config.train_verbose.kind == TrainVerbose::Kind::EveryN && config.train_verbose.every == 0) {
    fail("InvalidParameter", ErrorKind::Usage, "train_verbose every_n needs n >= 1");
  }
  for (const auto& [name, eval] : config.eval_datasets) {
    if (eval.n_features() != dataset.n_features()) {
      fail("ShapeMismatch", ErrorKind::Data, "eval dataset '" + name + "' has the wrong feature width");
    }
    if (eval.n_classes() > dataset.n_classes()) {
      fail("LabelOutOfRange", ErrorKind::Data, "eval dataset '" + name + "' has labels unknown to the training set");
    }
    if (config.train_verbose.kind != TrainVerbose::Kind::Off) {
      const auto dist = class_distribution(eval.labels());
      for (std::size_t c = 0; c < dataset.n_classes(); ++c) {
        if (dist.count(static_cast<int>(c)) == 0) {
          fail("AbsentTrueClass", ErrorKind::Data,
               "eval dataset '" + name + "' has no samples of class " + std::to_string(c));
        }
      }
    }
  }
}

EnsembleModel start_model(Method method, const Dataset& dataset, const TrainConfig& config) {
  EnsembleModel model;
  model.method = method;
  model.n_classes = dataset.n_classes();
  model.n_features = dataset.n_features();
  for (std::size_t c = 0; c < dataset.n_classes(); ++c) model.class_names.push_back(dataset.class_name(static_cast<int>(c)));
  model.config["n_estimators"] = std::to_string(config.n_estimators);
  model.config["seed"] = std::to_string(config.seed.value);
  model.config["balancing_schedule"] = to_string(config.balancing_schedule.kind);
  if (config.tree_params) {
    const auto& p = *config.tree_params;
    model.config["max_depth"] = p.max_depth ? std::to_string(*p.max_depth) : "none";
    model.config["min_samples_leaf"] = std::to_string(p.min_samples_leaf);
    model.config["max_features"] = p.max_features == MaxFeatures::All    ? "all"
                                   : p.max_features == MaxFeatures::Sqrt ? "sqrt"
                                                                         : std::to_string(p.max_features_count);
  }
  if (config.targets.target_label) model.config["target_label"] = std::to_string(*config.targets.target_label);
  if (config.targets.n_target_samples) model.config["n_target_samples"] = std::to_string(*config.targets.n_target_samples);
  if (config.targets.per_class) {
    std::string s;
    for (const auto& [label, n] : *config.targets.per_class) {
      if (!s.empty()) s += ",";
      s += std::to_string(label) + ":" + std::to_string(n);
    }
    model.config["n_target_samples"] = s;
  }
  return model;
}

SamplingTargets final_targets(const ClassDistribution& dist, TargetMode default_mode, const TrainConfig& config) {
  const bool explicit_request = config.targets.n_target_samples || config.targets.per_class;
  return resolve_sampling_targets(dist, explicit_request ? TargetMode::Explicit : default_mode, config.targets);
}

TrainingLogger::TrainingLogger(const Dataset& train, const TrainConfig& config, std::size_t n_classes)
    : config_(config), enabled_(config.train_verbose.kind != TrainVerbose::Kind::Off), k_(n_classes) {
  if (!enabled_) return;
  metrics_ = config.eval_metrics.empty() ? std::vector<std::string>{"balanced_acc", "macro_f1", "macro_gmean"}
                                         : config.eval_metrics;
  if (!config.eval_datasets.contains("train")) datasets_.emplace_back("train", &train);
  for (const auto& [name, data] : config.eval_datasets) datasets_.emplace_back(name, &data);
  for (const auto& [name, data] : datasets_) accumulators_.emplace_back(data->features(), k_);
}

void TrainingLogger::add(const Member& member, std::size_t iteration, const ClassCounts& counts, bool is_last) {
  if (!enabled_) return;
  for (auto& acc : accumulators_) acc.add(member);
  last_iteration_ = iteration;
  last_counts_ = counts;
  any_ = true;
  if (should_log(config_.train_verbose, iteration, is_last)) record(iteration, counts);
}

void TrainingLogger::finish() {
  if (!enabled_ || !any_) return;
  if (log_.records.empty() || log_.records.back().iteration != last_iteration_) {
    record(last_iteration_, last_counts_);
  }
}

void TrainingLogger::record(std::size_t iteration, const ClassCounts& counts) {
  LogRecord rec;
  rec.iteration = iteration;
  rec.resampled_counts = counts;
  for (std::size_t d = 0; d < datasets_.size(); ++d) {
    const auto pred = accumulators_[d].predict();
    const auto cm = confusion_matrix(datasets_[d].second->labels(), pred, k_);
    auto& row = rec.metrics[datasets_[d].first];
    for (const auto& m : metrics_) row[m] = compute_metric(m, cm);
  }
  if (config_.on_log) config_.on_log(rec);
  log_.records.push_back(std::move(rec));
}

void rethrow_with_context(const Error& e, const std::string& context) {
  const std::string what = e.what();
  const std::string prefix = e.name() + ": ";
  const std::string message = what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
  throw Error(e.name(), e.kind(), context + ": " + message);
}

void parallel_for(std::size_t n, std::size_t jobs, const std::string& context,
                  const std::function<void(std::size_t)>& task) {
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](std::size_t i) {
    try {
      task(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) run(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) run(i);
      });
    }
    for (auto& t : threads) t.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const Error& e) {
      rethrow_with_context(e, context + " " + std::to_string(i));
    }
  }
}

}  // namespace detail

}  // namespace imbens
