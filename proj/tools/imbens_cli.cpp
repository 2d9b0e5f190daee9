// Command-line harness: generate, train, evaluate, compare, visualize.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imbens/csv.hpp"
#include "imbens/dataset.hpp"
#include "imbens/ensemble.hpp"
#include "imbens/error.hpp"
#include "imbens/metrics.hpp"
#include "imbens/model_io.hpp"
#include "imbens/visualizer.hpp"

namespace fs = std::filesystem;
using namespace imbens;

namespace {

[[noreturn]] void usage_error(const std::string& msg) { fail("UsageError", ErrorKind::Usage, msg); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) return out;
    start = pos + 1;
  }
}

template <typename T>
std::optional<T> parse_number(const std::string& s) {
  T v{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::optional<double> parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) return std::nullopt;
  return v;
}

std::uint64_t default_seed() {
  const char* env = std::getenv("IMBENS_SEED");
  if (env == nullptr) return 0;
  const auto v = parse_number<std::uint64_t>(env);
  if (!v) usage_error(std::string("IMBENS_SEED is not an unsigned integer: '") + env + "'");
  return *v;
}

std::string method_list() {
  std::string out;
  for (Method m : imbalance_methods()) out += (out.empty() ? "" : ", ") + method_id(m);
  return out;
}

Method require_method(const std::string& id) {
  const auto m = parse_method(id);
  if (!m || *m == Method::Samme) {
    fail("UnknownMethod", ErrorKind::Usage, "--method: unknown method '" + id + "'; valid ids: " + method_list());
  }
  return *m;
}

// "name=path" or a bare path named by its stem.
std::pair<std::string, std::string> named_path(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) return {fs::path(arg).stem().string(), arg};
  return {arg.substr(0, eq), arg.substr(eq + 1)};
}

void require_safe_name(const std::string& name, const std::string& flag) {
  const bool ok = !name.empty() && std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
  if (!ok) usage_error(flag + ": name '" + name + "' may only contain letters, digits, '_', '-' and '.'");
}

int class_index(const std::vector<std::string>& names, const std::string& name, const std::string& flag) {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) fail("UnknownLabel", ErrorKind::Data, flag + ": class '" + name + "' not in the training data");
  return static_cast<int>(it - names.begin());
}

struct TrainFlags {
  std::size_t n_estimators = 50;
  std::string max_depth;
  std::size_t min_samples_leaf = 1;
  std::string max_features;
  std::string balancing_schedule = "uniform";
  std::string target_label;
  std::string n_target_samples;
  std::string cost_matrix = "inverse";
  std::vector<std::string> eval_datasets;
  std::string eval_metrics;
  std::size_t train_verbose = 0;
  std::size_t k_neighbors = 5;
  std::size_t n_clusters = 8;
  double imbalance_ratio_threshold = 0.5;
  std::size_t k_bins = 5;
  std::size_t inner_rounds = 10;
  std::size_t jobs = 1;
  std::string label_column = "label";
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--n-estimators", f.n_estimators, "Ensemble size T")->check(CLI::PositiveNumber);
  cmd->add_option("--max-depth", f.max_depth, "Tree depth limit, or 'none'");
  cmd->add_option("--min-samples-leaf", f.min_samples_leaf, "Minimum rows per leaf")->check(CLI::PositiveNumber);
  cmd->add_option("--max-features", f.max_features, "Features per split: all, sqrt or a count");
  cmd->add_option("--balancing-schedule", f.balancing_schedule, "Resampling schedule")
      ->check(CLI::IsMember({"uniform", "progressive"}));
  cmd->add_option("--target-label", f.target_label, "Class the sampling targets apply to");
  cmd->add_option("--n-target-samples", f.n_target_samples, "Target count, or class:count pairs joined by ','");
  cmd->add_option("--cost-matrix", f.cost_matrix,
                  "uniform, inverse, log1p-inverse, or K*K row-major costs joined by ','");
  cmd->add_option("--eval-dataset", f.eval_datasets, "Extra logged dataset as name=path (repeatable)");
  cmd->add_option("--eval-metrics", f.eval_metrics, "Logged metrics joined by ','");
  cmd->add_option("--train-verbose", f.train_verbose, "Print a log record every N rounds (0: off)");
  cmd->add_option("--k-neighbors", f.k_neighbors, "SMOTE neighbours")->check(CLI::PositiveNumber);
  cmd->add_option("--n-clusters", f.n_clusters, "k-means clusters")->check(CLI::PositiveNumber);
  cmd->add_option("--imbalance-ratio-threshold", f.imbalance_ratio_threshold, "k-means-SMOTE cluster filter");
  cmd->add_option("--k-bins", f.k_bins, "Self-paced hardness bins")->check(CLI::PositiveNumber);
  cmd->add_option("--inner-rounds", f.inner_rounds, "Boosting rounds inside each easy-ensemble member")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--label-column", f.label_column, "Name of the label column");
}

CostSpec parse_cost_spec(const std::string& text) {
  CostSpec spec;
  if (text == "uniform") {
    spec.kind = CostSpec::Kind::Uniform;
  } else if (text == "inverse") {
    spec.kind = CostSpec::Kind::Inverse;
  } else if (text == "log1p-inverse") {
    spec.kind = CostSpec::Kind::Log1pInverse;
  } else {
    std::vector<double> values;
    for (const auto& cell : split(text, ',')) {
      const auto v = parse_double(cell);
      if (!v) usage_error("--cost-matrix: '" + cell + "' is not a number");
      values.push_back(*v);
    }
    std::size_t k = 0;
    while (k * k < values.size()) ++k;
    if (k * k != values.size()) {
      fail("InvalidCostMatrix", ErrorKind::Usage,
           "--cost-matrix: " + std::to_string(values.size()) + " entries is not a square matrix");
    }
    spec.kind = CostSpec::Kind::Explicit;
    spec.matrix = CostMatrix(k, std::move(values));
  }
  return spec;
}

TreeParams parse_tree_params(const TrainFlags& f) {
  TreeParams p;
  if (!f.max_depth.empty()) {
    if (f.max_depth == "none") {
      p.max_depth.reset();
    } else {
      const auto d = parse_number<std::size_t>(f.max_depth);
      if (!d || *d == 0) usage_error("--max-depth: expected a positive integer or 'none'");
      p.max_depth = *d;
    }
  }
  p.min_samples_leaf = f.min_samples_leaf;
  if (f.max_features == "sqrt") {
    p.max_features = MaxFeatures::Sqrt;
  } else if (!f.max_features.empty() && f.max_features != "all") {
    const auto n = parse_number<std::size_t>(f.max_features);
    if (!n || *n == 0) usage_error("--max-features: expected all, sqrt or a positive count");
    p.max_features = MaxFeatures::Count;
    p.max_features_count = *n;
  }
  return p;
}

Dataset load_dataset(const std::string& path, const std::string& label_column,
                     const std::vector<std::string>& class_names = {}) {
  return encode_labels(read_csv(path, label_column), class_names);
}

void print_log_record(const LogRecord& rec) {
  std::string line = "round " + std::to_string(rec.iteration) + " | resampled";
  for (const auto& [label, n] : rec.resampled_counts) line += " " + std::to_string(label) + ":" + std::to_string(n);
  for (const auto& [ds, metrics] : rec.metrics) {
    line += " | " + ds;
    for (const auto& [metric, value] : metrics) line += " " + metric + " " + format_3dp(value);
  }
  std::cout << line << "\n" << std::flush;
}

TrainConfig build_config(const TrainFlags& f, const Dataset& train, std::uint64_t seed, bool verbose_allowed) {
  TrainConfig cfg;
  cfg.n_estimators = f.n_estimators;
  if (!f.max_depth.empty() || !f.max_features.empty() || f.min_samples_leaf != 1) cfg.tree_params = parse_tree_params(f);
  cfg.balancing_schedule =
      f.balancing_schedule == "progressive" ? BalancingSchedule::progressive() : BalancingSchedule::uniform();
  const auto& names = train.class_names();
  if (!f.target_label.empty()) cfg.targets.target_label = class_index(names, f.target_label, "--target-label");
  if (!f.n_target_samples.empty()) {
    if (f.n_target_samples.find(':') == std::string::npos) {
      const auto n = parse_number<std::size_t>(f.n_target_samples);
      if (!n) usage_error("--n-target-samples: expected a count or class:count pairs");
      cfg.targets.n_target_samples = *n;
    } else {
      ClassCounts per_class;
      for (const auto& pair : split(f.n_target_samples, ',')) {
        const auto colon = pair.rfind(':');
        const auto n = colon == std::string::npos ? std::nullopt : parse_number<std::size_t>(pair.substr(colon + 1));
        if (!n) usage_error("--n-target-samples: malformed pair '" + pair + "'");
        per_class[class_index(names, pair.substr(0, colon), "--n-target-samples")] = *n;
      }
      cfg.targets.per_class = per_class;
    }
  }
  cfg.cost_matrix = parse_cost_spec(f.cost_matrix);
  for (const auto& arg : f.eval_datasets) {
    const auto [name, path] = named_path(arg);
    cfg.eval_datasets.emplace(name, load_dataset(path, f.label_column, names));
  }
  if (!f.eval_metrics.empty()) cfg.eval_metrics = split(f.eval_metrics, ',');
  if (verbose_allowed && f.train_verbose > 0) {
    cfg.train_verbose = TrainVerbose::every_n(f.train_verbose);
    cfg.on_log = print_log_record;
  }
  cfg.seed = Seed{seed};
  cfg.jobs = f.jobs;
  cfg.k_neighbors = f.k_neighbors;
  cfg.n_clusters = f.n_clusters;
  cfg.imbalance_ratio_threshold = f.imbalance_ratio_threshold;
  cfg.k_bins = f.k_bins;
  cfg.inner_rounds = f.inner_rounds;
  return cfg;
}

bool is_reweighting(Method m) { return m == Method::AdaCost || m == Method::AdaUBoost || m == Method::AsymBoost; }

// ---- generate ----

struct GenerateFlags {
  std::size_t n_samples = 200;
  std::vector<double> weights{0.9, 0.1};
  std::size_t n_features = 2;
  double test_fraction = 0.5;
  std::uint64_t seed = 0;
  std::string train_out = "train.csv";
  std::string test_out = "test.csv";
};

int run_generate(const GenerateFlags& f) {
  if (f.weights.size() < 2) usage_error("--weights: need ≥2 classes");
  for (double w : f.weights) {
    if (!(w > 0.0)) usage_error("--weights: weights must be positive");
  }
  if (!(f.test_fraction > 0.0 && f.test_fraction < 1.0)) usage_error("--test-fraction: must lie in (0, 1)");
  GenerateOptions opts;
  opts.n_samples = f.n_samples;
  opts.class_weights = f.weights;
  opts.n_features = f.n_features;
  opts.test_fraction = f.test_fraction;
  opts.seed = Seed{f.seed};
  const auto [train, test] = generate_imbalance_data(opts);
  write_dataset_csv(train, f.train_out);
  write_dataset_csv(test, f.test_out);
  std::cout << "wrote " << f.train_out << " (" << train.size() << " rows) and " << f.test_out << " ("
            << test.size() << " rows)\n";
  return 0;
}

// ---- train ----

struct TrainCmd {
  std::string method;
  std::string train_path;
  std::string model_out = "model.json";
  std::uint64_t seed = 0;
  TrainFlags flags;
};

int run_train(const TrainCmd& c) {
  const Method method = require_method(c.method);
  const Dataset train = load_dataset(c.train_path, c.flags.label_column);
  const TrainConfig cfg = build_config(c.flags, train, c.seed, true);
  if (is_reweighting(method)) {
    const auto cost = cfg.cost_matrix.resolve(class_distribution(train.labels()), train.n_classes());
    std::cout << "cost matrix (" << cfg.cost_matrix.describe() << "): " << cost.to_string() << "\n";
  }
  const EnsembleModel model = fit_ensemble(method, train, cfg);
  save_model(model, c.model_out);
  std::cout << "trained " << method_id(method) << " with " << model.members.size() << " members; saved "
            << c.model_out << "\n";
  return 0;
}

// ---- evaluate ----

struct EvaluateCmd {
  std::string model_path;
  std::string test_path;
  std::string name = "model";
  std::string label_column = "label";
};

int run_evaluate(const EvaluateCmd& c) {
  const EnsembleModel model = load_model(c.model_path);
  const Dataset test = load_dataset(c.test_path, c.label_column, model.class_names);
  if (test.n_features() != model.n_features) {
    fail("ShapeMismatch", ErrorKind::Data,
         "test data has " + std::to_string(test.n_features()) + " features, model expects " +
             std::to_string(model.n_features));
  }
  const auto pred = ensemble_predict(model, test.features());
  std::cout << evaluate_print(c.name, test.labels(), pred) << "\n";
  return 0;
}

// ---- compare ----

struct CompareCmd {
  std::string methods;
  std::string train_path;
  std::string test_path;
  std::size_t seeds = 3;
  std::uint64_t seed = 0;
  std::string metrics = "balanced_acc,macro_f1,macro_gmean,accuracy";
  std::string out = "compare.csv";
  TrainFlags flags;
};

std::string csv_field(std::string s) {
  for (char& ch : s) {
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

std::string fmt_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int run_compare(const CompareCmd& c) {
  std::vector<Method> methods;
  if (c.methods.empty()) {
    methods = imbalance_methods();
  } else {
    for (const auto& id : split(c.methods, ',')) methods.push_back(require_method(id));
  }
  const auto metrics = split(c.metrics, ',');
  for (const auto& m : metrics) {
    if (!is_metric(m)) fail("UnknownMetric", ErrorKind::Usage, "--metrics: unknown metric '" + m + "'");
  }
  if (c.seeds == 0) usage_error("--seeds: must be >= 1");
  const Dataset train = load_dataset(c.train_path, c.flags.label_column);
  const Dataset test = load_dataset(c.test_path, c.flags.label_column, train.class_names());
  if (test.n_features() != train.n_features()) {
    fail("ShapeMismatch", ErrorKind::Data, "train and test data have different feature widths");
  }

  std::string out = "method,seed,metric,value,reason\n";
  std::string summary;
  bool any_success = false;
  for (Method method : methods) {
    const std::string id = method_id(method);
    std::map<std::string, std::vector<double>> values;
    for (std::size_t s = 0; s < c.seeds; ++s) {
      const std::uint64_t seed = c.seed + s;
      try {
        const TrainConfig cfg = build_config(c.flags, train, seed, false);
        const EnsembleModel model = fit_ensemble(method, train, cfg);
        const auto cm = confusion_matrix(test.labels(), ensemble_predict(model, test.features()), test.n_classes());
        for (const auto& metric : metrics) {
          const double v = compute_metric(metric, cm);
          values[metric].push_back(v);
          out += id + "," + std::to_string(seed) + "," + metric + "," + fmt_value(v) + ",\n";
        }
        any_success = true;
      } catch (const Error& e) {
        const std::string reason = csv_field(e.what());
        for (const auto& metric : metrics) out += id + "," + std::to_string(seed) + "," + metric + ",NA," + reason + "\n";
        std::cerr << "imbens: " << id << " seed " << seed << " failed: " << e.what() << "\n";
      }
    }
    for (const auto& metric : metrics) {
      const auto it = values.find(metric);
      if (it == values.end()) {
        summary += id + ",median," + metric + ",NA,all seeds failed\n";
      } else {
        summary += id + ",median," + metric + "," + fmt_value(median(it->second)) + ",\n";
        std::cout << id << " median " << metric << " " << format_3dp(median(it->second)) << "\n";
      }
    }
  }
  write_file_atomic(c.out, out + summary);
  if (!any_success) fail("AllMethodsFailed", ErrorKind::Runtime, "no method trained successfully");
  return 0;
}

// ---- visualize ----

struct VisualizeCmd {
  std::vector<std::string> models;
  std::vector<std::string> datasets;
  std::size_t granularity = 1;
  std::string metrics = "balanced_acc,macro_f1,macro_gmean";
  std::string out_dir = "viz";
  std::size_t jobs = 1;
  std::string label_column = "label";
};

int run_visualize(const VisualizeCmd& c) {
  std::map<std::string, EnsembleModel> models;
  for (const auto& arg : c.models) {
    const auto [name, path] = named_path(arg);
    require_safe_name(name, "--model");
    if (!models.emplace(name, load_model(path)).second) usage_error("--model: duplicate name '" + name + "'");
  }
  const auto& names = models.begin()->second.class_names;
  for (const auto& [name, model] : models) {
    if (model.class_names != names) {
      fail("IncompatibleModels", ErrorKind::Data, "model '" + name + "' has different classes");
    }
  }
  std::map<std::string, Dataset> datasets;
  std::vector<std::string> dataset_names;
  for (const auto& arg : c.datasets) {
    const auto [name, path] = named_path(arg);
    require_safe_name(name, "--dataset");
    if (!datasets.emplace(name, load_dataset(path, c.label_column, names)).second) {
      usage_error("--dataset: duplicate name '" + name + "'");
    }
    dataset_names.push_back(name);
  }
  const auto state = fit_visualizer(std::move(models), std::move(datasets), c.granularity, c.jobs);

  fs::create_directories(c.out_dir);
  const fs::path dir(c.out_dir);
  const auto rows = performance_lineplot_data(state, split(c.metrics, ','), dataset_names);
  write_file_atomic(dir / "performance.csv", lineplot_csv(rows));
  write_file_atomic(dir / "performance.svg", render_svg(rows, SvgStyle{.title = "performance vs. ensemble size"}));
  std::size_t files = 2;
  for (const auto& [mname, model] : state.models) {
    for (const auto& [dname, ds] : state.datasets) {
      const auto heat = confusion_matrix_heatmap_data(state, mname, dname);
      const std::string stem = "confusion_" + mname + "_" + dname;
      write_file_atomic(dir / (stem + ".csv"), heatmap_csv(heat));
      write_file_atomic(dir / (stem + ".svg"), render_svg(heat));
      files += 2;
    }
  }
  std::cout << "wrote " << files << " files to " << c.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"imbens: ensemble learning for class-imbalanced data"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  try {
    seed = default_seed();
  } catch (const Error& e) {
    std::cerr << "imbens: error: " << e.what() << "\n";
    return 2;
  }

  GenerateFlags gen;
  gen.seed = seed;
  auto* generate = app.add_subcommand("generate", "Write a synthetic imbalanced train/test split as CSV");
  generate->add_option("--n-samples", gen.n_samples, "Total rows")->check(CLI::PositiveNumber);
  generate->add_option("--weights", gen.weights, "Class proportions joined by ','")->delimiter(',');
  generate->add_option("--n-features", gen.n_features, "Feature count")->check(CLI::PositiveNumber);
  generate->add_option("--test-fraction", gen.test_fraction, "Share of rows in the test split");
  generate->add_option("--seed", gen.seed, "Master seed (default: IMBENS_SEED or 0)");
  generate->add_option("--train-out", gen.train_out, "Training CSV path");
  generate->add_option("--test-out", gen.test_out, "Test CSV path");

  TrainCmd train;
  train.seed = seed;
  auto* train_cmd = app.add_subcommand("train", "Fit one method and save the model");
  train_cmd->add_option("--method", train.method, "Method id")->required();
  train_cmd->add_option("--train", train.train_path, "Training CSV")->required();
  train_cmd->add_option("--model-out", train.model_out, "Model file path");
  train_cmd->add_option("--seed", train.seed, "Master seed (default: IMBENS_SEED or 0)");
  add_train_flags(train_cmd, train.flags);

  EvaluateCmd eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a saved model on a CSV");
  eval_cmd->add_option("--model", eval.model_path, "Model file")->required();
  eval_cmd->add_option("--test", eval.test_path, "Test CSV")->required();
  eval_cmd->add_option("--name", eval.name, "Name printed before the metrics");
  eval_cmd->add_option("--label-column", eval.label_column, "Name of the label column");

  CompareCmd cmp;
  cmp.seed = seed;
  auto* cmp_cmd = app.add_subcommand("compare", "Benchmark several methods over several seeds");
  cmp_cmd->add_option("--methods", cmp.methods, "Method ids joined by ',' (default: all)");
  cmp_cmd->add_option("--train", cmp.train_path, "Training CSV")->required();
  cmp_cmd->add_option("--test", cmp.test_path, "Test CSV")->required();
  cmp_cmd->add_option("--seeds", cmp.seeds, "Number of master seeds");
  cmp_cmd->add_option("--seed", cmp.seed, "First master seed (default: IMBENS_SEED or 0)");
  cmp_cmd->add_option("--metrics", cmp.metrics, "Metrics joined by ','");
  cmp_cmd->add_option("--out", cmp.out, "Results CSV path");
  add_train_flags(cmp_cmd, cmp.flags);

  VisualizeCmd viz;
  auto* viz_cmd = app.add_subcommand("visualize", "Write performance curves and confusion heatmaps");
  viz_cmd->add_option("--model", viz.models, "Model as name=path (repeatable)")->required();
  viz_cmd->add_option("--dataset", viz.datasets, "Dataset CSV as name=path (repeatable)")->required();
  viz_cmd->add_option("--granularity", viz.granularity, "Prefix step")->check(CLI::PositiveNumber);
  viz_cmd->add_option("--metrics", viz.metrics, "Metrics joined by ','");
  viz_cmd->add_option("--out-dir", viz.out_dir, "Output directory");
  viz_cmd->add_option("--jobs", viz.jobs, "Worker threads")->check(CLI::PositiveNumber);
  viz_cmd->add_option("--label-column", viz.label_column, "Name of the label column");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*train_cmd) return run_train(train);
    if (*eval_cmd) return run_evaluate(eval);
    if (*cmp_cmd) return run_compare(cmp);
    if (*viz_cmd) return run_visualize(viz);
  } catch (const Error& e) {
    std::cerr << "imbens: error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::Usage: return 2;
      case ErrorKind::Data: return 3;
      case ErrorKind::Runtime: return 4;
    }
  } catch (const std::exception& e) {
    std::cerr << "imbens: error: InternalError: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
