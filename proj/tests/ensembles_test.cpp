#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "imbens/ensemble.hpp"
#include "imbens/metrics.hpp"
#include "imbens/model_io.hpp"
#include "test_support.hpp"

using namespace imbens;
using testing::blobs;
using testing::error_name;

namespace {

void check_proba_rows(const Matrix& p, std::size_t k) {
  REQUIRE(p.cols() == k);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0.0;
    for (double v : p.row(i)) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

double train_bacc(const EnsembleModel& m, const Dataset& ds) {
  return balanced_accuracy(confusion_matrix(ds.labels(), ensemble_predict(m, ds.features()), ds.n_classes()));
}

std::vector<std::vector<double>> weight_trajectory(Method method, const Dataset& ds, TrainConfig cfg) {
  std::vector<std::vector<double>> out;
  cfg.on_round = [&](const RoundInfo& info) { out.emplace_back(info.weights.begin(), info.weights.end()); };
  fit_ensemble(method, ds, cfg);
  return out;
}

double class_mass(const std::vector<double>& w, const Dataset& ds, int c) {
  double s = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (ds.labels()[i] == c) s += w[i];
  }
  return s;
}

}  // namespace

TEST_CASE("method ids") {
  const auto& all = imbalance_methods();
  CHECK(all.size() == 14);
  for (Method m : all) CHECK(parse_method(method_id(m)) == m);
  CHECK(method_id(Method::SelfPacedEnsemble) == "self-paced-ensemble");
  CHECK(method_id(Method::KmeansSmoteBoost) == "kmeans-smote-boost");
  CHECK_FALSE(parse_method("nosuch").has_value());
}

TEST_CASE("cost matrices") {
  CHECK(error_name([] { CostMatrix(2, {1, 1, 1, 0}); }) == "InvalidCostMatrix");
  CHECK(error_name([] { CostMatrix(2, {0, 0, 0, 0}); }) == "InvalidCostMatrix");
  CHECK(error_name([] { CostMatrix(2, {0, -1, 1, 0}); }) == "InvalidCostMatrix");
  CHECK(error_name([] { CostMatrix(2, {0, 1, 1}); }) == "InvalidCostMatrix");
  const ClassDistribution d{{{0, 90}, {1, 10}}};
  const auto inv = CostMatrix::inverse(d, 2);
  CHECK(inv(0, 1) == doctest::Approx(10.0 / 90.0));
  CHECK(inv(1, 0) == doctest::Approx(9.0));
  CHECK(CostMatrix::uniform(3).max_cost() == 1.0);
}

TEST_CASE("log schedule") {
  std::vector<std::size_t> logged;
  for (std::size_t i = 0; i < 25; ++i) {
    if (should_log(TrainVerbose::every_n(10), i, i == 24)) logged.push_back(i);
  }
  CHECK(logged == std::vector<std::size_t>{0, 10, 20, 24});
  CHECK_FALSE(should_log(TrainVerbose::off(), 24, true));
  CHECK(should_log(TrainVerbose::full(), 3, false));
}

TEST_CASE("resample boosting separates separable data") {
  const auto ds = blobs({20, 20}, 2, 3, 0.1);
  for (Method m : {Method::RusBoost, Method::OverBoost, Method::SmoteBoost, Method::KmeansSmoteBoost}) {
    TrainConfig cfg;
    cfg.n_estimators = 5;
    const auto model = fit_ensemble(m, ds, cfg);
    CHECK(train_bacc(model, ds) == 1.0);
    // A perfect round gets the capped vote weight and ends training.
    CHECK(model.members.size() == 1);
    CHECK(model.members[0].vote_weight == doctest::Approx(std::log(1e9)));
  }
}

TEST_CASE("degenerate single-round ensembles equal their tree") {
  const auto ds = blobs({30, 10}, 2, 4);
  TrainConfig cfg;
  cfg.n_estimators = 1;
  cfg.targets.per_class = ClassCounts{{0, 30}, {1, 10}};
  for (Method m : {Method::RusBoost, Method::AdaCost, Method::UnderBagging, Method::SelfPacedEnsemble}) {
    const auto model = fit_ensemble(m, ds, cfg);
    REQUIRE(model.members.size() == 1);
    CHECK(ensemble_predict(model, ds.features()) == tree_predict(model.members[0].trees[0], ds.features()));
    const auto a = ensemble_predict_proba(model, ds.features());
    const auto b = tree_predict_proba(model.members[0].trees[0], ds.features());
    for (std::size_t i = 0; i < a.data().size(); ++i) CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(1e-12));
  }
  const auto bag = fit_ensemble(Method::UnderBagging, ds, cfg);
  CHECK(bag.members[0].trees[0] == fit_tree(ds, TreeParams{}, Seed{}));
}

TEST_CASE("uniform costs reduce every reweighting variant to plain boosting") {
  const auto ds = blobs({28, 12}, 2, 9, 1.5);
  TrainConfig cfg;
  cfg.n_estimators = 10;
  cfg.seed = Seed{3};
  cfg.cost_matrix.kind = CostSpec::Kind::Uniform;
  const auto reference = weight_trajectory(Method::Samme, ds, cfg);
  const auto samme = fit_samme(ds, cfg);
  for (Method m : {Method::AdaCost, Method::AdaUBoost, Method::AsymBoost}) {
    const auto traj = weight_trajectory(m, ds, cfg);
    REQUIRE(traj.size() == reference.size());
    for (std::size_t r = 0; r < traj.size(); ++r) {
      for (std::size_t i = 0; i < traj[r].size(); ++i) CHECK(std::abs(traj[r][i] - reference[r][i]) <= 1e-9);
    }
    const auto model = fit_ensemble(m, ds, cfg);
    REQUIRE(model.members.size() == samme.members.size());
    for (std::size_t t = 0; t < model.members.size(); ++t) {
      CHECK(model.members[t].trees == samme.members[t].trees);
      CHECK(model.members[t].vote_weight == doctest::Approx(samme.members[t].vote_weight).epsilon(1e-12));
    }
  }
}

TEST_CASE("expensive minority errors attract weight") {
  const auto ds = blobs({30, 10}, 2, 10, 1.5);
  TrainConfig neutral;
  neutral.n_estimators = 3;
  neutral.cost_matrix.kind = CostSpec::Kind::Uniform;
  TrainConfig costly = neutral;
  costly.cost_matrix.kind = CostSpec::Kind::Explicit;
  costly.cost_matrix.matrix = CostMatrix(2, {0, 1, 10, 0});
  for (Method m : {Method::AdaCost, Method::AdaUBoost, Method::AsymBoost}) {
    const auto a = weight_trajectory(m, ds, neutral);
    const auto b = weight_trajectory(m, ds, costly);
    CHECK(class_mass(b[0], ds, 1) > class_mass(a[0], ds, 1));
  }
}

TEST_CASE("boosting rejects hopeless rounds") {
  // Identical features: no stump beats chance.
  Matrix x(10, 1, 0.5);
  const Dataset ds(x, {0, 1, 0, 1, 0, 1, 0, 1, 0, 1}, 2);
  TrainConfig cfg;
  CHECK(error_name([&] { fit_samme(ds, cfg); }) == "AllRoundsRejected");
}

TEST_CASE("progressive schedule drives resampled counts") {
  const auto ds = blobs({90, 10}, 2, 11, 2.0);
  TrainConfig cfg;
  cfg.n_estimators = 11;
  cfg.balancing_schedule = BalancingSchedule::progressive();
  cfg.train_verbose = TrainVerbose::full();
  for (Method m : {Method::RusBoost, Method::SelfPacedEnsemble}) {
    std::vector<ClassCounts> rounds;
    cfg.on_round = [&](const RoundInfo& info) { rounds.push_back(info.resampled_counts); };
    const auto model = fit_ensemble(m, ds, cfg);
    const ClassDistribution origin{{{0, 90}, {1, 10}}};
    for (const auto& rec : model.training_log.records) {
      CHECK(rec.resampled_counts ==
            schedule_targets(cfg.balancing_schedule, origin, SamplingTargets{{{0, 10}, {1, 10}}}, rec.iteration, 11)
                .targets);
    }
    if (model.training_log.records.size() > 5) CHECK(model.training_log.records[5].resampled_counts == ClassCounts{{0, 50}, {1, 10}});
  }
}

TEST_CASE("training log contents") {
  const auto [train, test] = generate_imbalance_data(GenerateOptions{.seed = Seed{5}});
  TrainConfig cfg;
  cfg.n_estimators = 25;
  const auto quiet = fit_ensemble(Method::SelfPacedEnsemble, train, cfg);
  CHECK(quiet.training_log.records.empty());

  cfg.train_verbose = TrainVerbose::every_n(10);
  cfg.eval_datasets.emplace("test", test);
  std::vector<std::size_t> streamed;
  cfg.on_log = [&](const LogRecord& r) { streamed.push_back(r.iteration); };
  const auto model = fit_ensemble(Method::SelfPacedEnsemble, train, cfg);
  std::vector<std::size_t> iters;
  for (const auto& r : model.training_log.records) iters.push_back(r.iteration);
  CHECK(iters == std::vector<std::size_t>{0, 10, 20, 24});
  CHECK(streamed == iters);
  const auto& last = model.training_log.records.back();
  CHECK(last.metrics.count("train") == 1);
  const auto cm = confusion_matrix(test.labels(), ensemble_predict(model, test.features()), 2);
  CHECK(last.metrics.at("test").at("balanced_acc") == balanced_accuracy(cm));
  CHECK(last.metrics.at("test").at("macro_gmean") == macro_gmean(cm));

  // Logging does not change the fitted members.
  CHECK(model.members == quiet.members);

  TrainConfig bad;
  bad.eval_metrics = {"auc"};
  bad.train_verbose = TrainVerbose::full();
  CHECK(error_name([&] { fit_ensemble(Method::RusBoost, train, bad); }) == "UnknownMetric");
}

TEST_CASE("bagging members and parallel equivalence") {
  const auto ds = blobs({60, 12, 7}, 3, 12, 1.5);
  TrainConfig cfg;
  cfg.n_estimators = 8;
  cfg.seed = Seed{21};
  std::vector<ClassCounts> seen;
  cfg.on_round = [&](const RoundInfo& info) { seen.push_back(info.resampled_counts); };
  fit_ensemble(Method::UnderBagging, ds, cfg);
  CHECK(seen.size() == 8);
  for (const auto& c : seen) CHECK(c == ClassCounts{{0, 7}, {1, 7}, {2, 7}});
  cfg.on_round = nullptr;

  for (Method m : {Method::UnderBagging, Method::OverBagging, Method::SmoteBagging, Method::BalancedRandomForest,
                   Method::EasyEnsemble}) {
    TrainConfig seq = cfg;
    TrainConfig par = cfg;
    par.jobs = 4;
    const auto a = fit_ensemble(m, ds, seq);
    const auto b = fit_ensemble(m, ds, par);
    CHECK(serialize_model(a) == serialize_model(b));
    for (const auto& mem : a.members) CHECK(mem.vote_weight == 1.0);
  }
  const auto easy = fit_ensemble(Method::EasyEnsemble, ds, cfg);
  CHECK(easy.members.size() == 8);
  for (const auto& mem : easy.members) {
    CHECK(mem.trees.size() <= 10);
    for (const auto& t : mem.trees) CHECK(t.depth() <= 1);
  }
}

TEST_CASE("balance cascade pool shrinks geometrically") {
  const auto ds = blobs({100, 10}, 2, 14, 1.0);
  TrainConfig cfg;
  cfg.n_estimators = 3;
  std::vector<std::size_t> pools;
  cfg.on_round = [&](const RoundInfo& info) { pools.push_back(info.pool_sizes.at(0)); };
  const auto model = fit_balance_cascade(ds, cfg);
  CHECK(pools == std::vector<std::size_t>{100, 32, 10});
  CHECK(model.members.size() == 3);

  TrainConfig one;
  one.n_estimators = 1;
  CHECK(fit_balance_cascade(ds, one).members.size() == 1);
  CHECK(error_name([&] { fit_balance_cascade(blobs({10, 10}, 2, 1), one); }) == "TooFewMajority");
}

TEST_CASE("self-paced ensemble trains balanced members") {
  const auto [train, test] = generate_imbalance_data(GenerateOptions{.seed = Seed{8}});
  TrainConfig cfg;
  std::vector<ClassCounts> counts;
  cfg.on_round = [&](const RoundInfo& info) { counts.push_back(info.resampled_counts); };
  const auto model = fit_self_paced_ensemble(train, cfg);
  CHECK(model.members.size() == 50);
  for (const auto& c : counts) CHECK(c == ClassCounts{{0, 10}, {1, 10}});
  check_proba_rows(ensemble_predict_proba(model, test.features()), 2);
}

TEST_CASE("every method handles three classes") {
  const auto ds = blobs({40, 10, 4}, 2, 15, 1.2);
  for (Method m : imbalance_methods()) {
    TrainConfig cfg;
    cfg.n_estimators = 10;
    const auto model = fit_ensemble(m, ds, cfg);
    CHECK(model.n_classes == 3);
    CHECK_FALSE(model.members.empty());
    check_proba_rows(ensemble_predict_proba(model, ds.features()), 3);
    const auto proba = ensemble_predict_proba(model, ds.features());
    const auto pred = ensemble_predict(model, ds.features());
    for (std::size_t i = 0; i < pred.size(); ++i) CHECK(pred[i] == argmax(proba.row(i)));
  }
}

TEST_CASE("fits are deterministic") {
  const auto ds = blobs({50, 9}, 3, 16, 1.5);
  for (Method m : imbalance_methods()) {
    TrainConfig cfg;
    cfg.n_estimators = 6;
    cfg.seed = Seed{99};
    CHECK(fit_ensemble(m, ds, cfg) == fit_ensemble(m, ds, cfg));
  }
}

TEST_CASE("prediction combines members") {
  TreeNode leaf;
  leaf.proba = {0.5, 0.5};
  const FittedTree half({leaf}, 2, 1);
  EnsembleModel tie;
  tie.n_classes = 2;
  tie.n_features = 1;
  tie.members.push_back(Member{{half}, {1.0}, 1.0});
  const Matrix x(3, 1, 0.0);
  CHECK(ensemble_predict(tie, x) == std::vector<int>{0, 0, 0});

  leaf.proba = {0.2, 0.8};
  const FittedTree tilt({leaf}, 2, 1);
  EnsembleModel same = tie;
  same.members = {Member{{tilt}, {1.0}, 2.0}, Member{{tilt}, {1.0}, 0.5}};
  const auto p = ensemble_predict_proba(same, x);
  CHECK(p(0, 1) == doctest::Approx(0.8));

  EnsembleModel mix = tie;
  mix.members = {Member{{half}, {1.0}, 1.0}, Member{{tilt}, {1.0}, 3.0}};
  CHECK(ensemble_predict_proba(mix, x)(0, 1) == doctest::Approx((0.5 + 3 * 0.8) / 4));
  CHECK(ensemble_predict_proba(mix, x, 1)(0, 1) == doctest::Approx(0.5));
  CHECK(error_name([&] { ensemble_predict(mix, Matrix(1, 2)); }) == "ShapeMismatch");
  EnsembleModel empty = tie;
  empty.members.clear();
  CHECK(error_name([&] { ensemble_predict(empty, x); }) == "EmptyModel");
}

TEST_CASE("incremental accumulation matches full prediction") {
  const auto ds = blobs({40, 10}, 2, 17, 1.5);
  TrainConfig cfg;
  cfg.n_estimators = 12;
  const auto model = fit_ensemble(Method::RusBoost, ds, cfg);
  ProbaAccumulator acc(ds.features(), 2);
  for (std::size_t t = 0; t < model.members.size(); ++t) {
    acc.add(model.members[t]);
    CHECK(acc.proba() == ensemble_predict_proba(model, ds.features(), t + 1));
  }
}

TEST_CASE("smote boost beats the bar on the 9:1 generator") {
  std::vector<double> scores;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto [train, test] = generate_imbalance_data(GenerateOptions{.seed = Seed{s}});
    TrainConfig cfg;
    cfg.seed = Seed{s};
    const auto model = fit_ensemble(Method::SmoteBoost, train, cfg);
    scores.push_back(balanced_accuracy(confusion_matrix(test.labels(), ensemble_predict(model, test.features()), 2)));
  }
  std::sort(scores.begin(), scores.end());
  CHECK((scores[4] + scores[5]) / 2 > 0.85);
}
