#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "imbens/dataset.hpp"
#include "imbens/random.hpp"
#include "test_support.hpp"

using namespace imbens;
using testing::error_name;
using testing::make_dataset;

namespace {

ClassCounts pooled_counts(const Dataset& a, const Dataset& b) {
  ClassCounts out = class_distribution(a.labels()).counts;
  for (const auto& [c, n] : class_distribution(b.labels()).counts) out[c] += n;
  return out;
}

bool same_row(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
  return std::equal(a.row(i).begin(), a.row(i).end(), b.row(j).begin());
}

}  // namespace

TEST_CASE("rng draws are reproducible and in range") {
  Rng a(Seed{11});
  Rng b(Seed{11});
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const auto k = a.index(7);
    CHECK(k == b.index(7));
    CHECK(k < 7);
  }
}

TEST_CASE("derive_seed separates purposes and indices") {
  const Seed m{42};
  CHECK(derive_seed(m, "member", 3) == derive_seed(m, "member", 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100; ++i) {
    seen.insert(derive_seed(m, "member", i).value);
    seen.insert(derive_seed(m, "boost", i).value);
  }
  CHECK(seen.size() == 200);
  CHECK(derive_seed(Seed{1}, "x") != derive_seed(Seed{2}, "x"));
}

TEST_CASE("sample_without_replacement yields distinct positions") {
  Rng rng(Seed{5});
  for (std::size_t n : {1u, 5u, 40u}) {
    for (std::size_t k = 0; k <= n; ++k) {
      const auto s = rng.sample_without_replacement(n, k);
      CHECK(s.size() == k);
      CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == k);
      CHECK(std::all_of(s.begin(), s.end(), [&](std::size_t v) { return v < n; }));
    }
  }
}

TEST_CASE("normal draws have roughly unit variance") {
  Rng rng(Seed{3});
  double sum = 0.0;
  double sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("dataset validation") {
  CHECK(error_name([] { make_dataset({{0.0}, {1.0}}, {0}); }) == "InvalidDataset");
  CHECK(error_name([] { make_dataset({{0.0}}, {-1}); }) == "InvalidDataset");
  CHECK(error_name([] { make_dataset({{0.0}}, {2}, 2); }) == "InvalidDataset");
  CHECK(error_name([] { make_dataset({{NAN}}, {0}); }) == "InvalidDataset");
  const auto ds = make_dataset({{0.0}, {1.0}, {2.0}}, {0, 2, 2});
  CHECK(ds.n_classes() == 3);
  CHECK(ds.class_name(2) == "2");
  CHECK(error_name([&] { ds.require_fittable(); }) == "InsufficientClasses");
}

TEST_CASE("class_distribution tallies labels") {
  const std::vector<int> y{1, 0, 1, 1, 2};
  const auto d = class_distribution(y);
  CHECK(d.counts == ClassCounts{{0, 1}, {1, 3}, {2, 1}});
  CHECK(d.total() == 5);
  CHECK(d.minority_class() == 0);
  CHECK(d.majority_class() == 1);
  CHECK(error_name([] { class_distribution(std::vector<int>{}); }) == "EmptyDataset");
}

TEST_CASE("largest_remainder matches a brute-force oracle") {
  Rng rng(Seed{17});
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 1 + rng.index(5);
    std::vector<double> shares(k);
    double s = 0.0;
    for (auto& v : shares) s += (v = rng.uniform() + 0.01);
    const std::size_t total = rng.index(300);
    for (auto& v : shares) v = v / s * static_cast<double>(total);
    const auto got = largest_remainder(shares, total);
    // Oracle: floors, then one unit to each of the largest remainders.
    std::vector<std::size_t> expect(k);
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t used = 0;
    for (std::size_t i = 0; i < k; ++i) {
      expect[i] = static_cast<std::size_t>(std::floor(shares[i]));
      used += expect[i];
      rem.emplace_back(-(shares[i] - std::floor(shares[i])), i);
    }
    std::sort(rem.begin(), rem.end());
    for (std::size_t r = 0; r < total - used; ++r) ++expect[rem[r].second];
    CHECK(got == expect);
  }
}

TEST_CASE("generate_imbalance_data: 200 samples at 9:1 split in half") {
  GenerateOptions opt;
  opt.seed = Seed{7};
  const auto [train, test] = generate_imbalance_data(opt);
  CHECK(train.size() == 100);
  CHECK(test.size() == 100);
  CHECK(pooled_counts(train, test) == ClassCounts{{0, 180}, {1, 20}});
  CHECK(train.n_features() == 2);
}

TEST_CASE("generate_imbalance_data: weight normalization") {
  GenerateOptions balanced;
  balanced.n_samples = 100;
  balanced.class_weights = {0.5, 0.5};
  const auto [a, b] = generate_imbalance_data(balanced);
  CHECK(pooled_counts(a, b) == ClassCounts{{0, 50}, {1, 50}});

  GenerateOptions raw;
  raw.n_samples = 100;
  raw.class_weights = {9.0, 1.0};
  GenerateOptions norm = raw;
  norm.class_weights = {0.9, 0.1};
  const auto [r1, r2] = generate_imbalance_data(raw);
  const auto [n1, n2] = generate_imbalance_data(norm);
  CHECK(pooled_counts(r1, r2) == pooled_counts(n1, n2));
}

TEST_CASE("generate_imbalance_data: errors and determinism") {
  GenerateOptions bad;
  bad.class_weights = {0.9, 0.0};
  CHECK(error_name([&] { generate_imbalance_data(bad); }) == "InvalidWeights");
  GenerateOptions frac;
  frac.test_fraction = 1.0;
  CHECK(error_name([&] { generate_imbalance_data(frac); }) == "InvalidFraction");

  GenerateOptions opt;
  opt.seed = Seed{99};
  opt.n_features = 4;
  opt.class_weights = {0.6, 0.3, 0.1};
  const auto [a1, a2] = generate_imbalance_data(opt);
  const auto [b1, b2] = generate_imbalance_data(opt);
  CHECK(a1.features() == b1.features());
  CHECK(a1.labels() == b1.labels());
  CHECK(a2.features() == b2.features());
  opt.seed = Seed{100};
  const auto [c1, c2] = generate_imbalance_data(opt);
  CHECK_FALSE(a1.features() == c1.features());
}

TEST_CASE("cluster means sit pairwise 3 apart") {
  for (std::size_t k : {2u, 3u, 4u}) {
    const auto means = cluster_means(k, k + 1, Seed{5});
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j) {
        double d2 = 0.0;
        for (std::size_t f = 0; f < means.cols(); ++f) d2 += std::pow(means(i, f) - means(j, f), 2);
        CHECK(std::sqrt(d2) == doctest::Approx(3.0).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("make_imbalance hits targets and keeps order") {
  const auto ds = testing::blobs({100, 100}, 2, 1);
  const auto out = make_imbalance(ds, SamplingTargets{{{0, 100}, {1, 10}}}, Seed{3});
  CHECK(class_distribution(out.labels()).counts == ClassCounts{{0, 100}, {1, 10}});
  // Output rows are a subsequence of the input rows.
  std::size_t j = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    while (j < ds.size() && !same_row(ds.features(), j, out.features(), i)) ++j;
    REQUIRE(j < ds.size());
    CHECK(ds.labels()[j] == out.labels()[i]);
    ++j;
  }

  const auto same = make_imbalance(ds, SamplingTargets{{{0, 100}, {1, 100}}}, Seed{3});
  CHECK(same.features() == ds.features());
  CHECK(same.labels() == ds.labels());

  CHECK(error_name([&] { make_imbalance(ds, SamplingTargets{{{0, 101}, {1, 10}}}, Seed{3}); }) ==
        "TargetExceedsAvailable");
}

TEST_CASE("train_test_split partitions rows") {
  const auto ds = testing::blobs({50, 50}, 2, 4);
  const auto [train, test] = train_test_split(ds, 0.5, false, Seed{1});
  CHECK(train.size() == 50);
  CHECK(test.size() == 50);
  std::multiset<std::vector<double>> all;
  std::multiset<std::vector<double>> parts;
  for (std::size_t i = 0; i < ds.size(); ++i) all.insert({ds.features().row(i).begin(), ds.features().row(i).end()});
  for (const auto* part : {&train, &test}) {
    for (std::size_t i = 0; i < part->size(); ++i) {
      parts.insert({part->features().row(i).begin(), part->features().row(i).end()});
    }
  }
  CHECK(all == parts);
  CHECK(error_name([&] { train_test_split(ds, 1.0, true, Seed{1}); }) == "InvalidFraction");
  CHECK(error_name([&] { train_test_split(ds, 0.0, true, Seed{1}); }) == "InvalidFraction");
}

TEST_CASE("stratified split keeps class proportions") {
  const auto ds = testing::blobs({90, 10}, 2, 4);
  const auto [train, test] = train_test_split(ds, 0.5, true, Seed{1});
  CHECK(class_distribution(test.labels()).counts == ClassCounts{{0, 45}, {1, 5}});

  const auto single = testing::blobs({10, 1}, 2, 4);
  CHECK(error_name([&] { train_test_split(single, 0.5, true, Seed{1}); }) == "InsufficientClassSamples");

  Rng rng(Seed{8});
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::size_t> counts{2 + rng.index(60), 2 + rng.index(20), 2 + rng.index(10)};
    const auto data = testing::blobs(counts, 1, trial);
    const double f = 0.1 + 0.8 * rng.uniform();
    const auto [tr, te] = train_test_split(data, f, true, Seed{static_cast<std::uint64_t>(trial)});
    const auto te_counts = class_distribution(te.labels()).counts;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      const double share = static_cast<double>(te_counts.at(static_cast<int>(c))) / static_cast<double>(counts[c]);
      CHECK(std::abs(share - f) <= 1.0 / static_cast<double>(counts[c]) + 1e-12);
    }
  }
}
