#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "osrlab/data.hpp"

using namespace osrlab;

namespace {

GaussianMixtureSpec small_spec(std::size_t classes, std::size_t per_class) {
  GaussianMixtureSpec s;
  s.total_classes = classes;
  s.dims = 3;
  s.per_class_count = per_class;
  return s;
}

std::multiset<std::vector<float>> payloads(const Dataset& ds) {
  std::multiset<std::vector<float>> out;
  for (const auto& ex : ds.examples()) out.insert(ex.payload);
  return out;
}

}  // namespace

TEST_CASE("dataset validates labels and widths") {
  CHECK_THROWS_AS(Dataset({{{1.f, 2.f}, 2}}, 2, DatasetRole::ClosedTrain), InvalidArgument);
  CHECK_THROWS_AS(Dataset({{{1.f, 2.f}, -1}}, 2, DatasetRole::ClosedTrain), InvalidArgument);
  CHECK_THROWS_AS(Dataset({{{1.f, 2.f}, 0}, {{1.f}, 1}}, 2, DatasetRole::ClosedTrain), DimensionMismatch);
  CHECK_THROWS_AS(Dataset({}, 0, DatasetRole::ClosedTrain), InvalidArgument);
  CHECK_THROWS_AS(Dataset({{{1.f, 2.f}, 0}}, 2, DatasetRole::ClosedTrain, ImageShape{1, 2, 2}), DimensionMismatch);
  const Dataset ok({{{1.f, 2.f}, 0}, {{3.f, 4.f}, 1}}, 2, DatasetRole::ClosedTest);
  CHECK(ok.size() == 2);
  CHECK(ok.input_width() == 2);
  CHECK(ok.role() == DatasetRole::ClosedTest);
  CHECK(to_string(DatasetRole::OpenTest) == "open-test");
}

TEST_CASE("gaussian mixture counts, labels and determinism") {
  GaussianMixtureSpec spec = small_spec(2, 5);
  spec.dims = 2;
  const Dataset ds = generate_gaussian_mixture(spec, RngStream(1));
  CHECK(ds.size() == 10);
  std::set<std::int32_t> labels;
  for (const auto& ex : ds.examples()) labels.insert(ex.label);
  CHECK(labels == std::set<std::int32_t>{0, 1});

  CHECK(generate_gaussian_mixture(spec, RngStream(1)) == ds);
  CHECK_FALSE(generate_gaussian_mixture(spec, RngStream(2)) == ds);

  GaussianMixtureSpec bad = spec;
  bad.total_classes = 1;
  CHECK_THROWS_AS(generate_gaussian_mixture(bad, RngStream(1)), InvalidArgument);
  bad = spec;
  bad.dims = 1;
  CHECK_THROWS_AS(generate_gaussian_mixture(bad, RngStream(1)), InvalidArgument);
  bad = spec;
  bad.per_class_count = 1;
  CHECK_THROWS_AS(generate_gaussian_mixture(bad, RngStream(1)), InvalidArgument);
}

TEST_CASE("zero cluster spread puts every sample on its class center") {
  GaussianMixtureSpec spec = small_spec(3, 6);
  spec.cluster_scale = 0.0;
  const Dataset ds = generate_gaussian_mixture(spec, RngStream(5));
  std::map<std::int32_t, std::vector<float>> first;
  for (const auto& ex : ds.examples()) {
    auto [it, inserted] = first.emplace(ex.label, ex.payload);
    if (!inserted) CHECK(ex.payload == it->second);
  }
  CHECK(first.size() == 3);
  CHECK(first[0] != first[1]);
}

TEST_CASE("gradient images are shaped, bounded and class-dependent") {
  GradientImageSpec spec;
  spec.total_classes = 4;
  spec.per_class_count = 3;
  spec.shape = {2, 6, 5};
  const Dataset ds = generate_gradient_images(spec, RngStream(9));
  REQUIRE(ds.image_shape().has_value());
  CHECK(*ds.image_shape() == spec.shape);
  CHECK(ds.size() == 12);
  for (const auto& ex : ds.examples()) {
    CHECK(ex.payload.size() == 60);
    for (float v : ex.payload) {
      CHECK(v >= 0.f);
      CHECK(v <= 1.f);
    }
  }
  CHECK(ds[0].payload != ds[3].payload);
  CHECK(generate_gradient_images(spec, RngStream(9)) == ds);
}

TEST_CASE("open/closed split: 6 closed and 4 open of 10 classes") {
  const Dataset full = generate_gaussian_mixture(small_spec(10, 20), RngStream(3));
  const auto split = build_open_closed_split(full, 6, {0.6, 0.2, 0.2}, RngStream(4));
  CHECK(split.closed_classes.size() == 6);
  CHECK(split.open_classes.size() == 4);

  std::set<std::int32_t> closed(split.closed_classes.begin(), split.closed_classes.end());
  std::set<std::int32_t> open(split.open_classes.begin(), split.open_classes.end());
  for (auto c : closed) CHECK(open.count(c) == 0);

  for (const auto& ex : split.open_test.examples()) CHECK(open.count(ex.label) == 1);
  std::set<std::int32_t> reindexed;
  for (const Dataset* ds : {&split.closed_train, &split.closed_val, &split.closed_test}) {
    CHECK(ds->class_count() == 6);
    for (const auto& ex : ds->examples()) reindexed.insert(ex.label);
  }
  CHECK(reindexed == std::set<std::int32_t>{0, 1, 2, 3, 4, 5});

  // stratified: 20 per class -> 12 / 4 / 4
  std::map<std::int32_t, int> train_counts;
  for (const auto& ex : split.closed_train.examples()) ++train_counts[ex.label];
  for (const auto& [label, n] : train_counts) CHECK(n == 12);
  CHECK(split.closed_val.size() == 24);
  CHECK(split.closed_test.size() == 24);
  CHECK(split.open_test.size() == 80);

  // mapping: closed_classes[k] is the original label of re-indexed class k
  const auto& first = split.closed_train[0];
  const auto original = split.closed_classes[static_cast<std::size_t>(first.label)];
  bool found = false;
  for (const auto& ex : full.examples()) found |= (ex.payload == first.payload && ex.label == original);
  CHECK(found);
}

TEST_CASE("split conserves the example multiset") {
  const Dataset full = generate_gaussian_mixture(small_spec(5, 13), RngStream(6));
  const auto split = build_open_closed_split(full, 3, {0.5, 0.25, 0.25}, RngStream(7));
  std::multiset<std::vector<float>> joined;
  for (const Dataset* ds : {&split.closed_train, &split.closed_val, &split.closed_test, &split.open_test}) {
    for (const auto& p : payloads(*ds)) joined.insert(p);
  }
  CHECK(joined == payloads(full));
  // 13 per class: val = floor(3.25) = 3, test = 3, train gets the remainder 7
  CHECK(split.closed_train.size() == 21);
  CHECK(split.closed_val.size() == 9);
}

TEST_CASE("per-class counts follow the fractions within one example") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    RngStream rng(seed);
    const std::size_t per_class = 5 + rng.index(40);
    const Dataset full = generate_gaussian_mixture(small_spec(4, per_class), RngStream(seed));
    const double val = rng.uniform(0.1, 0.3), test = rng.uniform(0.1, 0.3);
    const SplitFractions f{1.0 - val - test, val, test};
    const auto split = build_open_closed_split(full, 2, f, RngStream(seed + 100));
    std::map<std::int32_t, int> tr, va, te;
    for (const auto& ex : split.closed_train.examples()) ++tr[ex.label];
    for (const auto& ex : split.closed_val.examples()) ++va[ex.label];
    for (const auto& ex : split.closed_test.examples()) ++te[ex.label];
    const double n = static_cast<double>(per_class);
    for (std::int32_t k = 0; k < 2; ++k) {
      CHECK(std::abs(tr[k] - n * f.train) <= 2.0);  // train absorbs both rounding remainders
      CHECK(std::abs(va[k] - n * f.val) < 1.0);
      CHECK(std::abs(te[k] - n * f.test) < 1.0);
    }
  }
}

TEST_CASE("degenerate fractions put all closed data in train") {
  const Dataset full = generate_gaussian_mixture(small_spec(3, 4), RngStream(8));
  const auto split = build_open_closed_split(full, 2, {1.0, 0.0, 0.0}, RngStream(1));
  CHECK(split.closed_train.size() == 8);
  CHECK(split.closed_val.empty());
  CHECK(split.closed_test.empty());
}

TEST_CASE("split errors") {
  const Dataset full = generate_gaussian_mixture(small_spec(3, 4), RngStream(8));
  CHECK_THROWS_AS(build_open_closed_split(full, 3, {0.6, 0.2, 0.2}, RngStream(1)), InvalidArgument);
  CHECK_THROWS_AS(build_open_closed_split(full, 0, {0.6, 0.2, 0.2}, RngStream(1)), InvalidArgument);
  CHECK_THROWS_AS(build_open_closed_split(full, 2, {0.5, 0.2, 0.2}, RngStream(1)), InvalidArgument);
  // 4 examples per class cannot give a nonempty 10% validation share
  CHECK_THROWS_AS(build_open_closed_split(full, 2, {0.8, 0.1, 0.1}, RngStream(1)), InvalidArgument);
}

TEST_CASE("split is deterministic in the stream") {
  const Dataset full = generate_gaussian_mixture(small_spec(6, 10), RngStream(2));
  const auto a = build_open_closed_split(full, 4, {0.6, 0.2, 0.2}, RngStream(5));
  const auto b = build_open_closed_split(full, 4, {0.6, 0.2, 0.2}, RngStream(5));
  CHECK(a.closed_train == b.closed_train);
  CHECK(a.open_test == b.open_test);
  CHECK(a.closed_classes == b.closed_classes);
}

TEST_CASE("batch iteration") {
  std::vector<LabeledExample> ex;
  for (int i = 0; i < 10; ++i) ex.push_back({{static_cast<float>(i)}, i % 2});
  const Dataset ds(ex, 2, DatasetRole::ClosedTrain);

  RngStream rng(1);
  const auto batches = batch_iter(ds, 4, false, rng);
  REQUIRE(batches.size() == 3);
  CHECK(batches[0].size() == 4);
  CHECK(batches[1].size() == 4);
  CHECK(batches[2].size() == 2);
  for (std::size_t b = 0, i = 0; b < batches.size(); ++b) {
    for (std::size_t r = 0; r < batches[b].size(); ++r, ++i) {
      CHECK(batches[b].inputs(r, 0) == static_cast<double>(i));
      CHECK(batches[b].labels[r] == static_cast<std::int32_t>(i % 2));
    }
  }

  RngStream r1(7), r2(7);
  const auto s1 = batch_indices(10, 3, true, r1);
  const auto s2 = batch_indices(10, 3, true, r2);
  CHECK(s1 == s2);
  std::vector<std::size_t> all;
  for (const auto& b : s1) all.insert(all.end(), b.begin(), b.end());
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 10; ++i) CHECK(all[i] == i);

  RngStream r3(1);
  CHECK_THROWS_AS(batch_indices(0, 3, false, r3), EmptyInput);
  CHECK_THROWS_AS(batch_indices(5, 0, false, r3), InvalidArgument);
}
