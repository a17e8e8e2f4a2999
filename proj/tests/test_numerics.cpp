#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "osrlab/numerics.hpp"

using namespace osrlab;
using doctest::Approx;

TEST_CASE("euclidean distance") {
  const RealVector o{0, 0}, p{3, 4}, one{1, 1};
  CHECK(euclidean_distance(o, p) == 5.0);
  CHECK(euclidean_distance(p, p) == 0.0);
  CHECK(euclidean_distance(one, o) == Approx(std::sqrt(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(euclidean_distance(RealVector{1, 2}, RealVector{1, 2, 3}), DimensionMismatch);

  const std::vector<float> fa{0.f, 0.f}, fb{3.f, 4.f};
  CHECK(euclidean_distance(std::span<const float>(fa), std::span<const float>(fb)) == 5.0);
}

TEST_CASE("euclidean distance satisfies the triangle inequality") {
  RngStream rng(11);
  for (int t = 0; t < 500; ++t) {
    RealVector a(7), b(7), c(7);
    for (std::size_t i = 0; i < 7; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
      c[i] = rng.normal();
    }
    CHECK(euclidean_distance(a, c) <= euclidean_distance(a, b) + euclidean_distance(b, c) + 1e-9);
    CHECK(euclidean_distance(a, b) == euclidean_distance(b, a));
  }
}

TEST_CASE("cosine similarity") {
  CHECK(cosine_similarity(RealVector{1, 0}, RealVector{0, 1}) == 0.0);
  CHECK(cosine_similarity(RealVector{1, 1}, RealVector{2, 2}) == Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(RealVector{1, 0}, RealVector{1, 1}) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(cosine_similarity(RealVector{0, 0}, RealVector{1, 1}), ZeroNorm);
  CHECK_THROWS_AS(cosine_similarity(RealVector{1, 1}, RealVector{0, 0}), ZeroNorm);
  CHECK_THROWS_AS(cosine_similarity(RealVector{1, 1}, RealVector{1, 1, 1}), DimensionMismatch);
}

TEST_CASE("cosine similarity is invariant under positive scaling") {
  RngStream rng(12);
  for (int t = 0; t < 300; ++t) {
    RealVector a(5), b(5);
    for (std::size_t i = 0; i < 5; ++i) {
      a[i] = rng.normal();
      b[i] = rng.normal();
    }
    const double base = cosine_similarity(a, b);
    const double s = rng.uniform(0.01, 100.0);
    RealVector as = a;
    for (double& v : as) v *= s;
    CHECK(std::abs(cosine_similarity(as, b) - base) < 1e-9);
    CHECK(std::abs(cosine_similarity(a, as) - 1.0) < 1e-9);
    CHECK(base >= -1.0);
    CHECK(base <= 1.0);
  }
}

TEST_CASE("mean vector") {
  const std::vector<RealVector> two{{0, 0}, {2, 2}};
  CHECK(mean_vector(two) == RealVector{1, 1});
  const std::vector<RealVector> single{{3, -1, 2}};
  CHECK(mean_vector(single) == single[0]);
  const std::vector<RealVector> cross{{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  CHECK(mean_vector(cross) == RealVector{0, 0});
  CHECK_THROWS_AS(mean_vector(std::vector<RealVector>{}), EmptyInput);
  CHECK_THROWS_AS(mean_vector(std::vector<RealVector>{{1, 2}, {1}}), DimensionMismatch);
}

TEST_CASE("mean vector of a set joined with its own mean is unchanged") {
  RngStream rng(13);
  for (int t = 0; t < 50; ++t) {
    std::vector<RealVector> set(1 + rng.index(9), RealVector(4));
    for (auto& v : set) {
      for (double& x : v) x = rng.normal();
    }
    const RealVector m = mean_vector(set);
    set.push_back(m);
    const RealVector m2 = mean_vector(set);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(std::abs(m2[i] - m[i]) < 1e-12);
  }
}

TEST_CASE("interquartile range") {
  CHECK(interquartile_range(RealVector{5, 5, 5, 5}) == 0.0);
  CHECK(interquartile_range(RealVector{1, 2, 3, 4}) == Approx(1.5).epsilon(1e-15));
  CHECK(interquartile_range(RealVector{4, 1, 3, 2}) == Approx(1.5).epsilon(1e-15));
  CHECK_THROWS_AS(interquartile_range(RealVector{}), EmptyInput);

  RealVector big(1000);
  std::iota(big.begin(), big.end(), 1.0);
  const double expected = oracle::quantile(big, 0.75) - oracle::quantile(big, 0.25);
  CHECK(std::abs(interquartile_range(big) - expected) < 1e-9);
  CHECK(expected == Approx(499.5));
}

TEST_CASE("quantile matches the interpolation oracle on random samples") {
  RngStream rng(14);
  for (int t = 0; t < 200; ++t) {
    RealVector s(1 + rng.index(40));
    for (double& v : s) v = rng.normal();
    RealVector sorted = s;
    std::sort(sorted.begin(), sorted.end());
    for (double p : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
      CHECK(std::abs(quantile_sorted(sorted, p) - oracle::quantile(s, p)) < 1e-12);
    }
  }
}

TEST_CASE("trapezoid area") {
  const std::vector<Point2> diag{{0, 0}, {1, 1}};
  const std::vector<Point2> rect{{0, 1}, {1, 1}};
  const std::vector<Point2> split{{0, 0}, {0.5, 0.5}, {1, 1}};
  CHECK(trapezoid_area(diag) == 0.5);
  CHECK(trapezoid_area(rect) == 1.0);
  CHECK(trapezoid_area(split) == 0.5);
  CHECK_THROWS_AS(trapezoid_area(std::vector<Point2>{{0, 0}}), InvalidArgument);
  CHECK_THROWS_AS(trapezoid_area(std::vector<Point2>{{0, 0}, {1, 1}, {0.5, 1}}), InvalidArgument);
}

TEST_CASE("trapezoid area of a monotone curve and its mirror against a Riemann oracle") {
  RngStream rng(15);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 2 + rng.index(12);
    std::vector<double> xs{0.0, 1.0}, ys{0.0, 1.0};
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(rng.uniform());
      ys.push_back(rng.uniform());
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    std::vector<Point2> curve, mirror;
    for (std::size_t i = 0; i < xs.size(); ++i) curve.push_back({xs[i], ys[i]});
    // reflect through (0.5, 0.5): x -> 1 - x, y -> 1 - y, reversed to keep x ascending
    for (std::size_t i = xs.size(); i-- > 0;) mirror.push_back({1.0 - xs[i], 1.0 - ys[i]});

    const double a = trapezoid_area(curve);
    const double b = trapezoid_area(mirror);
    CHECK(std::abs(a - oracle::riemann_area(curve, 200000)) < 1e-6);
    CHECK(std::abs(b - oracle::riemann_area(mirror, 200000)) < 1e-6);
    CHECK(std::abs(a + b - 1.0) < 1e-12);
  }
}

TEST_CASE("require_finite") {
  CHECK_NOTHROW(require_finite(RealVector{1, 2}, "x"));
  CHECK_THROWS_AS(require_finite(RealVector{1, std::nan("")}, "x"), NonFinite);
  CHECK_THROWS_AS(require_finite(RealVector{INFINITY}, "x"), NonFinite);
}

TEST_CASE("rng streams are reproducible and derivation ignores parent state") {
  RngStream a(42), b(42);
  for (int i = 0; i < 10000; ++i) REQUIRE(a.next_u64() == b.next_u64());

  RngStream fresh(42);
  RngStream used(42);
  for (int i = 0; i < 17; ++i) used.uniform();
  CHECK(fresh.derive("x").next_u64() == used.derive("x").next_u64());
  CHECK(fresh.derive("x").next_u64() != fresh.derive("y").next_u64());
  CHECK(fresh.derive(std::uint64_t{1}).next_u64() != fresh.derive(std::uint64_t{2}).next_u64());
  CHECK(RngStream(1).next_u64() != RngStream(2).next_u64());
}

TEST_CASE("rng permutation is a bijection") {
  RngStream rng(3);
  auto p = rng.permutation(100);
  std::sort(p.begin(), p.end());
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p[i] == i);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.index(7) < 7);
  }
}

TEST_CASE("fnv1a64 known vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}
