#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "osrlab/error.hpp"

namespace osrlab {

using RealVector = std::vector<double>;

/// Euclidean distance between two equal-length vectors, accumulated in double.
double euclidean_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const float> a, std::span<const float> b);

/// Cosine of the angle between two vectors. Throws ZeroNorm if either has
/// zero length and DimensionMismatch if the lengths differ.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Componentwise arithmetic mean of a nonempty set of equal-length vectors.
RealVector mean_vector(std::span<const RealVector> set);

/// Quantile by linear interpolation between order statistics at 1-based
/// position 1 + (n - 1) p (the "type 7" estimator). `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double p);

/// Q3 - Q1 under `quantile_sorted`.
double interquartile_range(std::span<const double> sample);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Trapezoid-rule area under a polyline with nondecreasing x.
double trapezoid_area(std::span<const Point2> points);

/// Throws NonFinite if any entry is NaN or infinite.
void require_finite(std::span<const double> values, std::string_view what);

// Dense row-major matrix of doubles. Just enough structure for the MLP and
// the batch pipelines; no decompositions.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Seeded random stream. Sub-streams are derived from the seed alone, so a
// derived stream does not depend on how many draws the parent has made.
class RngStream {
 public:
  using Engine = std::mt19937_64;

  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  RngStream derive(std::string_view label) const;
  RngStream derive(std::uint64_t index) const;

  double uniform();                                  // [0, 1)
  double uniform(double lo, double hi);              // [lo, hi)
  double normal(double mean = 0.0, double stddev = 1.0);
  std::size_t index(std::size_t n);                  // uniform in [0, n)
  std::uint64_t next_u64() { return engine_(); }

  /// Uniformly random permutation of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::uint64_t seed_;
  Engine engine_;
};

/// SplitMix64 finalizer; used for seed derivation and hashing.
std::uint64_t mix64(std::uint64_t x);

/// 64-bit FNV-1a over bytes.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace osrlab
