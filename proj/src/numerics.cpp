#include "osrlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace osrlab {

namespace {

template <class T>
void require_finite_t(std::span<const T> values, std::string_view what) {
  for (T v : values) {
    if (!std::isfinite(v)) throw NonFinite(std::string(what));
  }
}

template <class T>
double distance_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  require_finite_t(a, "euclidean_distance");
  require_finite_t(b, "euclidean_distance");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace

void require_finite(std::span<const double> values, std::string_view what) { require_finite_t(values, what); }

double euclidean_distance(std::span<const double> a, std::span<const double> b) { return distance_impl(a, b); }

double euclidean_distance(std::span<const float> a, std::span<const float> b) { return distance_impl(a, b); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  require_finite(a, "cosine_similarity");
  require_finite(b, "cosine_similarity");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroNorm();
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

RealVector mean_vector(std::span<const RealVector> set) {
  if (set.empty()) throw EmptyInput("mean_vector");
  const std::size_t dim = set.front().size();
  RealVector sum(dim, 0.0);
  for (const auto& v : set) {
    if (v.size() != dim) throw DimensionMismatch(dim, v.size());
    require_finite(v, "mean_vector");
    for (std::size_t i = 0; i < dim; ++i) sum[i] += v[i];
  }
  const double n = static_cast<double>(set.size());
  for (double& s : sum) s /= n;
  return sum;
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw EmptyInput("quantile");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("quantile probability outside [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double interquartile_range(std::span<const double> sample) {
  if (sample.empty()) throw EmptyInput("interquartile_range");
  require_finite(sample, "interquartile_range");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  return std::max(0.0, quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25));
}

double trapezoid_area(std::span<const Point2> points) {
  if (points.size() < 2) throw InvalidArgument("trapezoid_area needs at least 2 points");
  double area = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const double dx = points[i + 1].x - points[i].x;
    if (dx < 0.0) throw InvalidArgument("trapezoid_area: x decreases at point " + std::to_string(i + 1));
    area += dx * (points[i].y + points[i + 1].y) * 0.5;
  }
  return area;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RngStream RngStream::derive(std::string_view label) const { return RngStream(mix64(seed_ ^ mix64(fnv1a64(label)))); }

RngStream RngStream::derive(std::uint64_t index) const { return RngStream(mix64(seed_ + mix64(index + 0x5851f42d4c957f2dULL))); }

double RngStream::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double RngStream::uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

double RngStream::normal(double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(engine_);
}

std::size_t RngStream::index(std::size_t n) {
  if (n == 0) throw InvalidArgument("RngStream::index on empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

std::vector<std::size_t> RngStream::permutation(std::size_t n) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  shuffle(perm);
  return perm;
}

}  // namespace osrlab
