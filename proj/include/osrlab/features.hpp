#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "osrlab/error.hpp"

namespace osrlab {

// Row-major penultimate feature vectors paired with labels. Values are
// float32-representable (they round-trip through the OSRF dump format
// unchanged) but held as double so metric accumulation stays in 64 bits.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t width) : width_(width) {}
  FeatureMatrix(std::size_t width, std::vector<double> values, std::vector<std::int32_t> labels)
      : width_(width), values_(std::move(values)), labels_(std::move(labels)) {
    if (values_.size() != width_ * labels_.size()) throw DimensionMismatch(width_ * labels_.size(), values_.size());
  }

  std::size_t rows() const { return labels_.size(); }
  std::size_t width() const { return width_; }
  bool empty() const { return labels_.empty(); }

  std::span<const double> row(std::size_t r) const { return {values_.data() + r * width_, width_}; }
  std::span<double> row(std::size_t r) { return {values_.data() + r * width_, width_}; }
  std::int32_t label(std::size_t r) const { return labels_[r]; }

  const std::vector<double>& values() const { return values_; }
  const std::vector<std::int32_t>& labels() const { return labels_; }

  void push_back(std::span<const double> row, std::int32_t label) {
    if (row.size() != width_) throw DimensionMismatch(width_, row.size());
    values_.insert(values_.end(), row.begin(), row.end());
    labels_.push_back(label);
  }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::size_t width_ = 0;
  std::vector<double> values_;
  std::vector<std::int32_t> labels_;
};

}  // namespace osrlab
