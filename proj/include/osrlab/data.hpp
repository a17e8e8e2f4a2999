#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "osrlab/numerics.hpp"

namespace osrlab {

enum class DatasetRole : std::uint8_t { ClosedTrain = 0, ClosedVal = 1, ClosedTest = 2, OpenTest = 3, Full = 4 };

std::string_view to_string(DatasetRole role);

struct ImageShape {
  std::size_t channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t pixels() const { return channels * height * width; }
  bool operator==(const ImageShape&) const = default;
};

struct LabeledExample {
  std::vector<float> payload;  // flat features, or channels x height x width for images
  std::int32_t label = 0;

  bool operator==(const LabeledExample&) const = default;
};

// Immutable collection of examples with a fixed role. Image datasets carry
// their shape; every payload then has shape.pixels() entries.
class Dataset {
 public:
  Dataset(std::vector<LabeledExample> examples, std::size_t class_count, DatasetRole role,
          std::optional<ImageShape> image_shape = std::nullopt);

  const std::vector<LabeledExample>& examples() const { return examples_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  const LabeledExample& operator[](std::size_t i) const { return examples_[i]; }

  std::size_t class_count() const { return class_count_; }
  DatasetRole role() const { return role_; }
  const std::optional<ImageShape>& image_shape() const { return image_shape_; }
  /// Payload width (0 for an empty flat dataset).
  std::size_t input_width() const { return input_width_; }

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<LabeledExample> examples_;
  std::size_t class_count_;
  DatasetRole role_;
  std::optional<ImageShape> image_shape_;
  std::size_t input_width_ = 0;
};

struct OpenClosedSplit {
  Dataset closed_train;
  Dataset closed_val;
  Dataset closed_test;
  Dataset open_test;
  /// closed_classes[k] is the original label of re-indexed closed class k.
  std::vector<std::int32_t> closed_classes;
  /// Original labels of the open classes; open_test keeps these labels.
  std::vector<std::int32_t> open_classes;

  std::size_t closed_class_count() const { return closed_classes.size(); }
};

struct GaussianMixtureSpec {
  std::size_t total_classes = 10;
  std::size_t dims = 16;
  std::size_t per_class_count = 300;
  double center_scale = 1.0;
  double cluster_scale = 1.4;
  std::uint64_t seed = 12345;

  void validate() const;
};

/// Class k is an isotropic Gaussian around a center drawn from
/// center_scale * N(0, I); samples spread by cluster_scale.
Dataset generate_gaussian_mixture(const GaussianMixtureSpec& spec, RngStream rng);

struct GradientImageSpec {
  std::size_t total_classes = 10;
  std::size_t per_class_count = 50;
  ImageShape shape{1, 8, 8};
  double noise = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Images whose intensity is a class-dependent linear ramp (direction and
/// offset vary by class) plus Gaussian noise, clipped to [0, 1].
Dataset generate_gradient_images(const GradientImageSpec& spec, RngStream rng);

struct SplitFractions {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

/// Randomly partitions classes into closed and open sets, splits each closed
/// class by `fractions`, and re-indexes closed labels densely. All examples
/// of open classes land in open_test with their original labels.
OpenClosedSplit build_open_closed_split(const Dataset& full, std::size_t closed_class_count,
                                        SplitFractions fractions, RngStream rng);

struct Batch {
  Matrix inputs;  // one row per example
  std::vector<std::int32_t> labels;
  std::optional<ImageShape> image_shape;

  std::size_t size() const { return labels.size(); }
};

/// Index lists covering every example exactly once, in order or shuffled.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t example_count, std::size_t batch_size, bool shuffle,
                                                    RngStream& rng);

Batch make_batch(const Dataset& ds, std::span<const std::size_t> indices);

/// One epoch of batches (see batch_indices).
std::vector<Batch> batch_iter(const Dataset& ds, std::size_t batch_size, bool shuffle, RngStream& rng);

}  // namespace osrlab
