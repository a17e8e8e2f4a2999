#include "osrlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace osrlab {

std::string_view to_string(DatasetRole role) {
  switch (role) {
    case DatasetRole::ClosedTrain: return "closed-train";
    case DatasetRole::ClosedVal: return "closed-val";
    case DatasetRole::ClosedTest: return "closed-test";
    case DatasetRole::OpenTest: return "open-test";
    case DatasetRole::Full: return "full";
  }
  return "unknown";
}

Dataset::Dataset(std::vector<LabeledExample> examples, std::size_t class_count, DatasetRole role,
                 std::optional<ImageShape> image_shape)
    : examples_(std::move(examples)), class_count_(class_count), role_(role), image_shape_(image_shape) {
  if (class_count_ < 1) throw InvalidArgument("dataset needs at least one class");
  if (image_shape_) {
    if (image_shape_->pixels() == 0) throw InvalidArgument("image shape has zero pixels");
    input_width_ = image_shape_->pixels();
  } else if (!examples_.empty()) {
    input_width_ = examples_.front().payload.size();
  }
  for (const auto& ex : examples_) {
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= class_count_) {
      throw InvalidArgument("label " + std::to_string(ex.label) + " outside class range " + std::to_string(class_count_));
    }
    if (ex.payload.size() != input_width_) throw DimensionMismatch(input_width_, ex.payload.size());
  }
}

void GaussianMixtureSpec::validate() const {
  if (total_classes < 2) throw InvalidArgument("gaussian mixture needs total_classes >= 2");
  if (dims < 2) throw InvalidArgument("gaussian mixture needs dims >= 2");
  if (per_class_count < 2) throw InvalidArgument("gaussian mixture needs per_class_count >= 2");
  if (!(center_scale > 0.0)) throw InvalidArgument("center_scale must be positive");
  if (!(cluster_scale >= 0.0)) throw InvalidArgument("cluster_scale must be nonnegative");
}

Dataset generate_gaussian_mixture(const GaussianMixtureSpec& spec, RngStream rng) {
  spec.validate();
  RngStream center_rng = rng.derive("centers");
  RngStream sample_rng = rng.derive("samples");

  std::vector<RealVector> centers(spec.total_classes, RealVector(spec.dims));
  for (auto& c : centers) {
    for (double& v : c) v = spec.center_scale * center_rng.normal();
  }

  std::vector<LabeledExample> examples;
  examples.reserve(spec.total_classes * spec.per_class_count);
  for (std::size_t k = 0; k < spec.total_classes; ++k) {
    for (std::size_t i = 0; i < spec.per_class_count; ++i) {
      LabeledExample ex;
      ex.label = static_cast<std::int32_t>(k);
      ex.payload.resize(spec.dims);
      for (std::size_t d = 0; d < spec.dims; ++d) {
        ex.payload[d] = static_cast<float>(centers[k][d] + spec.cluster_scale * sample_rng.normal());
      }
      examples.push_back(std::move(ex));
    }
  }
  return Dataset(std::move(examples), spec.total_classes, DatasetRole::Full);
}

void GradientImageSpec::validate() const {
  if (total_classes < 2) throw InvalidArgument("gradient images need total_classes >= 2");
  if (per_class_count < 2) throw InvalidArgument("gradient images need per_class_count >= 2");
  if (shape.pixels() == 0 || shape.height < 2 || shape.width < 2) throw InvalidArgument("image shape too small");
  if (!(noise >= 0.0)) throw InvalidArgument("noise must be nonnegative");
}

Dataset generate_gradient_images(const GradientImageSpec& spec, RngStream rng) {
  spec.validate();
  const auto& s = spec.shape;
  std::vector<LabeledExample> examples;
  examples.reserve(spec.total_classes * spec.per_class_count);
  for (std::size_t k = 0; k < spec.total_classes; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(spec.total_classes);
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);
    for (std::size_t i = 0; i < spec.per_class_count; ++i) {
      LabeledExample ex;
      ex.label = static_cast<std::int32_t>(k);
      ex.payload.resize(s.pixels());
      for (std::size_t c = 0; c < s.channels; ++c) {
        const double channel_offset = 0.1 * static_cast<double>(c) * ((k % 2 == 0) ? 1.0 : -1.0);
        for (std::size_t y = 0; y < s.height; ++y) {
          const double v = static_cast<double>(y) / static_cast<double>(s.height - 1) - 0.5;
          for (std::size_t x = 0; x < s.width; ++x) {
            const double u = static_cast<double>(x) / static_cast<double>(s.width - 1) - 0.5;
            double value = 0.5 + 0.45 * (dx * u + dy * v) + channel_offset + spec.noise * rng.normal();
            value = std::clamp(value, 0.0, 1.0);
            ex.payload[(c * s.height + y) * s.width + x] = static_cast<float>(value);
          }
        }
      }
      examples.push_back(std::move(ex));
    }
  }
  return Dataset(std::move(examples), spec.total_classes, DatasetRole::Full, spec.shape);
}

OpenClosedSplit build_open_closed_split(const Dataset& full, std::size_t closed_class_count, SplitFractions fractions,
                                        RngStream rng) {
  const std::size_t total = full.class_count();
  if (closed_class_count < 1 || closed_class_count >= total) {
    throw InvalidArgument("closed_class_count must be in [1, " + std::to_string(total - 1) + "], got " +
                          std::to_string(closed_class_count));
  }
  if (!(fractions.train > 0.0) || fractions.val < 0.0 || fractions.test < 0.0 ||
      std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    throw InvalidArgument("split fractions must be nonnegative with train > 0 and sum to 1");
  }

  RngStream class_rng = rng.derive("classes");
  RngStream example_rng = rng.derive("examples");

  std::vector<std::int32_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = static_cast<std::int32_t>(i);
  class_rng.shuffle(order);
  std::vector<std::int32_t> closed(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(closed_class_count));
  std::vector<std::int32_t> open(order.begin() + static_cast<std::ptrdiff_t>(closed_class_count), order.end());
  std::sort(closed.begin(), closed.end());
  std::sort(open.begin(), open.end());

  std::vector<std::int32_t> new_label(total, -1);
  for (std::size_t k = 0; k < closed.size(); ++k) new_label[static_cast<std::size_t>(closed[k])] = static_cast<std::int32_t>(k);

  std::vector<std::vector<std::size_t>> by_class(total);
  for (std::size_t i = 0; i < full.size(); ++i) by_class[static_cast<std::size_t>(full[i].label)].push_back(i);

  std::vector<LabeledExample> train, val, test, open_examples;
  for (std::int32_t original : closed) {
    auto members = by_class[static_cast<std::size_t>(original)];
    const std::size_t n = members.size();
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions.val));
    const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions.test));
    const std::size_t n_train = n - n_val - n_test;
    if (n_train == 0 || (fractions.val > 0.0 && n_val == 0) || (fractions.test > 0.0 && n_test == 0)) {
      throw InvalidArgument("class " + std::to_string(original) + " with " + std::to_string(n) +
                            " examples is too small to split");
    }
    example_rng.shuffle(members);
    const std::int32_t label = new_label[static_cast<std::size_t>(original)];
    for (std::size_t j = 0; j < n; ++j) {
      LabeledExample ex{full[members[j]].payload, label};
      if (j < n_train) {
        train.push_back(std::move(ex));
      } else if (j < n_train + n_val) {
        val.push_back(std::move(ex));
      } else {
        test.push_back(std::move(ex));
      }
    }
  }
  for (std::int32_t original : open) {
    for (std::size_t idx : by_class[static_cast<std::size_t>(original)]) open_examples.push_back(full[idx]);
  }

  const auto shape = full.image_shape();
  return OpenClosedSplit{
      Dataset(std::move(train), closed_class_count, DatasetRole::ClosedTrain, shape),
      Dataset(std::move(val), closed_class_count, DatasetRole::ClosedVal, shape),
      Dataset(std::move(test), closed_class_count, DatasetRole::ClosedTest, shape),
      Dataset(std::move(open_examples), total, DatasetRole::OpenTest, shape),
      std::move(closed),
      std::move(open),
  };
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t example_count, std::size_t batch_size, bool shuffle,
                                                    RngStream& rng) {
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (example_count == 0) throw EmptyInput("batch_iter over empty dataset");
  std::vector<std::size_t> order;
  if (shuffle) {
    order = rng.permutation(example_count);
  } else {
    order.resize(example_count);
    for (std::size_t i = 0; i < example_count; ++i) order[i] = i;
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < example_count; start += batch_size) {
    const std::size_t stop = std::min(example_count, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start), order.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

Batch make_batch(const Dataset& ds, std::span<const std::size_t> indices) {
  Batch batch;
  batch.inputs = Matrix(indices.size(), ds.input_width());
  batch.labels.reserve(indices.size());
  batch.image_shape = ds.image_shape();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto& ex = ds[indices[r]];
    auto row = batch.inputs.row(r);
    std::copy(ex.payload.begin(), ex.payload.end(), row.begin());
    batch.labels.push_back(ex.label);
  }
  return batch;
}

std::vector<Batch> batch_iter(const Dataset& ds, std::size_t batch_size, bool shuffle, RngStream& rng) {
  std::vector<Batch> out;
  for (const auto& idx : batch_indices(ds.size(), batch_size, shuffle, rng)) out.push_back(make_batch(ds, idx));
  return out;
}

}  // namespace osrlab
